#include "greenpc/train/config.hpp"

#include "greenpc/error.hpp"

namespace greenpc::train {

void TrainConfig::validate() const {
  if (epochs_per_stage.empty()) throw ConfigError("epochs_per_stage is empty");
  for (int e : epochs_per_stage)
    if (e < 1) throw ConfigError("epochs per stage must be positive");
  if (batches_per_epoch < 1) throw ConfigError("batches_per_epoch must be positive");
  if (batch.boundary < 1 || batch.anchors < 1 || batch.uniform < 1 || batch.near_diagonal < 1)
    throw ConfigError("batch counts must be positive");
  if (!(adam.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(w_aux_floor > 0.0) || w_aux_floor > w_aux_start) throw ConfigError("w_aux floor must lie in (0, start]");
  if (dd_epochs < 0) throw ConfigError("dd_epochs must be nonnegative");
  if (anchor_pool < 1) throw ConfigError("anchor_pool must be positive");
  if (!(near_radius > 0.0)) throw ConfigError("near_radius must be positive");
  if (!(theta_max > theta_min)) throw ConfigError("empty theta range");
}

}  // namespace greenpc::train
