#pragma once

#include "greenpc/nn/model.hpp"

#include <json.hpp>

#include <filesystem>

namespace greenpc::nn {

nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

struct Checkpoint {
  MsnnModel model;
  nlohmann::json extra;
};

/// Binary container: "GPCK", format version, JSON metadata, raw parameter doubles.
void save_checkpoint(const MsnnModel& model, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace greenpc::nn
