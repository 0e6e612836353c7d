#include "greenpc/app/config.hpp"
#include "greenpc/app/pipeline.hpp"
#include "greenpc/error.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace greenpc;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::optional<double> epoch_fraction;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "overrides the configured seed");
  cmd->add_option("--out", c.out, "output directory (defaults to the configured one)");
}

app::ExperimentConfig resolve(const Common& c, fs::path& out) {
  app::ExperimentConfig cfg = app::load_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.training.config.seed = *c.seed;
  }
  if (c.epoch_fraction) cfg.training.epoch_fraction = *c.epoch_fraction;
  if (!c.checkpoint.empty()) cfg.checkpoint = c.checkpoint;
  cfg.validate();
  out = c.out.empty() ? cfg.output_dir : fs::path(c.out);
  fs::create_directories(out);
  return cfg;
}

int report_error(const std::string& kind, const std::string& message, const fs::path& out) {
  const nlohmann::json j = {{"error", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream(out / "error.json") << j.dump(2) << '\n';
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Neural Green's function preconditioners"};
  cli.require_subcommand(1);

  Common c;
  int eval_n = 0;
  double eval_theta = 0.0;

  auto* train = cli.add_subcommand("train", "train the network and write checkpoints and loss curves");
  add_common(train, c);
  train->add_option("--epoch-fraction", c.epoch_fraction, "scale every stage's epoch count");

  auto* compress = cli.add_subcommand("compress", "compress the trained kernel at every grid size");
  add_common(compress, c);
  compress->add_option("--checkpoint", c.checkpoint);

  auto* solve = cli.add_subcommand("solve", "run FGMRES with each configured preconditioner");
  add_common(solve, c);
  solve->add_option("--checkpoint", c.checkpoint);

  auto* suite = cli.add_subcommand("suite", "train if needed, then solve and write all outputs");
  add_common(suite, c);
  suite->add_option("--checkpoint", c.checkpoint);
  suite->add_option("--epoch-fraction", c.epoch_fraction, "scale every stage's epoch count");

  auto* eval = cli.add_subcommand("eval-kernel", "tabulate the kernel on a grid");
  add_common(eval, c);
  eval->add_option("--checkpoint", c.checkpoint);
  eval->add_option("--n", eval_n, "interior nodes per axis (defaults to the first grid size)");
  eval->add_option("--theta", eval_theta, "parameter value");

  CLI11_PARSE(cli, argc, argv);

  fs::path out;
  try {
    const app::ExperimentConfig cfg = resolve(c, out);
    std::ostream* log = &std::cout;

    if (train->parsed()) {
      app::train_model(cfg, out, log);
    } else if (suite->parsed()) {
      app::run_suite(cfg, out, log);
    } else {
      const nn::MsnnModel model = app::load_model(cfg, app::checkpoint_path(cfg, out));
      if (solve->parsed()) {
        app::solve_suite(cfg, model, out, log);
      } else if (compress->parsed()) {
        nlohmann::json stats = nlohmann::json::array();
        const auto kind = cfg.compression.format == app::FormatChoice::sparse      ? app::Preconditioner::sparse
                          : cfg.compression.format == app::FormatChoice::automatic ? app::Preconditioner::automatic
                                                                                   : app::Preconditioner::hmatrix;
        const std::vector<double> thetas =
            cfg.problem.parametric() ? cfg.problem.solve_params : std::vector<double>{0.0};
        for (int n : cfg.problem.grid_sizes)
          for (double theta : thetas) {
            const auto pc = app::build_preconditioner(kind, model, pde::make_grid(cfg.problem.dim, n), theta, cfg);
            stats.push_back({{"N", n}, {"theta", theta}, {"stats", pc.stats}});
            std::cout << "N=" << n << " theta=" << theta << " " << pc.stats.dump() << std::endl;
          }
        std::ofstream(out / "hmatrix_stats.json") << stats.dump(2) << '\n';
      } else if (eval->parsed()) {
        const int n = eval_n > 0 ? eval_n : cfg.problem.grid_sizes.front();
        const pde::Grid grid = pde::make_grid(cfg.problem.dim, n);
        const Eigen::MatrixXd table = app::eval_kernel_grid(model, grid.interior(), grid.interior(), eval_theta);
        std::ofstream os(out / "kernel_table.csv");
        os.precision(12);
        for (Eigen::Index i = 0; i < table.rows(); ++i) {
          for (Eigen::Index j = 0; j < table.cols(); ++j) os << (j ? "," : "") << table(i, j);
          os << '\n';
        }
        if (!cfg.output.slice_sources.empty()) {
          std::ofstream ss(out / "kernel_slices.csv");
          app::write_kernel_slices(model, cfg.output, ss);
        }
      }
    }
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), out);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), out);
  }
  return 0;
}
