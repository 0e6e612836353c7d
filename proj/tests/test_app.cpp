#include "greenpc/app/config.hpp"
#include "greenpc/app/pipeline.hpp"
#include "greenpc/error.hpp"
#include "greenpc/nn/checkpoint.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace greenpc;
using namespace greenpc::app;
namespace fs = std::filesystem;

namespace {

const fs::path kPresets = GREENPC_SOURCE_DIR "/configs/presets";
const fs::path kData = GREENPC_SOURCE_DIR "/tests/data";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("greenpc_test_app_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_training_batch(const train::TrainConfig& t) {
  CHECK(t.batches_per_epoch == 20);
  CHECK(t.batch.boundary == 500);
  CHECK(t.batch.anchors == 500);
  CHECK(t.batch.uniform == 500);
  CHECK(t.batch.near_diagonal == 1500);
  CHECK(t.anchor_pool == 1024);
  CHECK(t.near_radius == 3.0);
}

void check_solver(const SolverConfig& s) {
  CHECK(s.restart == 50);
  CHECK(s.tol == 1e-6);
  CHECK(s.max_iterations == 500);
  CHECK(s.rhs_seeds.size() == 3);
}

}  // namespace

TEST_CASE("1D presets carry the published settings") {
  for (const char* name : {"oned_convection.json", "oned_reaction.json"}) {
    const ExperimentConfig c = load_config(kPresets / name);
    CHECK(c.model.eps_schedule == std::vector<double>{1e-2, 1e-3, 1e-4});
    CHECK(c.model.level_widths == std::vector<int>{10, 15, 20});
    CHECK(c.model.far_width == 50);
    CHECK(c.model.far_layers == 3);
    CHECK(c.model.body_layers == 3);
    CHECK(c.model.aux_width == 5);
    CHECK(c.model.branches == 2);
    CHECK(c.model.gate_seeds == std::vector<std::vector<double>>{{0.0}, {0.5}, {1.0}});
    CHECK(c.training.config.epochs_per_stage == std::vector<int>{500, 500, 1000});
    CHECK(c.training.config.dd_epochs == 3000);
    check_training_batch(c.training.config);
    CHECK(c.problem.anchor_grid == 34);
    CHECK(c.problem.grid_sizes == std::vector<int>{8, 16, 32, 64, 128, 256, 512, 1024, 2048});
    CHECK(c.compression.eta == 1.0);
    CHECK(c.compression.leaf_size(2048) == 45);
    CHECK(c.compression.leaf_size(100000) == 128);
    CHECK(c.compression.rank_initial == 3);
    CHECK(c.compression.rank_final == 1);
    CHECK(c.compression.pivots == compress::Pivots::nearest);
    check_solver(c.solver);
  }
  const auto conv = load_config(kPresets / "oned_convection.json").problem;
  const auto field = conv.field();
  Eigen::VectorXd x(1);
  x << 0.3;
  CHECK(field.a(x)(0, 0) == 0.01);
  CHECK(field.b(x)(0) == doctest::Approx(1.09));
  CHECK(field.c(x) == 0.0);
  CHECK(conv.scheme == pde::Scheme::upwind_convection);
  const auto react = load_config(kPresets / "oned_reaction.json").problem.field();
  CHECK(react.a(x)(0, 0) == 1.0);
  CHECK(react.c(x) == doctest::Approx(-50 * 1.09));
}

TEST_CASE("2D presets carry the published settings") {
  for (const char* name : {"twod_convection.json", "twod_reaction.json"}) {
    const ExperimentConfig c = load_config(kPresets / name);
    CHECK(c.model.eps_schedule == std::vector<double>{1e-2, 5e-3, 2e-3});
    CHECK(c.model.level_widths == std::vector<int>{10, 15, 20});
    CHECK(c.model.replicas == 5);
    CHECK(c.training.config.epochs_per_stage == std::vector<int>{1000, 1000, 1000});
    CHECK(c.training.config.dd_epochs == 2000);
    check_training_batch(c.training.config);
    CHECK(c.problem.grid_sizes == std::vector<int>{32, 48, 64, 96, 128});
    CHECK(c.compression.eta == 0.7);
    CHECK(c.compression.leaf_size(64) == 64);
    CHECK(c.compression.leaf_size(96) == 128);
    CHECK(c.compression.rank_rule(64).base_rank == 10);
    CHECK(c.compression.rank_rule(96).base_rank == 20);
    CHECK(c.compression.rank_rule(96).pivots == compress::Pivots::random);
    check_solver(c.solver);
  }
  Eigen::VectorXd x(2);
  x << 0.2, 0.5;
  const auto conv = load_config(kPresets / "twod_convection.json").problem.field();
  CHECK(conv.a(x)(0, 0) == doctest::Approx(0.01 * 1.29));
  CHECK(conv.a(x)(0, 1) == 0.0);
  CHECK(conv.b(x)(0) == doctest::Approx(1.25));
  CHECK(conv.b(x)(1) == doctest::Approx(1.04));
  const auto react = load_config(kPresets / "twod_reaction.json").problem.field();
  CHECK(react.c(x) == doctest::Approx(-10 * 1.29));
}

TEST_CASE("parametric preset carries the published settings") {
  const ExperimentConfig c = load_config(kPresets / "rotated_laplacian.json");
  CHECK(c.model.parametric);
  CHECK(c.model.level_widths == std::vector<int>{20, 30, 40});
  CHECK(c.model.far_width == 100);
  CHECK(c.model.replicas == 9);
  CHECK(c.model.gate_input == nn::GateInput::parameter);
  CHECK(c.training.config.epochs_per_stage == std::vector<int>{1000, 1000, 1000});
  CHECK(c.training.config.dd_epochs == 1000);
  CHECK(c.problem.grid_sizes == std::vector<int>{98});
  const double pi = std::numbers::pi;
  CHECK(c.problem.anchor_params == std::vector<double>{0.0, pi / 4, pi / 2, 3 * pi / 4});
  CHECK(c.problem.constants.at("xi") == 0.1);
  const auto field = c.problem.field();
  Eigen::VectorXd x(2);
  x << 0.3, 0.3;
  const double t = 0.4;
  CHECK(field.a(x, t)(0, 0) == doctest::Approx(std::cos(t) * std::cos(t) + 0.1 * std::sin(t) * std::sin(t)));
  CHECK(field.a(x, t)(0, 1) == doctest::Approx(std::cos(t) * std::sin(t) * 0.9));
}

TEST_CASE("config schema") {
  CHECK_THROWS_AS(load_config(kData / "bad_key.json"), SchemaError);
  nlohmann::json j = to_json(load_config(kData / "tiny_1d.json"));
  CHECK(to_json(parse_config(j)) == j);
  for (const auto& entry : fs::directory_iterator(kPresets)) {
    const auto c = load_config(entry.path());
    CHECK(to_json(parse_config(to_json(c))) == to_json(c));
  }

  auto bad = j;
  bad["model"]["level_widths"] = "wide";
  CHECK_THROWS_AS(parse_config(bad), SchemaError);
  bad = j;
  bad["training"]["epochs_per_stage"] = {1, 1};
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = j;
  bad["solver"]["preconditioners"] = {"ilu"};
  CHECK_THROWS_AS(parse_config(bad), SchemaError);
  bad = j;
  bad["problem"]["c"] = "1 +";
  CHECK_THROWS(parse_config(bad));

  ExperimentConfig c = load_config(kData / "tiny_1d.json");
  c.training.epoch_fraction = 0.25;
  c.training.config.epochs_per_stage = {500};
  c.training.config.dd_epochs = 3000;
  CHECK(c.training.scaled().epochs_per_stage == std::vector<int>{125});
  CHECK(c.training.scaled().dd_epochs == 750);
  CHECK(c.compression.budget_bytes(1, 34) == 1e8);
  c.compression.memory_budget.reset();
  CHECK(c.compression.budget_bytes(1, 34) == 4.0 * 34 * 34 * 8);
  CHECK(c.compression.sparse_p(1) == 9);
  CHECK(c.compression.sparse_p(2) == 27);
}

TEST_CASE("kernel tables") {
  const ExperimentConfig c = load_config(kData / "tiny_1d.json");
  Rng rng(1);
  nn::MsnnModel model(c.model, rng);
  model.add_level(rng);
  const pde::Grid grid = pde::make_grid(1, 64);
  const Eigen::MatrixXd T = eval_kernel_grid(model, grid.interior(), grid.interior());
  REQUIRE(T.rows() == 64);
  REQUIRE(T.cols() == 64);
  for (Eigen::Index i = 0; i < 64; i += 7)
    for (Eigen::Index j = 0; j < 64; j += 5)
      CHECK(T(i, j) == doctest::Approx(nn::eval(model, grid.point(i), grid.point(j))).epsilon(1e-13));

  for (auto& p : model.parameters()) p.value->setZero();
  CHECK(eval_kernel_grid(model, grid.interior(), grid.interior()).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(eval_kernel_grid(model, Eigen::MatrixXd::Zero(2, 3), grid.interior()), SchemaError);
}

TEST_CASE("preconditioner construction") {
  const ExperimentConfig c = load_config(kData / "tiny_1d.json");
  Rng rng(2);
  nn::MsnnModel model(c.model, rng);
  model.add_level(rng);
  const pde::Grid grid = pde::make_grid(1, 32);
  const Eigen::MatrixXd T = eval_kernel_grid(model, grid.interior(), grid.interior());
  const Eigen::VectorXd v = krylov::make_rhs(32, 4);

  const auto dense = build_preconditioner(Preconditioner::dense, model, grid, 0.0, c);
  REQUIRE(dense.op);
  CHECK(((*dense.op)(v) - T * v).norm() <= 1e-12 * (T * v).norm());

  const auto h = build_preconditioner(Preconditioner::hmatrix, model, grid, 0.0, c);
  REQUIRE(h.op);
  CHECK(h.stats.contains("compression_ratio"));
  CHECK(h.stats.contains("eps_H"));

  ExperimentConfig small_cap = c;
  small_cap.solver.dense_cap_bytes = 100;
  const auto forced = build_preconditioner(Preconditioner::dense, model, grid, 0.0, small_cap);
  CHECK(forced.kind == Preconditioner::hmatrix);
  CHECK(forced.stats.at("forced_from_dense") == true);

  const auto none = build_preconditioner(Preconditioner::none, model, grid, 0.0, c);
  CHECK_FALSE(none.op);

  const auto choice = build_preconditioner(Preconditioner::automatic, model, grid, 0.0, c);
  CHECK(choice.stats.contains("chooser"));
}

TEST_CASE("suite runs are reproducible") {
  const ExperimentConfig c = load_config(kData / "tiny_1d.json");
  const fs::path a = scratch("a"), b = scratch("b");
  const SuiteResult ra = run_suite(c, a);
  run_suite(c, b);
  CHECK(slurp(a / "iterations.csv") == slurp(b / "iterations.csv"));
  CHECK(fs::exists(a / "checkpoint.gpck"));
  CHECK(fs::exists(a / "loss_stage1.csv"));
  CHECK(fs::exists(a / "kernel_slices.csv"));
  CHECK(fs::exists(a / "hmatrix_stats.json"));
  CHECK(fs::exists(a / "residuals" / "N16_theta0_dense_seed1.csv"));
  CHECK(ra.runs.size() == 2 * 4);
  const RunRecord* r = ra.find(16, Preconditioner::none);
  REQUIRE(r);
  CHECK(r->iterations.size() == 2);
  CHECK(r->all_converged());

  // A second run reuses the checkpoint instead of training.
  const auto before = fs::last_write_time(a / "checkpoint.gpck");
  run_suite(c, a);
  CHECK(fs::last_write_time(a / "checkpoint.gpck") == before);
  CHECK(slurp(a / "iterations.csv") == slurp(b / "iterations.csv"));

  std::ostringstream csv;
  write_iterations_csv(ra, csv);
  CHECK(csv.str().rfind("N,theta,preconditioner,mean_iterations,std_iterations,runs,status\n", 0) == 0);
}

TEST_CASE("stage errors carry the stage name") {
  ExperimentConfig c = load_config(kData / "tiny_1d.json");
  c.training.enabled = false;
  const fs::path out = scratch("missing");
  try {
    run_suite(c, out);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("train:", 0) == 0);
  }

  ExperimentConfig other = load_config(kData / "tiny_1d.json");
  const fs::path dir = scratch("mismatch");
  train_model(other, dir);
  other.model.level_widths = {5};
  CHECK_THROWS_AS(load_model(other, dir / "checkpoint.gpck"), SchemaError);
}
