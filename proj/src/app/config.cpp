#include "greenpc/app/config.hpp"

#include "greenpc/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace greenpc::app {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw SchemaError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key) {
    if (!j_.contains(key)) throw SchemaError(path_ + "." + key + ": missing");
    return convert<T>(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) {
      used_.insert(key);
      return fallback;
    }
    return convert<T>(key);
  }

  Section child(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw SchemaError(path_ + "." + key + ": unknown key");
  }

private:
  template <class T>
  T convert(const std::string& key) {
    used_.insert(key);
    try {
      return j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw SchemaError(path_ + "." + key + ": " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class E>
E enum_from(const std::string& s, const std::vector<std::pair<std::string, E>>& table, const std::string& what) {
  for (const auto& [name, value] : table)
    if (name == s) return value;
  throw SchemaError("unknown " + what + " '" + s + "'");
}

template <class E>
std::string enum_name(E v, const std::vector<std::pair<std::string, E>>& table) {
  for (const auto& [name, value] : table)
    if (value == v) return name;
  return "?";
}

const std::vector<std::pair<std::string, pde::Scheme>> kSchemes{{"central", pde::Scheme::central},
                                                                {"upwind", pde::Scheme::upwind_convection}};
const std::vector<std::pair<std::string, LeafRule>> kLeafRules{
    {"sqrt_capped", LeafRule::sqrt_capped}, {"tiered", LeafRule::tiered}, {"fixed", LeafRule::fixed}};
const std::vector<std::pair<std::string, RankKind>> kRankKinds{
    {"fixed", RankKind::fixed}, {"log_scaled", RankKind::log_scaled}, {"adaptive", RankKind::adaptive}};
const std::vector<std::pair<std::string, FormatChoice>> kFormats{
    {"auto", FormatChoice::automatic}, {"sparse", FormatChoice::sparse}, {"hmatrix", FormatChoice::hmatrix}};
const std::vector<std::pair<std::string, compress::Distance>> kDistances{{"box", compress::Distance::box},
                                                                         {"center", compress::Distance::center}};
const std::vector<std::pair<std::string, compress::Pivots>> kPivots{{"nearest", compress::Pivots::nearest},
                                                                    {"random", compress::Pivots::random}};
const std::vector<std::pair<std::string, Preconditioner>> kPreconditioners{
    {"none", Preconditioner::none},
    {"dense", Preconditioner::dense},
    {"hmatrix", Preconditioner::hmatrix},
    {"sparse", Preconditioner::sparse},
    {"auto", Preconditioner::automatic}};

ProblemConfig parse_problem(Section s) {
  ProblemConfig p;
  p.dim = s.get<int>("dim");
  p.a = s.get<std::vector<std::vector<std::string>>>("a");
  p.b = s.get<std::vector<std::string>>("b");
  p.c = s.get<std::string>("c", "0");
  p.constants = s.get<std::map<std::string, double>>("constants", {});
  p.scheme = enum_from(s.get<std::string>("scheme", "central"), kSchemes, "scheme");
  p.grid_sizes = s.get<std::vector<int>>("grid_sizes");
  p.anchor_grid = s.get<int>("anchor_grid", 34);
  p.anchor_params = s.get<std::vector<double>>("anchor_params", {});
  p.solve_params = s.get<std::vector<double>>("solve_params", {});
  s.finish();
  return p;
}

nn::Architecture parse_model(Section s) {
  nn::Architecture a;
  a.dim = s.get<int>("dim");
  a.parametric = s.get<bool>("parametric", false);
  a.eps_schedule = s.get<std::vector<double>>("eps_schedule");
  a.level_widths = s.get<std::vector<int>>("level_widths");
  a.branches = s.get<int>("branches", a.branches);
  a.body_layers = s.get<int>("body_layers", a.body_layers);
  a.far_width = s.get<int>("far_width", a.far_width);
  a.far_layers = s.get<int>("far_layers", a.far_layers);
  a.aux_width = s.get<int>("aux_width", a.aux_width);
  a.aux_layers = s.get<int>("aux_layers", a.aux_layers);
  a.gate_seeds = s.get<std::vector<std::vector<double>>>("gate_seeds", {});
  a.replicas = static_cast<int>(a.gate_seeds.size());
  const std::string gi = s.get<std::string>("gate_input", "source");
  if (gi == "parameter")
    a.gate_input = nn::GateInput::parameter;
  else if (gi != "source")
    throw SchemaError("unknown gate_input '" + gi + "'");
  s.finish();
  return a;
}

TrainingSection parse_training(Section s) {
  TrainingSection t;
  train::TrainConfig& c = t.config;
  t.enabled = s.get<bool>("enabled", true);
  t.epoch_fraction = s.get<double>("epoch_fraction", 1.0);
  c.epochs_per_stage = s.get<std::vector<int>>("epochs_per_stage");
  c.dd_epochs = s.get<int>("dd_epochs", 0);
  c.batches_per_epoch = s.get<int>("batches_per_epoch", c.batches_per_epoch);
  Section b = s.child("batch");
  c.batch.boundary = b.get<int>("boundary", c.batch.boundary);
  c.batch.anchors = b.get<int>("anchors", c.batch.anchors);
  c.batch.uniform = b.get<int>("uniform", c.batch.uniform);
  c.batch.near_diagonal = b.get<int>("near_diagonal", c.batch.near_diagonal);
  b.finish();
  c.anchor_pool = s.get<int>("anchor_pool", c.anchor_pool);
  c.near_radius = s.get<double>("near_radius", c.near_radius);
  c.adam.lr = s.get<double>("lr", c.adam.lr);
  c.stage_lr_decay = s.get<double>("stage_lr_decay", c.stage_lr_decay);
  c.dd_shared_lr_scale = s.get<double>("dd_shared_lr_scale", c.dd_shared_lr_scale);
  c.dd_perturbation = s.get<double>("dd_perturbation", c.dd_perturbation);
  c.w_res = s.get<double>("w_res", c.w_res);
  c.w_bc = s.get<double>("w_bc", c.w_bc);
  c.w_aux_start = s.get<double>("w_aux_start", c.w_aux_start);
  c.w_aux_floor = s.get<double>("w_aux_floor", c.w_aux_floor);
  c.use_anchors = s.get<bool>("use_anchors", c.use_anchors);
  c.gate_pretrain_steps = s.get<int>("gate_pretrain_steps", c.gate_pretrain_steps);
  c.gate_target = s.get<double>("gate_target", c.gate_target);
  c.divergence_factor = s.get<double>("divergence_factor", c.divergence_factor);
  s.finish();
  return t;
}

CompressionConfig parse_compression(Section s) {
  CompressionConfig c;
  c.format = enum_from(s.get<std::string>("format", "hmatrix"), kFormats, "format");
  c.eta = s.get<double>("eta", c.eta);
  c.distance = enum_from(s.get<std::string>("distance", "box"), kDistances, "distance");
  c.pivots = enum_from(s.get<std::string>("pivots", "nearest"), kPivots, "pivots");
  Section leaf = s.child("leaf");
  c.leaf = enum_from(leaf.get<std::string>("rule", "sqrt_capped"), kLeafRules, "leaf rule");
  c.leaf_cap = leaf.get<int>("cap", c.leaf_cap);
  c.leaf_small = leaf.get<int>("small", c.leaf_small);
  c.leaf_large = leaf.get<int>("large", c.leaf_large);
  c.leaf_threshold = leaf.get<int>("threshold", c.leaf_threshold);
  c.leaf_fixed = leaf.get<int>("size", c.leaf_fixed);
  leaf.finish();
  Section rank = s.child("rank");
  c.rank = enum_from(rank.get<std::string>("rule", "fixed"), kRankKinds, "rank rule");
  c.rank_initial = rank.get<int>("initial", c.rank_initial);
  c.rank_final = rank.get<int>("final", c.rank_final);
  c.rank_small = rank.get<int>("base_small", c.rank_small);
  c.rank_large = rank.get<int>("base_large", c.rank_large);
  c.rank_threshold = rank.get<int>("threshold", c.rank_threshold);
  c.rank_tau = rank.get<double>("tau", c.rank_tau);
  rank.finish();
  c.validation_tau = s.get<double>("validation_tau", c.validation_tau);
  c.validation_samples = s.get<int>("validation_samples", c.validation_samples);
  if (s.has("memory_budget")) c.memory_budget = s.get<double>("memory_budget");
  Section loc = s.child("locality");
  c.locality_radius = loc.get<double>("radius", c.locality_radius);
  c.locality_p = loc.get<int>("p", c.locality_p);
  c.locality_tau = loc.get<double>("tau", c.locality_tau);
  loc.finish();
  s.finish();
  return c;
}

SolverConfig parse_solver(Section s) {
  SolverConfig c;
  c.restart = s.get<int>("restart", c.restart);
  c.tol = s.get<double>("tol", c.tol);
  c.max_iterations = s.get<int>("max_iterations", c.max_iterations);
  c.rhs_seeds = s.get<std::vector<std::uint64_t>>("rhs_seeds", c.rhs_seeds);
  if (s.has("preconditioners")) {
    c.preconditioners.clear();
    for (const auto& name : s.get<std::vector<std::string>>("preconditioners"))
      c.preconditioners.push_back(preconditioner_from_string(name));
  }
  c.dense_cap_bytes = s.get<double>("dense_cap_bytes", c.dense_cap_bytes);
  s.finish();
  return c;
}

OutputConfig parse_output(Section s) {
  OutputConfig o;
  o.slice_sources = s.get<std::vector<std::vector<double>>>("slice_sources", {});
  o.slice_params = s.get<std::vector<double>>("slice_params", {});
  o.slice_grid = s.get<int>("slice_grid", o.slice_grid);
  s.finish();
  return o;
}

}  // namespace

pde::CoefficientField ProblemConfig::field() const {
  if (dim != 1 && dim != 2) throw ConfigError("problem dimension must be 1 or 2");
  if (static_cast<int>(a.size()) != dim || static_cast<int>(b.size()) != dim)
    throw ConfigError("coefficient shapes do not match the dimension");
  std::vector<std::vector<pde::Expression>> ae(dim);
  for (int p = 0; p < dim; ++p) {
    if (static_cast<int>(a[p].size()) != dim) throw ConfigError("diffusion tensor must be dim x dim");
    for (int q = 0; q < dim; ++q) ae[p].push_back(pde::Expression::parse(a[p][q], constants));
  }
  std::vector<pde::Expression> be;
  for (const auto& e : b) be.push_back(pde::Expression::parse(e, constants));
  return pde::CoefficientField::from_expressions(dim, ae, be, pde::Expression::parse(c, constants));
}

train::TrainConfig TrainingSection::scaled() const {
  train::TrainConfig c = config;
  auto scale = [&](int e) { return std::max(1, static_cast<int>(std::lround(e * epoch_fraction))); };
  for (int& e : c.epochs_per_stage) e = scale(e);
  if (c.dd_epochs > 0) c.dd_epochs = scale(c.dd_epochs);
  return c;
}

int CompressionConfig::leaf_size(int n_per_axis) const {
  switch (leaf) {
    case LeafRule::sqrt_capped: {
      const int n_total = n_per_axis;
      return std::max(1, std::min(static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_total)))), leaf_cap));
    }
    case LeafRule::tiered:
      return n_per_axis <= leaf_threshold ? leaf_small : leaf_large;
    case LeafRule::fixed:
      return leaf_fixed;
  }
  return leaf_fixed;
}

compress::RankRule CompressionConfig::rank_rule(int n_per_axis) const {
  compress::RankRule r;
  switch (rank) {
    case RankKind::fixed:
      r = compress::RankRule::fixed(rank_initial, rank_final);
      break;
    case RankKind::log_scaled:
      r = compress::RankRule::log_scaled(n_per_axis <= rank_threshold ? rank_small : rank_large);
      break;
    case RankKind::adaptive:
      r = compress::RankRule::adaptive(rank_tau);
      break;
  }
  r.pivots = rank == RankKind::fixed ? pivots : r.pivots;
  return r;
}

double CompressionConfig::budget_bytes(int dim, int anchor_grid) const {
  if (memory_budget) return *memory_budget;
  const double coarse = std::pow(static_cast<double>(anchor_grid), dim);
  return 4.0 * coarse * coarse * sizeof(double);
}

int CompressionConfig::sparse_p(int dim) const {
  if (locality_p > 0) return locality_p;
  int p = 3;
  for (int d = 0; d < dim; ++d) p *= 3;
  return p;
}

void ExperimentConfig::validate() const {
  if (problem.dim != model.dim) throw ConfigError("problem and model dimensions differ");
  if (problem.parametric() != model.parametric) throw ConfigError("parametric flags of problem and model differ");
  if (problem.grid_sizes.empty()) throw ConfigError("grid_sizes is empty");
  for (int n : problem.grid_sizes)
    if (n < 2) throw ConfigError("grid sizes must be at least 2");
  if (problem.anchor_grid < 2) throw ConfigError("anchor_grid must be at least 2");
  model.validate();
  if (training.enabled) {
    if (training.config.epochs_per_stage.size() != model.eps_schedule.size())
      throw ConfigError("epochs_per_stage must list one count per eps level");
    if (!(training.epoch_fraction > 0.0)) throw ConfigError("epoch_fraction must be positive");
    training.scaled().validate();
  }
  if (!(compression.eta > 0.0)) throw ConfigError("eta must be positive");
  if (compression.validation_samples < 1) throw ConfigError("validation_samples must be positive");
  if (solver.restart < 1 || solver.max_iterations < 1) throw ConfigError("solver limits must be positive");
  if (!(solver.tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (solver.rhs_seeds.empty()) throw ConfigError("at least one rhs seed is required");
  problem.field();
}

ExperimentConfig parse_config(const json& j) {
  Section root(j, "config");
  ExperimentConfig c;
  c.name = root.get<std::string>("name");
  c.problem = parse_problem(root.child("problem"));
  c.model = parse_model(root.child("model"));
  c.training = parse_training(root.child("training"));
  c.compression = parse_compression(root.child("compression"));
  c.solver = parse_solver(root.child("solver"));
  c.output = parse_output(root.child("output"));
  c.output_dir = root.get<std::string>("output_dir", "out");
  c.checkpoint = root.get<std::string>("checkpoint", "");
  c.seed = root.get<std::uint64_t>("seed", 0);
  c.training.config.seed = c.seed;
  root.finish();
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  const auto& p = c.problem;
  const auto& t = c.training.config;
  const auto& k = c.compression;
  std::vector<std::string> pcs;
  for (auto pc : c.solver.preconditioners) pcs.push_back(to_string(pc));
  json j = {
      {"name", c.name},
      {"problem",
       {{"dim", p.dim},
        {"a", p.a},
        {"b", p.b},
        {"c", p.c},
        {"constants", p.constants},
        {"scheme", enum_name(p.scheme, kSchemes)},
        {"grid_sizes", p.grid_sizes},
        {"anchor_grid", p.anchor_grid},
        {"anchor_params", p.anchor_params},
        {"solve_params", p.solve_params}}},
      {"model",
       {{"dim", c.model.dim},
        {"parametric", c.model.parametric},
        {"eps_schedule", c.model.eps_schedule},
        {"level_widths", c.model.level_widths},
        {"branches", c.model.branches},
        {"body_layers", c.model.body_layers},
        {"far_width", c.model.far_width},
        {"far_layers", c.model.far_layers},
        {"aux_width", c.model.aux_width},
        {"aux_layers", c.model.aux_layers},
        {"gate_seeds", c.model.gate_seeds},
        {"gate_input", c.model.gate_input == nn::GateInput::parameter ? "parameter" : "source"}}},
      {"training",
       {{"enabled", c.training.enabled},
        {"epoch_fraction", c.training.epoch_fraction},
        {"epochs_per_stage", t.epochs_per_stage},
        {"dd_epochs", t.dd_epochs},
        {"batches_per_epoch", t.batches_per_epoch},
        {"batch",
         {{"boundary", t.batch.boundary},
          {"anchors", t.batch.anchors},
          {"uniform", t.batch.uniform},
          {"near_diagonal", t.batch.near_diagonal}}},
        {"anchor_pool", t.anchor_pool},
        {"near_radius", t.near_radius},
        {"lr", t.adam.lr},
        {"stage_lr_decay", t.stage_lr_decay},
        {"dd_shared_lr_scale", t.dd_shared_lr_scale},
        {"dd_perturbation", t.dd_perturbation},
        {"w_res", t.w_res},
        {"w_bc", t.w_bc},
        {"w_aux_start", t.w_aux_start},
        {"w_aux_floor", t.w_aux_floor},
        {"use_anchors", t.use_anchors},
        {"gate_pretrain_steps", t.gate_pretrain_steps},
        {"gate_target", t.gate_target},
        {"divergence_factor", t.divergence_factor}}},
      {"compression",
       {{"format", enum_name(k.format, kFormats)},
        {"eta", k.eta},
        {"distance", enum_name(k.distance, kDistances)},
        {"pivots", enum_name(k.pivots, kPivots)},
        {"leaf",
         {{"rule", enum_name(k.leaf, kLeafRules)},
          {"cap", k.leaf_cap},
          {"small", k.leaf_small},
          {"large", k.leaf_large},
          {"threshold", k.leaf_threshold},
          {"size", k.leaf_fixed}}},
        {"rank",
         {{"rule", enum_name(k.rank, kRankKinds)},
          {"initial", k.rank_initial},
          {"final", k.rank_final},
          {"base_small", k.rank_small},
          {"base_large", k.rank_large},
          {"threshold", k.rank_threshold},
          {"tau", k.rank_tau}}},
        {"validation_tau", k.validation_tau},
        {"validation_samples", k.validation_samples},
        {"locality", {{"radius", k.locality_radius}, {"p", k.locality_p}, {"tau", k.locality_tau}}}}},
      {"solver",
       {{"restart", c.solver.restart},
        {"tol", c.solver.tol},
        {"max_iterations", c.solver.max_iterations},
        {"rhs_seeds", c.solver.rhs_seeds},
        {"preconditioners", pcs},
        {"dense_cap_bytes", c.solver.dense_cap_bytes}}},
      {"output",
       {{"slice_sources", c.output.slice_sources},
        {"slice_params", c.output.slice_params},
        {"slice_grid", c.output.slice_grid}}},
      {"output_dir", c.output_dir.string()},
      {"checkpoint", c.checkpoint.string()},
      {"seed", c.seed}};
  if (k.memory_budget) j["compression"]["memory_budget"] = *k.memory_budget;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  ExperimentConfig c = parse_config(j);
  if (!c.checkpoint.empty() && c.checkpoint.is_relative()) c.checkpoint = path.parent_path() / c.checkpoint;
  return c;
}

std::string to_string(Preconditioner p) { return enum_name(p, kPreconditioners); }

Preconditioner preconditioner_from_string(const std::string& s) {
  return enum_from(s, kPreconditioners, "preconditioner");
}

}  // namespace greenpc::app
