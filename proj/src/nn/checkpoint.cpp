#include "greenpc/nn/checkpoint.hpp"

#include "greenpc/error.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace greenpc::nn {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw SchemaError("truncated checkpoint");
  return v;
}

}  // namespace

nlohmann::json architecture_to_json(const Architecture& a) {
  return {{"dim", a.dim},
          {"parametric", a.parametric},
          {"eps_schedule", a.eps_schedule},
          {"level_widths", a.level_widths},
          {"branches", a.branches},
          {"body_layers", a.body_layers},
          {"far_width", a.far_width},
          {"far_layers", a.far_layers},
          {"aux_width", a.aux_width},
          {"aux_layers", a.aux_layers},
          {"replicas", a.replicas},
          {"gate_seeds", a.gate_seeds},
          {"gate_input", a.gate_input == GateInput::parameter ? "parameter" : "source"}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  try {
    a.dim = j.at("dim").get<int>();
    a.parametric = j.value("parametric", false);
    a.eps_schedule = j.at("eps_schedule").get<std::vector<double>>();
    a.level_widths = j.at("level_widths").get<std::vector<int>>();
    a.branches = j.value("branches", a.branches);
    a.body_layers = j.value("body_layers", a.body_layers);
    a.far_width = j.value("far_width", a.far_width);
    a.far_layers = j.value("far_layers", a.far_layers);
    a.aux_width = j.value("aux_width", a.aux_width);
    a.aux_layers = j.value("aux_layers", a.aux_layers);
    a.replicas = j.value("replicas", 0);
    a.gate_seeds = j.value("gate_seeds", std::vector<std::vector<double>>{});
    const std::string gi = j.value("gate_input", std::string("source"));
    if (gi == "parameter")
      a.gate_input = GateInput::parameter;
    else if (gi == "source")
      a.gate_input = GateInput::source;
    else
      throw ConfigError("unknown gate_input '" + gi + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("architecture: ") + e.what());
  }
  a.validate();
  return a;
}

void save_checkpoint(const MsnnModel& model, const std::filesystem::path& path, const nlohmann::json& extra) {
  const auto views = model.parameter_views();
  nlohmann::json shapes = nlohmann::json::array();
  std::uint64_t count = 0;
  for (const Matrix* p : views) {
    shapes.push_back({p->rows(), p->cols()});
    count += static_cast<std::uint64_t>(p->size());
  }
  const nlohmann::json meta = {{"architecture", architecture_to_json(model.arch())},
                               {"shared_levels", model.levels().size()},
                               {"gated", model.gated()},
                               {"shapes", shapes},
                               {"extra", extra}};
  const std::string text = meta.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write checkpoint " + path.string());
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::uint64_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put(os, count);
  for (const Matrix* p : views) os.write(reinterpret_cast<const char*>(p->data()), static_cast<std::streamsize>(p->size() * sizeof(double)));
  if (!os) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw SchemaError("not a checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw SchemaError("unsupported checkpoint version " + std::to_string(version));
  const auto len = get<std::uint64_t>(is);
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw SchemaError("truncated checkpoint metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("bad checkpoint metadata: ") + e.what());
  }

  Rng rng(0);
  MsnnModel model(architecture_from_json(meta.at("architecture")), rng);
  const auto shared = meta.at("shared_levels").get<std::size_t>();
  const bool gated = meta.at("gated").get<bool>();
  for (std::size_t k = 0; k < shared + (gated ? 1 : 0); ++k) model.add_level(rng);
  if (gated) model.activate_mixture(rng);

  auto params = model.parameters();
  const auto& shapes = meta.at("shapes");
  if (shapes.size() != params.size()) throw SchemaError("checkpoint parameter count mismatch");
  const auto count = get<std::uint64_t>(is);
  std::uint64_t expected = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = *params[i].value;
    if (shapes[i][0].get<Eigen::Index>() != p.rows() || shapes[i][1].get<Eigen::Index>() != p.cols())
      throw SchemaError("checkpoint shape mismatch at " + params[i].name);
    expected += static_cast<std::uint64_t>(p.size());
  }
  if (count != expected) throw SchemaError("checkpoint value count mismatch");
  for (auto& ref : params)
    if (!is.read(reinterpret_cast<char*>(ref.value->data()), static_cast<std::streamsize>(ref.value->size() * sizeof(double))))
      throw SchemaError("truncated checkpoint data");
  return Checkpoint{std::move(model), meta.value("extra", nlohmann::json::object())};
}

}  // namespace greenpc::nn
