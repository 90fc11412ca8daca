#include "edgesplit/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "edgesplit/errors.hpp"
#include "edgesplit/qoe.hpp"

namespace edgesplit {

using nlohmann::json;

DeviceProfile default_edge_device() { return {"H100-NVL", 0.004, 0.02}; }

std::vector<CatalogEntry> default_device_catalog() {
  return {
      {{"RTX2060", 0.020, 0.130}, 1.0},
      {{"GTX1080", 0.020, 0.110}, 1.0},
      {{"RTX3060", 0.015, 0.085}, 1.0},
      {{"RTX3080", 0.010, 0.060}, 1.0},
      {{"RTX4090", 0.008, 0.042}, 1.0},
  };
}

EdgeConfig default_edge_config() {
  EdgeConfig edge;
  edge.device = default_edge_device();
  return edge;
}

GeneratorConfig default_generator_config() {
  GeneratorConfig cfg;
  cfg.device_catalog = default_device_catalog();
  return cfg;
}

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ValidationError(field + " " + rule);
}

}  // namespace

void validate(const DeviceProfile& device, const std::string& path) {
  require(std::isfinite(device.step_slope) && device.step_slope >= 0.0, path + ".step_slope",
          "must be >= 0");
  require(std::isfinite(device.step_intercept) && device.step_intercept > 0.0,
          path + ".step_intercept", "must be > 0");
}

void validate(const EdgeConfig& edge) {
  validate(edge.device, "edge.device");
  require(edge.gpus >= 1, "edge.gpus", "must be >= 1");
  require(edge.b_max >= 0, "edge.b_max", "must be >= 0");
  require(edge.slots_per_interval >= 1, "edge.slots_per_interval", "must be >= 1");
  require(edge.slot_duration > 0.0, "edge.slot_duration", "must be > 0");
  require(edge.bandwidth_hz > 0.0, "edge.bandwidth_hz", "must be > 0");
  require(edge.spectral_efficiency > 0.0, "edge.spectral_efficiency", "must be > 0");
}

void validate(const PaiParams& pai) {
  require(pai.n_min > 0 && pai.n_min < pai.n_total, "pai.n_min", "must satisfy 0 < n_min < n_total");
  require(pai.a_f > 0.0, "pai.a_f", "must be > 0");
  // F is increasing, so F(n_min) > 0.5 covers the whole split domain.
  require(fitted_pai(pai.n_min, pai) > 0.5, "pai.b_f",
          "must place F(n_min) above 0.5 (b_f < n_min)");
  require(fitted_pai(pai.n_total, pai) < 1.0, "pai.a_f", "saturates F(n_total) to 1");
}

void validate(const GeneratorConfig& cfg) {
  require(cfg.user_count >= 1, "generator.user_count", "must be >= 1");
  require(!cfg.device_catalog.empty(), "generator.device_catalog", "must be non-empty");
  double total_weight = 0.0;
  for (std::size_t i = 0; i < cfg.device_catalog.size(); ++i) {
    const auto& entry = cfg.device_catalog[i];
    const std::string path = "generator.device_catalog[" + std::to_string(i) + "]";
    validate(entry.device, path + ".device");
    require(entry.weight >= 0.0, path + ".weight", "must be >= 0");
    total_weight += entry.weight;
  }
  require(total_weight > 0.0, "generator.device_catalog", "weights must not all be zero");
  require(cfg.alpha_bhat >= 1, "generator.alpha_bhat", "must be >= 1");
  require(cfg.alpha_kappa > 0.0 && cfg.alpha_kappa <= 1.0, "generator.alpha_kappa",
          "must be in (0, 1]");
  require(cfg.alpha_delta_floor > 0.0, "generator.alpha_delta_floor", "must be > 0");
  require(!cfg.alpha_reference_gpus || *cfg.alpha_reference_gpus >= 1,
          "generator.alpha_reference_gpus", "must be >= 1");
  require(cfg.prompt_bits > 0.0, "generator.prompt_bits", "must be > 0");
  require(cfg.intermediate_bits > 0.0, "generator.intermediate_bits", "must be > 0");
}

void validate(const Scenario& scenario) {
  validate(scenario.edge);
  validate(scenario.pai);
  std::set<int> ids;
  for (std::size_t i = 0; i < scenario.users.size(); ++i) {
    const auto& u = scenario.users[i];
    const std::string path = "users[" + std::to_string(i) + "]";
    require(u.id == static_cast<int>(i), path + ".id", "must equal its position (ids contiguous from 0)");
    validate(u.device, path + ".device");
    require(std::isfinite(u.alpha) && u.alpha > 0.0, path + ".alpha", "must be > 0");
    require(u.request_slot >= 1 && u.request_slot <= scenario.edge.slots_per_interval,
            path + ".request_slot", "must be in [1, edge.slots_per_interval]");
    require(u.prompt_bits > 0.0, path + ".prompt_bits", "must be > 0");
    require(u.intermediate_bits > 0.0, path + ".intermediate_bits", "must be > 0");
  }
}

AlphaInterval alpha_interval(const DeviceProfile& local, const EdgeConfig& edge,
                             const PaiParams& pai, const GeneratorConfig& cfg) {
  const int gpus = cfg.alpha_reference_gpus.value_or(edge.gpus);
  double delta = step_latency_local(local) - step_latency_edge(edge.device, cfg.alpha_bhat, gpus);
  const double f_min = fitted_pai(pai.n_min, pai);
  const double f_max = fitted_pai(pai.n_total, pai);
  const double slope_min = pai.a_f * f_min * (1.0 - f_min);
  const double slope_max = pai.a_f * f_max * (1.0 - f_max);
  AlphaInterval out;
  if (delta <= 0.0) {
    delta = cfg.alpha_delta_floor;
    out.clamped = true;
    out.lo = delta / slope_min;
    out.hi = out.lo;
    return out;
  }
  out.lo = delta / slope_min;
  out.hi = cfg.alpha_kappa * delta / slope_max;
  if (out.hi < out.lo) {
    // Only reachable with a tiny kappa; the band collapses onto its lower end.
    out.hi = out.lo;
    out.clamped = true;
  }
  return out;
}

double alpha_scale(const GeneratorConfig& cfg, const EdgeConfig& edge, const PaiParams& pai) {
  double scale = 0.0;
  for (const auto& entry : cfg.device_catalog) {
    scale = std::max(scale, alpha_interval(entry.device, edge, pai, cfg).hi);
  }
  return scale > 0.0 ? scale : 1.0;
}

Scenario generate_scenario(std::uint64_t seed, const GeneratorConfig& cfg, const EdgeConfig& edge,
                           const PaiParams& pai) {
  validate(cfg);
  validate(edge);
  validate(pai);

  std::mt19937_64 rng(seed);
  std::vector<double> weights;
  weights.reserve(cfg.device_catalog.size());
  for (const auto& e : cfg.device_catalog) weights.push_back(e.weight);
  std::discrete_distribution<std::size_t> pick_device(weights.begin(), weights.end());
  std::uniform_int_distribution<int> pick_slot(1, edge.slots_per_interval);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scenario s;
  s.edge = edge;
  s.pai = pai;
  s.seed = seed;
  s.users.reserve(cfg.user_count);
  for (int i = 0; i < cfg.user_count; ++i) {
    UserRequest u;
    u.id = i;
    u.device = cfg.device_catalog[pick_device(rng)].device;
    u.request_slot = pick_slot(rng);
    const auto band = alpha_interval(u.device, edge, pai, cfg);
    const double draw = unit(rng);
    u.alpha = band.lo + draw * (band.hi - band.lo);
    u.alpha_clamped = band.clamped;
    u.prompt_bits = cfg.prompt_bits;
    u.intermediate_bits = cfg.intermediate_bits;
    s.users.push_back(u);
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + " must be an object");
  auto it = j.find(key);
  if (it == j.end()) throw ValidationError(path + "." + key + " is missing");
  return *it;
}

double get_number(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number()) throw ValidationError(path + "." + key + " must be a number");
  return v.get<double>();
}

std::int64_t get_int(const json& j, const char* key, const std::string& path) {
  const auto& v = field(j, key, path);
  if (!v.is_number_integer()) throw ValidationError(path + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

json device_to_json(const DeviceProfile& d) {
  return {{"name", d.name}, {"step_slope", d.step_slope}, {"step_intercept", d.step_intercept}};
}

DeviceProfile device_from_json(const json& j, const std::string& path) {
  DeviceProfile d;
  d.name = get_or<std::string>(j, "name", "");
  d.step_slope = get_number(j, "step_slope", path);
  d.step_intercept = get_number(j, "step_intercept", path);
  return d;
}

}  // namespace

json to_json(const EdgeConfig& edge) {
  return {{"gpus", edge.gpus},
          {"device", device_to_json(edge.device)},
          {"b_max", edge.b_max},
          {"slots_per_interval", edge.slots_per_interval},
          {"slot_duration", edge.slot_duration},
          {"bandwidth_hz", edge.bandwidth_hz},
          {"spectral_efficiency", edge.spectral_efficiency}};
}

EdgeConfig edge_config_from_json(const json& j) {
  const std::string path = "edge";
  EdgeConfig e;
  e.gpus = static_cast<int>(get_int(j, "gpus", path));
  e.device = device_from_json(field(j, "device", path), path + ".device");
  e.b_max = static_cast<int>(get_int(j, "b_max", path));
  e.slots_per_interval = static_cast<int>(get_int(j, "slots_per_interval", path));
  e.slot_duration = get_number(j, "slot_duration", path);
  e.bandwidth_hz = get_number(j, "bandwidth_hz", path);
  e.spectral_efficiency = get_number(j, "spectral_efficiency", path);
  return e;
}

json to_json(const PaiParams& pai) {
  return {{"n_total", pai.n_total}, {"n_min", pai.n_min},         {"a_f", pai.a_f},
          {"b_f", pai.b_f},         {"kappa_pai", pai.kappa_pai}, {"sigma_a", pai.sigma_a},
          {"sigma_b", pai.sigma_b}};
}

PaiParams pai_params_from_json(const json& j) {
  const std::string path = "pai";
  PaiParams p;
  p.n_total = static_cast<int>(get_int(j, "n_total", path));
  p.n_min = static_cast<int>(get_int(j, "n_min", path));
  p.a_f = get_number(j, "a_f", path);
  p.b_f = get_number(j, "b_f", path);
  p.kappa_pai = get_number(j, "kappa_pai", path);
  p.sigma_a = get_number(j, "sigma_a", path);
  p.sigma_b = get_number(j, "sigma_b", path);
  return p;
}

json to_json(const Scenario& s) {
  json users = json::array();
  for (const auto& u : s.users) {
    users.push_back({{"id", u.id},
                     {"device", device_to_json(u.device)},
                     {"alpha", u.alpha},
                     {"request_slot", u.request_slot},
                     {"prompt_bits", u.prompt_bits},
                     {"intermediate_bits", u.intermediate_bits},
                     {"alpha_clamped", u.alpha_clamped}});
  }
  return {{"seed", s.seed}, {"users", users}, {"edge", to_json(s.edge)}, {"pai", to_json(s.pai)}};
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  const auto& seed = field(j, "seed", "scenario");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ValidationError("scenario.seed must be an integer");
  }
  s.seed = seed.get<std::uint64_t>();
  s.edge = edge_config_from_json(field(j, "edge", "scenario"));
  s.pai = pai_params_from_json(field(j, "pai", "scenario"));
  const auto& users = field(j, "users", "scenario");
  if (!users.is_array()) throw ValidationError("scenario.users must be an array");
  for (std::size_t i = 0; i < users.size(); ++i) {
    const std::string path = "users[" + std::to_string(i) + "]";
    const auto& uj = users[i];
    UserRequest u;
    u.id = static_cast<int>(get_int(uj, "id", path));
    u.device = device_from_json(field(uj, "device", path), path + ".device");
    u.alpha = get_number(uj, "alpha", path);
    u.request_slot = static_cast<int>(get_int(uj, "request_slot", path));
    u.prompt_bits = get_number(uj, "prompt_bits", path);
    u.intermediate_bits = get_number(uj, "intermediate_bits", path);
    u.alpha_clamped = get_or<bool>(uj, "alpha_clamped", false);
    s.users.push_back(u);
  }
  validate(s);
  return s;
}

json to_json(const GeneratorConfig& cfg) {
  json catalog = json::array();
  for (const auto& e : cfg.device_catalog) {
    catalog.push_back({{"device", device_to_json(e.device)}, {"weight", e.weight}});
  }
  json j = {{"user_count", cfg.user_count},
            {"device_catalog", catalog},
            {"alpha_bhat", cfg.alpha_bhat},
            {"alpha_kappa", cfg.alpha_kappa},
            {"alpha_delta_floor", cfg.alpha_delta_floor},
            {"prompt_bits", cfg.prompt_bits},
            {"intermediate_bits", cfg.intermediate_bits}};
  if (cfg.alpha_reference_gpus) j["alpha_reference_gpus"] = *cfg.alpha_reference_gpus;
  return j;
}

GeneratorConfig generator_config_from_json(const json& j) {
  // Missing keys keep their defaults so partial configs stay short.
  GeneratorConfig cfg = default_generator_config();
  if (!j.is_object()) throw ValidationError("generator must be an object");
  const std::string path = "generator";
  if (j.contains("user_count")) cfg.user_count = static_cast<int>(get_int(j, "user_count", path));
  if (j.contains("device_catalog")) {
    const auto& arr = j.at("device_catalog");
    if (!arr.is_array()) throw ValidationError("generator.device_catalog must be an array");
    cfg.device_catalog.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = path + ".device_catalog[" + std::to_string(i) + "]";
      CatalogEntry e;
      e.device = device_from_json(field(arr[i], "device", p), p + ".device");
      e.weight = arr[i].contains("weight") ? get_number(arr[i], "weight", p) : 1.0;
      cfg.device_catalog.push_back(e);
    }
  }
  if (j.contains("alpha_bhat")) cfg.alpha_bhat = static_cast<int>(get_int(j, "alpha_bhat", path));
  if (j.contains("alpha_kappa")) cfg.alpha_kappa = get_number(j, "alpha_kappa", path);
  if (j.contains("alpha_delta_floor")) cfg.alpha_delta_floor = get_number(j, "alpha_delta_floor", path);
  if (j.contains("alpha_reference_gpus")) {
    cfg.alpha_reference_gpus = static_cast<int>(get_int(j, "alpha_reference_gpus", path));
  }
  if (j.contains("prompt_bits")) cfg.prompt_bits = get_number(j, "prompt_bits", path);
  if (j.contains("intermediate_bits")) cfg.intermediate_bits = get_number(j, "intermediate_bits", path);
  validate(cfg);
  return cfg;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Scenario load_scenario(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    return scenario_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  write_json_file(to_json(scenario), path);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace edgesplit
