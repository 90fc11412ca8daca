#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace edgesplit {

// Per-step latency of one denoising step as an affine function of batch size:
// L(b) = step_slope * b + step_intercept, in seconds.
struct DeviceProfile {
  std::string name;
  double step_slope = 0.0;
  double step_intercept = 0.0;

  bool operator==(const DeviceProfile&) const = default;
};

struct UserRequest {
  int id = 0;
  DeviceProfile device;
  double alpha = 1.0;         // weight on the PAI term, seconds per unit PAI
  int request_slot = 1;       // slot in [1, K] at which the request was sent
  double prompt_bits = 216.0;
  double intermediate_bits = 4.4e6;
  bool alpha_clamped = false; // generator hit the degenerate alpha interval

  bool operator==(const UserRequest&) const = default;
};

struct EdgeConfig {
  int gpus = 8;
  DeviceProfile device;
  int b_max = 10;
  int slots_per_interval = 100;
  double slot_duration = 0.01;       // seconds
  double bandwidth_hz = 1.0e6;
  double spectral_efficiency = 10.0; // bits/s/Hz

  bool operator==(const EdgeConfig&) const = default;
};

// Constants of the split-point accuracy model. The fitted curve is
// F(n) = 1 / (1 + exp(-a_f (n - b_f))) and the composite metric is
// kappa_pai * clip * sigmoid(sigma_a (lpips - sigma_b)).
struct PaiParams {
  int n_total = 200;
  int n_min = 80;
  double a_f = 0.0413;
  double b_f = 71.44;
  double kappa_pai = 3.0;
  double sigma_a = 30.0;
  double sigma_b = 0.1;

  bool operator==(const PaiParams&) const = default;
};

struct Scenario {
  std::vector<UserRequest> users;
  EdgeConfig edge;
  PaiParams pai;
  std::uint64_t seed = 0;

  int user_count() const { return static_cast<int>(users.size()); }
  bool operator==(const Scenario&) const = default;
};

struct CatalogEntry {
  DeviceProfile device;
  double weight = 1.0;

  bool operator==(const CatalogEntry&) const = default;
};

struct GeneratorConfig {
  int user_count = 20;
  std::vector<CatalogEntry> device_catalog;
  int alpha_bhat = 20;
  double alpha_kappa = 0.05;
  // Replaces a non-positive local-vs-edge step gap when computing the alpha
  // interval for a device that is not slower than the edge.
  double alpha_delta_floor = 1e-3;
  // GPU count plugged into the alpha interval. Unset means the edge's own count.
  std::optional<int> alpha_reference_gpus;
  double prompt_bits = 216.0;
  double intermediate_bits = 4.4e6;

  bool operator==(const GeneratorConfig&) const = default;
};

// Default H100-class edge and RTX-class local catalog. Configuration only.
DeviceProfile default_edge_device();
std::vector<CatalogEntry> default_device_catalog();
EdgeConfig default_edge_config();
GeneratorConfig default_generator_config();

void validate(const DeviceProfile& device, const std::string& path);
void validate(const EdgeConfig& edge);
void validate(const PaiParams& pai);
void validate(const GeneratorConfig& cfg);
void validate(const Scenario& scenario);

// Alpha sampling interval [lo, hi] for a local device against the edge at the
// assumed batch. `clamped` is set when the local device is not slower than the
// edge and the floor replaced the step gap.
struct AlphaInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool clamped = false;
};
AlphaInterval alpha_interval(const DeviceProfile& local, const EdgeConfig& edge,
                             const PaiParams& pai, const GeneratorConfig& cfg);

// Largest alpha upper bound over the catalog. Used as the alpha feature scale.
double alpha_scale(const GeneratorConfig& cfg, const EdgeConfig& edge, const PaiParams& pai);

Scenario generate_scenario(std::uint64_t seed, const GeneratorConfig& cfg,
                           const EdgeConfig& edge, const PaiParams& pai);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// JSON mapping. from_json validates field presence and types; validate() checks
// invariants.
nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EdgeConfig& edge);
EdgeConfig edge_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PaiParams& pai);
PaiParams pai_params_from_json(const nlohmann::json& j);

// Reads a whole file and parses it as JSON. Parse errors carry line/column.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& j, const std::filesystem::path& path);

// Deterministic 64-bit seed mixing (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace edgesplit
