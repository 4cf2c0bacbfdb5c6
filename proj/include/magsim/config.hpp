#pragma once

// Run configuration: JSON text with unit-suffixed keys, strict parsing and
// dotted-path overrides.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "magsim/experiments.hpp"
#include "magsim/model.hpp"
#include "magsim/schedule.hpp"

namespace magsim {

inline constexpr const char* kVersion = "0.3.0";

nlohmann::json to_json(const PhysicalParams& p);
PhysicalParams params_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProtocolSettings& s);
ProtocolSettings settings_from_json(const nlohmann::json& j);

struct GridSpec {
  double first = 0.0;
  double last = 0.0;
  double step = 1.0;
  std::vector<double> values() const { return arange(first, last, step); }
  bool operator==(const GridSpec&) const = default;
};

struct TomographySpec {
  std::string target = "single_magnon";
  std::size_t map_points = 9;  // per axis
  double map_half_width = 2.0;
  std::size_t recon_points = 5;  // per axis
  double recon_half_width = 1.0;
  std::size_t n_max = 9;
  GridSpec tau_ns{0.0, 200.0, 2.0};
  std::size_t d_rec = 4;
  std::size_t bootstrap = 25;
  bool exact_populations = false;
  bool operator==(const TomographySpec&) const = default;
};

struct RunConfig {
  PhysicalParams physical;
  ProtocolSettings protocol;
  bool ideal_pulses = true;
  double rk4_step_ns = 0.05;

  GridSpec anticross_coil_ma{-6.0, -3.0, 0.01};
  GridSpec anticross_probe_ghz{5.80, 5.90, 0.0001};
  GridSpec at_amp_mhz{0.0, 200.0, 1.0};
  GridSpec at_probe_ghz{5.70, 6.00, 0.0005};
  GridSpec chevron_tau_ns{0.0, 200.0, 2.0};
  GridSpec chevron_detuning_mhz{-15.0, 15.0, 1.0};
  GridSpec swap_tau_ns{0.0, 200.0, 1.0};
  TomographySpec tomography;

  bool shots_enabled = true;
  ShotModel shots;

  std::string output_dir = "out";
  std::string output_format = "both";  // csv | json | both
  std::uint64_t seed = 20240611;
  std::size_t workers = 0;

  EvolveOptions evolve_options() const;
  std::optional<ShotModel> shot_model() const;
};

nlohmann::json to_json(const RunConfig& c);
// Strict: unknown keys and wrong types throw Config naming the key.
RunConfig config_from_json(const nlohmann::json& j);

// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
// possible, otherwise taken as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Defaults, then the file (if any), then overrides.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace magsim
