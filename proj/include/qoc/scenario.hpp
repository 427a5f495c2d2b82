#pragma once

// Human-editable scenario file. Sections group the keys for readability but
// every key is unique on its own, so command-line overrides use bare keys.
// Units are part of the key name (b_total_mhz, te_ms, ...).

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qoc/allocator.hpp"
#include "qoc/sim.hpp"

namespace qoc {

struct ScenarioFile {
  // [categories]
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> weights;
  // [videos]
  std::vector<double> a_qp;
  std::vector<double> b_per_kbps;
  std::vector<std::vector<double>> densities;
  // [channel]; empty distance/speed lists mean "random"
  std::vector<double> distances_km;
  Range distance_range_km{0.1, 1.1};
  std::vector<double> speeds_kmh;
  Range speed_range_kmh{0.0, 60.0};
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -174.0;
  double carrier_hz = 2.0e9;
  double shadowing_std_db = 8.0;
  DopplerMode doppler_mode = DopplerMode::jakes;
  // [problem]
  std::vector<double> b_total_mhz;
  double b_min_fraction = 0.1;
  double p_min = 0.3;
  AccuracyConstraintMode accuracy_constraint = AccuracyConstraintMode::per_pair;
  double mos_ref_kbps = 100.0;
  double mos_max_kbps = 100000.0;
  // [timing]
  double t_total_s = 2.0;
  double delta_t_ms = 200.0;
  double te_ms = 50.0;
  // [runs]
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::size_t slot_trials = 1;  // trials whose per-slot rows are written
  std::vector<Scheme> schemes{Scheme::qoc, Scheme::da, Scheme::qoe};

  friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

using Override = std::pair<std::string, std::string>;

/// Measurement tables and system parameters the project ships with.
ScenarioFile default_scenario_file();

/// Parse scenario text, then apply `overrides` (bare key -> value). Keys not
/// present keep their defaults. Throws ParseError with line and field.
ScenarioFile parse_scenario(std::string_view text, std::span<const Override> overrides = {});
ScenarioFile load_scenario(const std::filesystem::path& path,
                           std::span<const Override> overrides = {});

/// Splits "key=value". Throws ParseError when '=' is missing.
Override parse_override(std::string_view text);

/// Canonical text form; parse_scenario(serialize_scenario(f)) == f.
std::string serialize_scenario(const ScenarioFile& file);

/// Dimension and range checks. Throws ParseError on errors and returns
/// human-readable warnings for suspicious but usable settings.
std::vector<std::string> lint_scenario(const ScenarioFile& file);

/// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const ScenarioFile& file);

ContentScenario content_scenario(const ScenarioFile& file);
SimScenario sim_scenario(const ScenarioFile& file, double b_total_hz);
EpisodeConfig episode_config(const ScenarioFile& file, Scheme scheme = Scheme::qoc);

}  // namespace qoc
