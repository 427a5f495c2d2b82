#pragma once

// Experiment orchestration behind the command-line tool: sweeps, CSV output,
// run manifests, plot-ready series and curve fitting from CSV.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "qoc/fitting.hpp"
#include "qoc/scenario.hpp"
#include "qoc/sim.hpp"

namespace qoc {

inline constexpr std::string_view kVersion = "0.1.0";

struct SweepPoint {
  double b_total_mhz = 0.0;
  std::vector<SchemeSummary> schemes;
};

struct ResultsBundle {
  std::filesystem::path slots_csv;
  std::filesystem::path sweep_csv;
  std::filesystem::path shares_csv;
  std::filesystem::path manifest;
  std::filesystem::path scenario_copy;
  std::filesystem::path fading_csv;  // empty unless requested
  std::vector<SweepPoint> sweep;
};

struct RunOptions {
  bool dump_fading = false;
  /// When set, replaces the file's thread count (results do not depend on it).
  std::optional<unsigned> threads;
};

/// Runs every (B_total, scheme, trial) combination and writes slots.csv,
/// sweep.csv, shares.csv, manifest.json and the resolved scenario.ini.
ResultsBundle run_experiment(const ScenarioFile& file, const std::filesystem::path& out_dir,
                             const RunOptions& options = {});

struct PlotFiles {
  std::filesystem::path slot_bandwidth;     // per-slot bandwidth per vehicle
  std::filesystem::path bandwidth_shares;   // mean bandwidth per scheme and vehicle
  std::filesystem::path overall_accuracy;   // accuracy vs total bandwidth
  std::filesystem::path correct_density;    // correct density vs total bandwidth
};

/// Reads a results directory and writes one tidy CSV per figure series into
/// `out_dir` (defaults to `<results_dir>/plots`).
PlotFiles plotdata(const std::filesystem::path& results_dir, std::filesystem::path out_dir = {});

/// Header plus rows of string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws ParseError if absent
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

enum class FitKind { accuracy, rate };
FitKind parse_fit_kind(std::string_view text);

struct FitReport {
  FitKind kind = FitKind::accuracy;
  std::vector<SamplePoint> samples;
  std::vector<std::string> warnings;
  FitResult<CategoryAccuracyModel> accuracy;
  FitResult<RateCurve> rate;
};

/// Two-column (x, y) CSV with a header row; extra columns are ignored with a warning.
std::vector<SamplePoint> read_samples(std::istream& in, std::vector<std::string>* warnings);

FitReport fit_samples_csv(std::istream& in, FitKind kind);

/// Parameters and RMSE, one per line.
std::string format_fit_report(const FitReport& report);

/// Scenario-file lines carrying the fitted parameters.
std::string format_fit_fragment(const FitReport& report);

}  // namespace qoc
