#include "qoc/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "qoc/error.hpp"

namespace qoc {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

double cell_number(const std::string& text, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(fmt::format("column '{}': '{}' is not a number", column, text), 0,
                     std::string(column));
  return v;
}

std::string trim_copy(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

void write_slot_rows(std::ostream& out, double b_total_mhz, Scheme scheme, std::size_t trial,
                     const EpisodeTrace& trace) {
  for (std::size_t l = 0; l < trace.slots.size(); ++l) {
    const auto& slot = trace.slots[l];
    for (std::size_t m = 0; m < slot.bandwidths_hz.size(); ++m) {
      fmt::print(out, "{},{},{},{},{},{},{},{},{},{}\n", b_total_mhz, to_string(scheme), trial, l,
                 m + 1, slot.bandwidths_hz[m], slot.rates_kbps[m], slot.qps[m].value(),
                 slot.objective, slot.diagnostics.infeasible_fallback ? 1 : 0);
    }
  }
}

}  // namespace

ResultsBundle run_experiment(const ScenarioFile& file, const fs::path& out_dir,
                             const RunOptions& options) {
  (void)lint_scenario(file);
  fs::create_directories(out_dir);

  ResultsBundle bundle;
  bundle.slots_csv = out_dir / "slots.csv";
  bundle.sweep_csv = out_dir / "sweep.csv";
  bundle.shares_csv = out_dir / "shares.csv";
  bundle.manifest = out_dir / "manifest.json";
  bundle.scenario_copy = out_dir / "scenario.ini";

  const EpisodeConfig base = episode_config(file);
  const std::size_t slots_per_episode = slot_count(base).slots;
  MonteCarloOptions mc;
  mc.trials = file.trials;
  mc.schemes = file.schemes;
  mc.threads = options.threads.value_or(file.threads);
  const std::size_t slot_trials = std::min(file.slot_trials, file.trials);

  auto slots_out = open_output(bundle.slots_csv);
  fmt::print(slots_out,
             "b_total_mhz,scheme,trial,slot,vehicle,bandwidth_hz,rate_kbps,qp,objective,infeasible\n");
  std::ofstream fading_out;
  if (options.dump_fading) {
    bundle.fading_csv = out_dir / "fading.csv";
    fading_out = open_output(bundle.fading_csv);
    fmt::print(fading_out, "trial,slot,vehicle,large_scale_db,fading_re,fading_im,power_gain\n");
  }

  for (std::size_t i = 0; i < file.b_total_mhz.size(); ++i) {
    const double b_mhz = file.b_total_mhz[i];
    const SimScenario scenario = sim_scenario(file, b_mhz * 1e6);
    bundle.sweep.push_back({b_mhz, run_monte_carlo(base, scenario, mc)});

    for (std::size_t k = 0; k < slot_trials; ++k) {
      for (Scheme scheme : file.schemes) {
        EpisodeConfig cfg = base;
        cfg.scheme = scheme;
        cfg.seed = base.seed + k;
        const auto trace = run_episode(cfg, scenario);
        write_slot_rows(slots_out, b_mhz, scheme, k, trace);
        if (options.dump_fading && i == 0 && scheme == file.schemes.front()) {
          for (std::size_t l = 0; l < trace.channels.size(); ++l)
            for (std::size_t m = 0; m < trace.channels[l].size(); ++m) {
              const auto& st = trace.channels[l][m];
              fmt::print(fading_out, "{},{},{},{},{},{},{}\n", k, l, m + 1, st.large_scale_db,
                         st.small_scale.real(), st.small_scale.imag(), st.power_gain());
            }
        }
      }
    }
  }

  auto sweep_out = open_output(bundle.sweep_csv);
  fmt::print(sweep_out,
             "b_total_mhz,scheme,overall_accuracy,overall_accuracy_stderr,correct_density,"
             "correct_density_stderr,mean_objective,infeasible_slot_fraction\n");
  auto shares_out = open_output(bundle.shares_csv);
  fmt::print(shares_out, "b_total_mhz,scheme,vehicle,mean_bandwidth_hz\n");
  const double slot_total = static_cast<double>(file.trials * slots_per_episode);
  for (const auto& point : bundle.sweep) {
    for (const auto& s : point.schemes) {
      fmt::print(sweep_out, "{},{},{},{},{},{},{},{}\n", point.b_total_mhz, to_string(s.scheme),
                 s.mean.overall_accuracy, s.overall_accuracy_stderr, s.mean.correct_density,
                 s.correct_density_stderr, s.mean.mean_objective,
                 static_cast<double>(s.mean.infeasible_slots) / slot_total);
      for (std::size_t m = 0; m < s.mean.mean_bandwidth_hz.size(); ++m)
        fmt::print(shares_out, "{},{},{},{}\n", point.b_total_mhz, to_string(s.scheme), m + 1,
                   s.mean.mean_bandwidth_hz[m]);
    }
  }

  {
    auto out = open_output(bundle.scenario_copy);
    out << serialize_scenario(file);
  }
  nlohmann::ordered_json manifest;
  manifest["version"] = kVersion;
  manifest["config_hash"] = fmt::format("{:016x}", config_hash(file));
  manifest["seed"] = file.seed;
  manifest["trials"] = file.trials;
  manifest["slots_per_episode"] = slots_per_episode;
  std::vector<std::string> schemes;
  for (auto s : file.schemes) schemes.emplace_back(to_string(s));
  manifest["schemes"] = schemes;
  manifest["b_total_mhz"] = file.b_total_mhz;
  manifest["scenario"] = bundle.scenario_copy.filename().string();
  std::vector<std::string> outputs{"slots.csv", "sweep.csv", "shares.csv"};
  if (options.dump_fading) outputs.emplace_back("fading.csv");
  manifest["outputs"] = outputs;
  auto manifest_out = open_output(bundle.manifest);
  manifest_out << manifest.dump(2) << '\n';
  return bundle;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(fmt::format("missing column '{}'", name), 1, std::string(name));
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(trim_copy(cell));
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim_copy(line).empty()) continue;
    if (t.header.empty()) {
      t.header = split(line);
      continue;
    }
    auto cells = split(line);
    if (cells.size() < t.header.size())
      throw ParseError(fmt::format("line {}: {} cells, header has {}", line_no, cells.size(), t.header.size()),
                       line_no);
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("CSV is empty (no header row)");
  return t;
}

CsvTable read_csv_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(fmt::format("cannot read '{}'", path.string()));
  return read_csv(in);
}

PlotFiles plotdata(const fs::path& results_dir, fs::path out_dir) {
  for (const char* name : {"slots.csv", "sweep.csv", "shares.csv"})
    if (!fs::exists(results_dir / name))
      throw ParseError(fmt::format("results directory lacks {}", name));
  if (out_dir.empty()) out_dir = results_dir / "plots";
  fs::create_directories(out_dir);

  const auto slots = read_csv_file(results_dir / "slots.csv");
  const auto sweep = read_csv_file(results_dir / "sweep.csv");
  const auto shares = read_csv_file(results_dir / "shares.csv");

  PlotFiles files{out_dir / "slot_bandwidth.csv", out_dir / "bandwidth_shares.csv",
                  out_dir / "overall_accuracy.csv", out_dir / "correct_density.csv"};

  // Slot trajectories: first trial of the first scheme listed, at the total
  // bandwidth closest to 10 MHz.
  {
    const auto c_b = slots.column("b_total_mhz");
    const auto c_scheme = slots.column("scheme");
    const auto c_trial = slots.column("trial");
    const auto c_slot = slots.column("slot");
    const auto c_vehicle = slots.column("vehicle");
    const auto c_bw = slots.column("bandwidth_hz");
    double target = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : slots.rows) {
      const double b = cell_number(r[c_b], "b_total_mhz");
      if (std::isnan(target) || std::abs(b - 10.0) < std::abs(target - 10.0)) target = b;
    }
    const std::string scheme = slots.rows.empty() ? std::string() : slots.rows.front()[c_scheme];
    auto out = open_output(files.slot_bandwidth);
    fmt::print(out, "b_total_mhz,scheme,slot,vehicle,bandwidth_mhz\n");
    for (const auto& r : slots.rows) {
      if (r[c_scheme] != scheme || r[c_trial] != "0" || cell_number(r[c_b], "b_total_mhz") != target)
        continue;
      fmt::print(out, "{},{},{},{},{}\n", target, scheme, r[c_slot], r[c_vehicle],
                 cell_number(r[c_bw], "bandwidth_hz") / 1e6);
    }
  }
  {
    const auto c_b = shares.column("b_total_mhz");
    const auto c_scheme = shares.column("scheme");
    const auto c_vehicle = shares.column("vehicle");
    const auto c_bw = shares.column("mean_bandwidth_hz");
    auto out = open_output(files.bandwidth_shares);
    fmt::print(out, "b_total_mhz,scheme,vehicle,bandwidth_mhz\n");
    for (const auto& r : shares.rows)
      fmt::print(out, "{},{},{},{}\n", r[c_b], r[c_scheme], r[c_vehicle],
                 cell_number(r[c_bw], "mean_bandwidth_hz") / 1e6);
  }
  auto series = [&](const fs::path& path, std::string_view value, std::string_view err) {
    const auto c_b = sweep.column("b_total_mhz");
    const auto c_scheme = sweep.column("scheme");
    const auto c_v = sweep.column(value);
    const auto c_e = sweep.column(err);
    auto out = open_output(path);
    fmt::print(out, "b_total_mhz,scheme,{},stderr\n", value);
    for (const auto& r : sweep.rows)
      fmt::print(out, "{},{},{},{}\n", r[c_b], r[c_scheme], r[c_v], r[c_e]);
  };
  series(files.overall_accuracy, "overall_accuracy", "overall_accuracy_stderr");
  series(files.correct_density, "correct_density", "correct_density_stderr");
  return files;
}

FitKind parse_fit_kind(std::string_view text) {
  if (text == "accuracy") return FitKind::accuracy;
  if (text == "rate") return FitKind::rate;
  throw DomainError(fmt::format("unknown fit kind '{}' (expected accuracy or rate)", text));
}

std::vector<SamplePoint> read_samples(std::istream& in, std::vector<std::string>* warnings) {
  const auto table = read_csv(in);
  if (table.header.size() < 2)
    throw ParseError(fmt::format("sample CSV needs two columns (x, y), header has {}", table.header.size()), 1);
  if (table.header.size() > 2 && warnings)
    warnings->push_back(fmt::format("ignoring {} extra column(s) after '{}'", table.header.size() - 2,
                                    table.header[1]));
  std::vector<SamplePoint> samples;
  for (const auto& r : table.rows)
    samples.push_back({cell_number(r[0], table.header[0]), cell_number(r[1], table.header[1])});
  if (samples.empty()) throw ParseError("sample CSV has a header but no data rows");
  return samples;
}

FitReport fit_samples_csv(std::istream& in, FitKind kind) {
  FitReport report;
  report.kind = kind;
  report.samples = read_samples(in, &report.warnings);
  if (kind == FitKind::accuracy)
    report.accuracy = fit_accuracy_model(report.samples);
  else
    report.rate = fit_rate_model(report.samples);
  return report;
}

std::string format_fit_report(const FitReport& r) {
  if (r.kind == FitKind::accuracy) {
    const auto& p = r.accuracy.parameters;
    return fmt::format("alpha = {}\nbeta = {}\ngamma = {}\nrmse = {}\niterations = {}\nconverged = {}\n",
                       p.alpha, p.beta, p.gamma, r.accuracy.rmse, r.accuracy.iterations,
                       r.accuracy.converged);
  }
  const auto& p = r.rate.parameters;
  return fmt::format("a = {}\nb = {}\nrmse = {}\niterations = {}\nconverged = {}\n", p.a, p.b,
                     r.rate.rmse, r.rate.iterations, r.rate.converged);
}

std::string format_fit_fragment(const FitReport& r) {
  if (r.kind == FitKind::accuracy) {
    const auto& p = r.accuracy.parameters;
    return fmt::format("# one category column of [categories]\nalpha = {}\nbeta = {}\ngamma = {}\n",
                       p.alpha, p.beta, p.gamma);
  }
  const auto& p = r.rate.parameters;
  return fmt::format("# one video column of [videos]\na_qp = {}\nb_per_kbps = {}\n", p.a, p.b);
}

}  // namespace qoc
