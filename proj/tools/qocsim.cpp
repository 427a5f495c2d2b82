// qocsim: run bandwidth-allocation experiments, fit model curves, emit plot
// series and lint scenario files.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qoc/error.hpp"
#include "qoc/experiment.hpp"
#include "qoc/scenario.hpp"

namespace {

struct ScenarioArgs {
  std::string scenario;
  std::vector<std::string> set;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> schemes;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& args) {
  cmd->add_option("--scenario", args.scenario, "Scenario file (built-in defaults when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", args.set, "Override a scenario key, KEY=VALUE (repeatable)");
  cmd->add_option("--trials", args.trials, "Monte Carlo trials per sweep point");
  cmd->add_option("--seed", args.seed, "Base seed; trial k uses seed + k");
  cmd->add_option("--schemes", args.schemes, "Comma-separated subset of qoc,da,qoe");
}

qoc::ScenarioFile resolve(const ScenarioArgs& args) {
  std::vector<qoc::Override> overrides;
  for (const auto& s : args.set) overrides.push_back(qoc::parse_override(s));
  if (args.trials) overrides.emplace_back("trials", std::to_string(*args.trials));
  if (args.seed) overrides.emplace_back("seed", std::to_string(*args.seed));
  if (args.schemes) overrides.emplace_back("schemes", *args.schemes);
  if (args.scenario.empty()) {
    return qoc::parse_scenario(qoc::serialize_scenario(qoc::default_scenario_file()), overrides);
  }
  return qoc::load_scenario(args.scenario, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Content-driven bandwidth allocation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qoc::kVersion));

  ScenarioArgs run_args;
  std::string out_dir;
  bool dump_fading = false;
  std::optional<unsigned> threads;
  auto* run = app.add_subcommand("run", "Run the configured sweep x schemes x trials");
  add_scenario_flags(run, run_args);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--threads", threads, "Worker threads (0 = all cores); never changes results");
  run->add_flag("--dump-fading", dump_fading, "Also write fading.csv for the per-slot trials");

  std::string fit_csv;
  std::string fit_kind = "accuracy";
  bool fragment = false;
  auto* fit = app.add_subcommand("fit", "Fit an accuracy-vs-QP or QP-vs-rate curve to CSV samples");
  fit->add_option("--csv", fit_csv, "Two-column CSV (x,y) with a header row")->required();
  fit->add_option("--kind", fit_kind, "accuracy | rate")->check(CLI::IsMember({"accuracy", "rate"}));
  fit->add_flag("--fragment", fragment, "Print a scenario-file fragment as well");

  std::string results_dir;
  std::string plot_dir;
  auto* plot = app.add_subcommand("plotdata", "Write plot-ready CSV series from a results directory");
  plot->add_option("--results", results_dir, "Directory written by 'run'")->required();
  plot->add_option("--out", plot_dir, "Destination (default: <results>/plots)");

  ScenarioArgs lint_args;
  bool print_resolved = false;
  auto* lint = app.add_subcommand("validate", "Check a scenario file and print warnings");
  add_scenario_flags(lint, lint_args);
  lint->add_flag("--print", print_resolved, "Print the resolved scenario");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto file = resolve(run_args);
      for (const auto& w : qoc::lint_scenario(file)) fmt::print(stderr, "warning: {}\n", w);
      qoc::RunOptions options;
      options.dump_fading = dump_fading;
      options.threads = threads;
      const auto bundle = qoc::run_experiment(file, out_dir, options);
      const double slots_per_trial =
          static_cast<double>(qoc::slot_count(qoc::episode_config(file)).slots);
      for (const auto& point : bundle.sweep)
        for (const auto& s : point.schemes)
          fmt::print("B_total={:>5} MHz  {:<3}  accuracy={:.6f} (+-{:.2g})  density={:.6f}  "
                     "infeasible slots={:.1f}%\n",
                     point.b_total_mhz, qoc::to_string(s.scheme), s.mean.overall_accuracy,
                     s.overall_accuracy_stderr, s.mean.correct_density,
                     100.0 * s.mean.infeasible_slots / (slots_per_trial * s.trials.size()));
      fmt::print("wrote {}\n", out_dir);
    } else if (*fit) {
      std::ifstream in(fit_csv, std::ios::binary);
      if (!in) throw qoc::ParseError(fmt::format("cannot read '{}'", fit_csv));
      const auto report = qoc::fit_samples_csv(in, qoc::parse_fit_kind(fit_kind));
      for (const auto& w : report.warnings) fmt::print(stderr, "warning: {}\n", w);
      fmt::print("{}", qoc::format_fit_report(report));
      if (fragment) fmt::print("\n{}", qoc::format_fit_fragment(report));
    } else if (*plot) {
      const auto files = qoc::plotdata(results_dir, plot_dir);
      for (const auto& p : {files.slot_bandwidth, files.bandwidth_shares, files.overall_accuracy,
                            files.correct_density})
        fmt::print("wrote {}\n", p.string());
    } else if (*lint) {
      const auto file = resolve(lint_args);
      const auto warnings = qoc::lint_scenario(file);
      for (const auto& w : warnings) fmt::print("warning: {}\n", w);
      if (print_resolved) fmt::print("{}", qoc::serialize_scenario(file));
      fmt::print("ok: {} categories, {} vehicles, {} slots per episode\n", file.alpha.size(),
                 file.a_qp.size(), qoc::slot_count(qoc::episode_config(file)).slots);
    }
  } catch (const qoc::ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const qoc::InfeasibleError& e) {
    fmt::print(stderr, "infeasible: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
