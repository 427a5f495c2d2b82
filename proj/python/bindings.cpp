#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qoc/allocator.hpp"
#include "qoc/bessel.hpp"
#include "qoc/channel.hpp"
#include "qoc/error.hpp"
#include "qoc/experiment.hpp"
#include "qoc/fitting.hpp"
#include "qoc/model.hpp"
#include "qoc/scenario.hpp"
#include "qoc/sim.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

PYBIND11_MODULE(qocalloc, m) {
  m.doc() = "Content-driven bandwidth allocation for video-transmitting vehicles";
  m.attr("__version__") = std::string(qoc::kVersion);

  py::register_exception<qoc::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<qoc::InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<qoc::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<qoc::RankDeficiencyError>(m, "RankDeficiencyError", PyExc_ValueError);

  py::class_<qoc::CategoryAccuracyModel>(m, "CategoryAccuracyModel")
      .def(py::init<double, double, double>(), "alpha"_a, "beta"_a, "gamma"_a)
      .def_readwrite("alpha", &qoc::CategoryAccuracyModel::alpha)
      .def_readwrite("beta", &qoc::CategoryAccuracyModel::beta)
      .def_readwrite("gamma", &qoc::CategoryAccuracyModel::gamma);

  py::class_<qoc::VideoRateModel>(m, "VideoRateModel")
      .def(py::init<double, double, std::vector<double>>(), "a"_a, "b"_a, "densities"_a)
      .def_readwrite("a", &qoc::VideoRateModel::a)
      .def_readwrite("b", &qoc::VideoRateModel::b)
      .def_readwrite("densities", &qoc::VideoRateModel::densities);

  py::class_<qoc::ContentScenario>(m, "ContentScenario")
      .def(py::init<>())
      .def_readwrite("categories", &qoc::ContentScenario::categories)
      .def_readwrite("videos", &qoc::ContentScenario::videos)
      .def_readwrite("weights", &qoc::ContentScenario::weights);

  m.def("default_content_scenario", &qoc::default_content_scenario);
  m.def("accuracy_from_qp", [](const qoc::CategoryAccuracyModel& c, double qp) {
    return qoc::accuracy_from_qp(c, qoc::QpValue(qp));
  }, "model"_a, "qp"_a);
  m.def("qp_from_rate", [](const qoc::VideoRateModel& v, double rate) {
    return qoc::qp_from_rate(v, rate).value();
  }, "model"_a, "rate_kbps"_a);
  m.def("rate_from_qp", &qoc::rate_from_qp, "model"_a, "qp"_a);
  m.def("max_qp_for_accuracy", [](const qoc::CategoryAccuracyModel& c, double p) {
    return qoc::max_qp_for_accuracy(c, p).value();
  }, "model"_a, "p_min"_a);
  m.def("qoc_objective", [](const qoc::ContentScenario& s, std::vector<double> rates) {
    return qoc::qoc_objective(s, rates);
  }, "scenario"_a, "rates_kbps"_a);

  m.def("bessel_j0", &qoc::bessel_j0, "x"_a);
  m.def("path_loss_db", &qoc::path_loss_db, "distance_km"_a);
  m.def("doppler_autocorrelation", [](double v, double t, double fc, const std::string& mode) {
    return qoc::doppler_autocorrelation(v, t, fc, qoc::parse_doppler_mode(mode));
  }, "speed_kmh"_a, "interval_s"_a, "carrier_hz"_a, "mode"_a = "jakes");

  py::class_<qoc::VehicleLink>(m, "VehicleLink")
      .def(py::init<>())
      .def(py::init([](double d, double v, double p, double n) {
        return qoc::VehicleLink{d, v, p, n};
      }), "distance_km"_a, "speed_kmh"_a = 0.0, "tx_power_dbm"_a = 23.0, "noise_psd_dbm_hz"_a = -174.0)
      .def_readwrite("distance_km", &qoc::VehicleLink::distance_km)
      .def_readwrite("speed_kmh", &qoc::VehicleLink::speed_kmh)
      .def_readwrite("tx_power_dbm", &qoc::VehicleLink::tx_power_dbm)
      .def_readwrite("noise_psd_dbm_hz", &qoc::VehicleLink::noise_psd_dbm_hz);

  py::class_<qoc::ChannelState>(m, "ChannelState")
      .def(py::init<>())
      .def(py::init([](double l, std::complex<double> h) { return qoc::ChannelState{l, h}; }),
           "large_scale_db"_a, "small_scale"_a = std::complex<double>(1.0, 0.0))
      .def_readwrite("large_scale_db", &qoc::ChannelState::large_scale_db)
      .def_readwrite("small_scale", &qoc::ChannelState::small_scale)
      .def("power_gain", &qoc::ChannelState::power_gain);

  m.def("transmission_rate", &qoc::transmission_rate, "bandwidth_hz"_a, "link"_a, "state"_a);

  py::class_<qoc::AllocationProblem>(m, "AllocationProblem")
      .def(py::init<>())
      .def_readwrite("scenario", &qoc::AllocationProblem::scenario)
      .def_readwrite("links", &qoc::AllocationProblem::links)
      .def_readwrite("channel", &qoc::AllocationProblem::channel)
      .def_readwrite("b_total_hz", &qoc::AllocationProblem::b_total_hz)
      .def_readwrite("b_min_hz", &qoc::AllocationProblem::b_min_hz)
      .def_readwrite("p_min", &qoc::AllocationProblem::p_min);

  py::class_<qoc::SolverDiagnostics>(m, "SolverDiagnostics")
      .def_readonly("iterations", &qoc::SolverDiagnostics::iterations)
      .def_readonly("converged", &qoc::SolverDiagnostics::converged)
      .def_readonly("kkt_residual", &qoc::SolverDiagnostics::kkt_residual)
      .def_readonly("infeasible_fallback", &qoc::SolverDiagnostics::infeasible_fallback);

  py::class_<qoc::AllocationResult>(m, "AllocationResult")
      .def_readonly("bandwidths_hz", &qoc::AllocationResult::bandwidths_hz)
      .def_readonly("rates_kbps", &qoc::AllocationResult::rates_kbps)
      .def_property_readonly("qps", [](const qoc::AllocationResult& r) {
        std::vector<double> q;
        for (auto v : r.qps) q.push_back(v.value());
        return q;
      })
      .def_readonly("accuracies", &qoc::AllocationResult::accuracies)
      .def_readonly("objective", &qoc::AllocationResult::objective)
      .def_readonly("scheme_objective", &qoc::AllocationResult::scheme_objective)
      .def_readonly("diagnostics", &qoc::AllocationResult::diagnostics);

  py::class_<qoc::KktReport>(m, "KktReport")
      .def_readonly("stationarity_residual", &qoc::KktReport::stationarity_residual)
      .def_readonly("primal_violation", &qoc::KktReport::primal_violation)
      .def_readonly("complementary_slackness", &qoc::KktReport::complementary_slackness)
      .def_readonly("multiplier", &qoc::KktReport::multiplier);

  m.def("effective_lower_bounds", &qoc::effective_lower_bounds, "problem"_a);
  m.def("solve", [](const qoc::AllocationProblem& p, const std::string& scheme) {
    return qoc::solve(p, qoc::parse_scheme(scheme));
  }, "problem"_a, "scheme"_a = "qoc");
  m.def("solve_qoc", &qoc::solve_qoc, "problem"_a);
  m.def("solve_da", &qoc::solve_da, "problem"_a);
  m.def("solve_qoe", &qoc::solve_qoe, "problem"_a);
  m.def("solve_grid_oracle", [](const qoc::AllocationProblem& p, int points, const std::string& scheme) {
    return qoc::solve_grid_oracle(p, points, qoc::parse_scheme(scheme));
  }, "problem"_a, "grid_points"_a = 200, "scheme"_a = "qoc");
  m.def("kkt_check", [](const qoc::AllocationProblem& p, const qoc::AllocationResult& r,
                        const std::string& scheme) {
    return qoc::kkt_check(p, r, qoc::parse_scheme(scheme));
  }, "problem"_a, "result"_a, "scheme"_a = "qoc");
  m.def("project_feasible", [](std::vector<double> x, std::vector<double> l, double total) {
    return qoc::project_feasible(x, l, total);
  }, "point"_a, "lower"_a, "total"_a);

  m.def("fit_accuracy_model", [](const std::vector<std::pair<double, double>>& pts) {
    std::vector<qoc::SamplePoint> s;
    for (auto [x, y] : pts) s.push_back({x, y});
    const auto f = qoc::fit_accuracy_model(s);
    return py::dict("alpha"_a = f.parameters.alpha, "beta"_a = f.parameters.beta,
                    "gamma"_a = f.parameters.gamma, "rmse"_a = f.rmse,
                    "iterations"_a = f.iterations, "converged"_a = f.converged);
  }, "samples"_a);
  m.def("fit_rate_model", [](const std::vector<std::pair<double, double>>& pts) {
    std::vector<qoc::SamplePoint> s;
    for (auto [x, y] : pts) s.push_back({x, y});
    const auto f = qoc::fit_rate_model(s);
    return py::dict("a"_a = f.parameters.a, "b"_a = f.parameters.b, "rmse"_a = f.rmse,
                    "iterations"_a = f.iterations, "converged"_a = f.converged);
  }, "samples"_a);

  m.def("default_scenario_text", [] { return qoc::serialize_scenario(qoc::default_scenario_file()); });

  m.def("run_episode", [](const std::string& scenario_text, double b_total_mhz, const std::string& scheme,
                          std::uint64_t seed) {
    const auto file = qoc::parse_scenario(scenario_text);
    auto cfg = qoc::episode_config(file, qoc::parse_scheme(scheme));
    cfg.seed = seed;
    const auto trace = qoc::run_episode(cfg, qoc::sim_scenario(file, b_total_mhz * 1e6));
    std::vector<std::vector<double>> bandwidths;
    for (const auto& s : trace.slots) bandwidths.push_back(s.bandwidths_hz);
    return py::dict("bandwidths_hz"_a = bandwidths,
                    "overall_accuracy"_a = trace.metrics.overall_accuracy,
                    "correct_density"_a = trace.metrics.correct_density,
                    "infeasible_slots"_a = trace.metrics.infeasible_slots);
  }, "scenario_text"_a, "b_total_mhz"_a = 10.0, "scheme"_a = "qoc", "seed"_a = 1);

  m.def("run_monte_carlo", [](const std::string& scenario_text, double b_total_mhz, std::size_t trials,
                              unsigned threads) {
    const auto file = qoc::parse_scenario(scenario_text);
    qoc::MonteCarloOptions opts;
    opts.trials = trials;
    opts.schemes = file.schemes;
    opts.threads = threads;
    const auto out = qoc::run_monte_carlo(qoc::episode_config(file),
                                          qoc::sim_scenario(file, b_total_mhz * 1e6), opts);
    py::dict result;
    for (const auto& s : out) {
      result[py::str(std::string(qoc::to_string(s.scheme)))] = py::dict(
          "overall_accuracy"_a = s.mean.overall_accuracy,
          "overall_accuracy_stderr"_a = s.overall_accuracy_stderr,
          "correct_density"_a = s.mean.correct_density,
          "correct_density_stderr"_a = s.correct_density_stderr,
          "mean_bandwidth_hz"_a = s.mean.mean_bandwidth_hz);
    }
    return result;
  }, "scenario_text"_a, "b_total_mhz"_a = 10.0, "trials"_a = 10, "threads"_a = 1);

  m.def("run_experiment", [](const std::string& scenario_text, const std::string& out_dir) {
    const auto b = qoc::run_experiment(qoc::parse_scenario(scenario_text), out_dir);
    return b.sweep_csv.string();
  }, "scenario_text"_a, "out_dir"_a);
}
