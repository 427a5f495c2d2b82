#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qoc/error.hpp"
#include "qoc/sim.hpp"

using namespace qoc;
using doctest::Approx;

namespace {

SimScenario default_sim() {
  SimScenario s;
  s.content = default_content_scenario();
  return s;
}

// Close, strong links so every slot is feasible.
SimScenario near_sim() {
  auto s = default_sim();
  s.channel.distances_km = {0.12, 0.2, 0.15};
  s.channel.shadowing_std_db = 0.0;
  return s;
}

}  // namespace

TEST_CASE("slot count") {
  EpisodeConfig cfg;
  CHECK(slot_count(cfg).slots == 36);
  CHECK(slot_count(cfg).exact);
  cfg.slot_s = 0.07;
  CHECK(slot_count(cfg).slots == 25);
  CHECK_FALSE(slot_count(cfg).exact);
  cfg.processing_delay_s = 3.0;
  CHECK_THROWS_AS(slot_count(cfg), DomainError);
  cfg = EpisodeConfig{};
  cfg.slot_s = 0.0;
  CHECK_THROWS_AS(slot_count(cfg), DomainError);
}

TEST_CASE("channel draws depend only on config, size and seed") {
  const ChannelConfig c;
  const auto a = draw_channel(c, 3, 0.05, 9);
  const auto b = draw_channel(c, 3, 0.05, 9);
  CHECK(a.links == b.links);
  CHECK(a.shadowing_db == b.shadowing_db);
  CHECK(a.fading_seeds == b.fading_seeds);
  for (const auto& l : a.links) {
    CHECK(l.distance_km >= 0.1);
    CHECK(l.distance_km <= 1.1);
    CHECK(l.speed_kmh <= 60.0);
  }
  const auto other = draw_channel(c, 3, 0.05, 10);
  CHECK(other.links != a.links);
  ChannelConfig fixed;
  fixed.distances_km = {0.2, 0.3};
  CHECK_THROWS_AS(draw_channel(fixed, 3, 0.05, 1), DomainError);
}

TEST_CASE("episode basics") {
  EpisodeConfig cfg;
  const auto scn = near_sim();
  const auto trace = run_episode(cfg, scn);
  REQUIRE(trace.slots.size() == 36);
  CHECK(trace.channels.size() == 36);
  // Deep fades can still make an odd slot infeasible.
  CHECK(trace.metrics.infeasible_slots <= 4);
  for (const auto& slot : trace.slots) {
    CHECK((slot.diagnostics.converged || slot.diagnostics.infeasible_fallback));
    const double total = std::accumulate(slot.bandwidths_hz.begin(), slot.bandwidths_hz.end(), 0.0);
    CHECK(total == Approx(scn.problem.b_total_hz).epsilon(1e-6));
  }
  const auto again = run_episode(cfg, scn);
  for (std::size_t l = 0; l < 36; ++l) CHECK(again.slots[l].bandwidths_hz == trace.slots[l].bandwidths_hz);
  CHECK(again.metrics.overall_accuracy == trace.metrics.overall_accuracy);

  const double acc = trace.metrics.overall_accuracy;
  CHECK(acc > 0.3);
  CHECK(acc < 0.73);
}

TEST_CASE("static channel gives identical slots") {
  EpisodeConfig cfg;
  auto scn = near_sim();
  scn.channel.speeds_kmh = {0.0, 0.0, 0.0};
  const auto trace = run_episode(cfg, scn);
  for (const auto& slot : trace.slots) {
    for (std::size_t m = 0; m < 3; ++m)
      CHECK(slot.bandwidths_hz[m] == Approx(trace.slots[0].bandwidths_hz[m]).epsilon(1e-6));
  }
}

TEST_CASE("infeasible slots fall back and are flagged") {
  EpisodeConfig cfg;
  auto scn = default_sim();
  scn.channel.distances_km = {1.0, 1.0, 1.0};
  const auto trace = run_episode(cfg, scn);
  CHECK(trace.metrics.infeasible_slots > 0);
  for (const auto& slot : trace.slots) {
    const double total = std::accumulate(slot.bandwidths_hz.begin(), slot.bandwidths_hz.end(), 0.0);
    CHECK(total <= scn.problem.b_total_hz * (1 + 1e-12));
  }
  const std::vector<double> bounds{1e6, INFINITY, 2e6};
  const auto fb = fallback_bandwidths(bounds, 10e6);
  CHECK(std::accumulate(fb.begin(), fb.end(), 0.0) == Approx(10e6));
  CHECK(fb[1] == Approx(10e6 / 13.0 * 10.0));
}

TEST_CASE("metrics") {
  EpisodeTrace trace;
  ContentScenario scn = default_content_scenario();
  AllocationResult slot;
  slot.accuracies.assign(3, {scn.categories[0].gamma, scn.categories[1].gamma, scn.categories[2].gamma});
  trace.slots = {slot, slot};
  double num = 0.0;
  double den = 0.0;
  for (const auto& v : scn.videos)
    for (std::size_t n = 0; n < 3; ++n) {
      num += v.densities[n] * scn.categories[n].gamma;
      den += v.densities[n];
    }
  CHECK(metric_overall_accuracy(trace, scn) == Approx(num / den).epsilon(1e-14));
  CHECK(metric_correct_density(trace, scn) == Approx(num / 3.0).epsilon(1e-14));

  for (auto& s : trace.slots) s.accuracies.assign(3, {1.0, 1.0, 1.0});
  CHECK(metric_correct_density(trace, scn) == Approx(den / 3.0).epsilon(1e-14));

  for (auto& v : scn.videos) std::fill(v.densities.begin(), v.densities.end(), 0.0);
  CHECK(metric_correct_density(trace, scn) == 0.0);
  CHECK_THROWS_AS(metric_overall_accuracy(trace, scn), DomainError);
  CHECK_THROWS_AS(metric_correct_density(EpisodeTrace{}, scn), DomainError);
}

TEST_CASE("Monte Carlo") {
  EpisodeConfig cfg;
  const auto scn = near_sim();
  MonteCarloOptions one;
  one.trials = 1;
  one.schemes = {Scheme::qoc};
  const auto single = run_monte_carlo(cfg, scn, one);
  const auto episode = run_episode(cfg, scn);
  CHECK(single[0].mean.overall_accuracy == episode.metrics.overall_accuracy);

  MonteCarloOptions serial;
  serial.trials = 24;
  MonteCarloOptions parallel = serial;
  parallel.threads = 4;
  const auto a = run_monte_carlo(cfg, scn, serial);
  const auto b = run_monte_carlo(cfg, scn, parallel);
  for (std::size_t s = 0; s < 3; ++s) {
    CHECK(a[s].mean.overall_accuracy == b[s].mean.overall_accuracy);
    CHECK(a[s].overall_accuracy_stderr == b[s].overall_accuracy_stderr);
  }
  for (std::size_t k = 0; k < serial.trials; ++k) {
    CHECK(a[0].trials[k].correct_density >= a[1].trials[k].correct_density * (1 - 1e-12));
    CHECK(a[0].trials[k].correct_density >= a[2].trials[k].correct_density * (1 - 1e-12));
  }
  CHECK_THROWS_AS(run_monte_carlo(cfg, scn, MonteCarloOptions{0}), DomainError);
}

TEST_CASE("standard error shrinks with more trials") {
  EpisodeConfig cfg;
  auto scn = default_sim();
  scn.channel.distance_range_km = {0.1, 0.3};
  MonteCarloOptions small;
  small.trials = 100;
  small.schemes = {Scheme::qoc};
  MonteCarloOptions large = small;
  large.trials = 400;
  const double se_small = run_monte_carlo(cfg, scn, small)[0].overall_accuracy_stderr;
  const double se_large = run_monte_carlo(cfg, scn, large)[0].overall_accuracy_stderr;
  // Quadrupling trials halves the standard error, up to sampling noise.
  CHECK(se_large / se_small == Approx(0.5).epsilon(0.25));
}
