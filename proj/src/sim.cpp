#include "qoc/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "qoc/error.hpp"

namespace qoc {

SlotCount slot_count(const EpisodeConfig& config) {
  const double t = config.total_duration_s;
  const double delay = config.processing_delay_s;
  if (!(delay > 0.0 && t > delay))
    throw DomainError(fmt::format("need T > delay > 0, got T={} delay={}", t, delay));
  if (!(config.slot_s > 0.0)) throw DomainError(fmt::format("slot must be > 0, got {}", config.slot_s));
  const double ratio = (t - delay) / config.slot_s;
  const double nearest = std::round(ratio);
  SlotCount out;
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) {
    out.slots = static_cast<std::size_t>(nearest);
  } else {
    out.slots = static_cast<std::size_t>(std::floor(ratio));
    out.exact = false;
  }
  if (out.slots == 0) throw DomainError("episode has no complete slot");
  return out;
}

ChannelRealization draw_channel(const ChannelConfig& channel, std::size_t vehicles,
                                double slot_s, std::uint64_t seed) {
  if (!channel.distances_km.empty() && channel.distances_km.size() != vehicles)
    throw DomainError(fmt::format("{} distances configured for {} vehicles",
                                  channel.distances_km.size(), vehicles));
  if (!channel.speeds_kmh.empty() && channel.speeds_kmh.size() != vehicles)
    throw DomainError(
        fmt::format("{} speeds configured for {} vehicles", channel.speeds_kmh.size(), vehicles));

  Rng rng(seed);
  std::uniform_real_distribution<double> distance(channel.distance_range_km.lo,
                                                  channel.distance_range_km.hi);
  std::uniform_real_distribution<double> speed(channel.speed_range_kmh.lo,
                                               channel.speed_range_kmh.hi);
  ChannelRealization r;
  for (std::size_t m = 0; m < vehicles; ++m) {
    VehicleLink link;
    link.distance_km = channel.distances_km.empty() ? distance(rng) : channel.distances_km[m];
    link.speed_kmh = channel.speeds_kmh.empty() ? speed(rng) : channel.speeds_kmh[m];
    link.tx_power_dbm = channel.tx_power_dbm;
    link.noise_psd_dbm_hz = channel.noise_psd_dbm_hz;
    validate(link);
    r.links.push_back(link);
  }
  for (std::size_t m = 0; m < vehicles; ++m)
    r.shadowing_db.push_back(channel.shadowing_std_db > 0.0
                                 ? sample_shadowing(rng, channel.shadowing_std_db)
                                 : 0.0);
  for (std::size_t m = 0; m < vehicles; ++m) {
    r.rho.push_back(doppler_autocorrelation(r.links[m].speed_kmh, slot_s, channel.carrier_hz,
                                            channel.doppler));
    r.fading_seeds.push_back(rng());
  }
  return r;
}

AllocationProblem make_slot_problem(const SimScenario& scenario,
                                    const ChannelRealization& realization,
                                    std::vector<ChannelState> snapshot) {
  AllocationProblem p;
  p.scenario = scenario.content;
  p.links = realization.links;
  p.channel = std::move(snapshot);
  p.b_total_hz = scenario.problem.b_total_hz;
  p.b_min_hz = scenario.problem.b_min_fraction * scenario.problem.b_total_hz;
  p.p_min = scenario.problem.p_min;
  p.accuracy_mode = scenario.problem.accuracy_mode;
  p.mos = scenario.problem.mos;
  return p;
}

std::vector<double> fallback_bandwidths(std::span<const double> translated_bounds_hz,
                                        double b_total_hz) {
  std::vector<double> b(translated_bounds_hz.begin(), translated_bounds_hz.end());
  for (auto& v : b) v = std::min(v, b_total_hz);
  const double s = std::accumulate(b.begin(), b.end(), 0.0);
  if (s > b_total_hz)
    for (auto& v : b) v *= b_total_hz / s;
  return b;
}

namespace {

double total_density(const ContentScenario& scenario) {
  double s = 0.0;
  for (const auto& v : scenario.videos) s += std::accumulate(v.densities.begin(), v.densities.end(), 0.0);
  return s;
}

// sum_m sum_n density * slot-averaged accuracy.
double detected_density_sum(const EpisodeTrace& trace, const ContentScenario& scenario) {
  if (trace.slots.empty()) throw DomainError("trace has no slots");
  const double inv_slots = 1.0 / static_cast<double>(trace.slots.size());
  double s = 0.0;
  for (std::size_t m = 0; m < scenario.num_videos(); ++m) {
    for (std::size_t n = 0; n < scenario.num_categories(); ++n) {
      double mean = 0.0;
      for (const auto& slot : trace.slots) mean += slot.accuracies[m][n];
      s += scenario.videos[m].densities[n] * mean * inv_slots;
    }
  }
  return s;
}

AggregateMetrics aggregate(const EpisodeTrace& trace, const ContentScenario& scenario) {
  AggregateMetrics a;
  a.overall_accuracy =
      total_density(scenario) > 0.0 ? metric_overall_accuracy(trace, scenario) : 0.0;
  a.correct_density = metric_correct_density(trace, scenario);
  const std::size_t m_count = scenario.num_videos();
  a.mean_bandwidth_hz.assign(m_count, 0.0);
  for (const auto& slot : trace.slots) {
    for (std::size_t m = 0; m < m_count; ++m) a.mean_bandwidth_hz[m] += slot.bandwidths_hz[m];
    a.mean_objective += slot.objective;
    if (slot.diagnostics.infeasible_fallback) ++a.infeasible_slots;
  }
  const double inv = 1.0 / static_cast<double>(trace.slots.size());
  for (auto& b : a.mean_bandwidth_hz) b *= inv;
  a.mean_objective *= inv;
  return a;
}

}  // namespace

double metric_overall_accuracy(const EpisodeTrace& trace, const ContentScenario& scenario) {
  const double total = total_density(scenario);
  if (!(total > 0.0)) throw DomainError("overall accuracy is undefined when every density is zero");
  return detected_density_sum(trace, scenario) / total;
}

double metric_correct_density(const EpisodeTrace& trace, const ContentScenario& scenario) {
  if (scenario.num_videos() == 0) return 0.0;
  return detected_density_sum(trace, scenario) / static_cast<double>(scenario.num_videos());
}

EpisodeTrace run_episode(const EpisodeConfig& config, const SimScenario& scenario) {
  return run_episode(config, scenario,
                     draw_channel(scenario.channel, scenario.content.num_videos(), config.slot_s,
                                  config.seed));
}

EpisodeTrace run_episode(const EpisodeConfig& config, const SimScenario& scenario,
                         const ChannelRealization& realization) {
  const std::size_t slots = slot_count(config).slots;
  const std::size_t m_count = scenario.content.num_videos();
  validate(scenario.content);

  std::vector<FadingProcess> fading;
  fading.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m)
    fading.emplace_back(realization.rho[m], realization.fading_seeds[m]);

  EpisodeTrace trace;
  trace.realization = realization;
  trace.slots.reserve(slots);
  trace.channels.reserve(slots);
  std::vector<double> warm;

  for (std::size_t l = 0; l < slots; ++l) {
    if (l > 0)
      for (auto& f : fading) f.step();
    auto snapshot = make_channel_snapshot(realization.links, realization.shadowing_db, fading);
    const auto problem = make_slot_problem(scenario, realization, snapshot);
    const auto lower = translate_lower_bounds(problem);

    AllocationResult result;
    if (lower.binding_vehicle) {
      result = evaluate_allocation(problem, config.scheme,
                                   fallback_bandwidths(lower.bounds_hz, problem.b_total_hz));
      result.diagnostics.infeasible_fallback = true;
    } else {
      try {
        result = solve_with_bounds(problem, config.scheme, lower.bounds_hz, warm);
      } catch (const NonConvergenceError& e) {
        result = evaluate_allocation(problem, config.scheme, e.best_iterate());
        result.diagnostics.converged = false;
      }
      warm = result.bandwidths_hz;
    }
    trace.slots.push_back(std::move(result));
    trace.channels.push_back(std::move(snapshot));
  }
  trace.metrics = aggregate(trace, scenario.content);
  return trace;
}

std::vector<SchemeSummary> run_monte_carlo(const EpisodeConfig& base, const SimScenario& scenario,
                                           const MonteCarloOptions& options) {
  if (options.trials == 0) throw DomainError("need at least one trial");
  (void)slot_count(base);
  const std::size_t m_count = scenario.content.num_videos();
  const std::size_t s_count = options.schemes.size();

  // results[s][k]: scheme s, trial k.
  std::vector<std::vector<AggregateMetrics>> results(
      s_count, std::vector<AggregateMetrics>(options.trials));

  auto run_trial = [&](std::size_t k) {
    const std::uint64_t seed = base.seed + k;
    const auto realization = draw_channel(scenario.channel, m_count, base.slot_s, seed);
    for (std::size_t s = 0; s < s_count; ++s) {
      EpisodeConfig cfg = base;
      cfg.scheme = options.schemes[s];
      cfg.seed = seed;
      results[s][k] = run_episode(cfg, scenario, realization).metrics;
    }
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.trials));
  if (threads <= 1) {
    for (std::size_t k = 0; k < options.trials; ++k) run_trial(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (std::size_t k = next++; k < options.trials; k = next++) {
            try {
              run_trial(k);
            } catch (...) {
              std::lock_guard lock(failure_mutex);
              if (!failure) failure = std::current_exception();
            }
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<SchemeSummary> out;
  const double count = static_cast<double>(options.trials);
  for (std::size_t s = 0; s < s_count; ++s) {
    SchemeSummary summary;
    summary.scheme = options.schemes[s];
    auto& mean = summary.mean;
    mean.mean_bandwidth_hz.assign(m_count, 0.0);
    for (const auto& t : results[s]) {
      mean.overall_accuracy += t.overall_accuracy;
      mean.correct_density += t.correct_density;
      mean.mean_objective += t.mean_objective;
      mean.infeasible_slots += t.infeasible_slots;
      for (std::size_t m = 0; m < m_count; ++m) mean.mean_bandwidth_hz[m] += t.mean_bandwidth_hz[m];
    }
    mean.overall_accuracy /= count;
    mean.correct_density /= count;
    mean.mean_objective /= count;
    for (auto& b : mean.mean_bandwidth_hz) b /= count;

    if (options.trials > 1) {
      double va = 0.0;
      double vd = 0.0;
      for (const auto& t : results[s]) {
        va += (t.overall_accuracy - mean.overall_accuracy) * (t.overall_accuracy - mean.overall_accuracy);
        vd += (t.correct_density - mean.correct_density) * (t.correct_density - mean.correct_density);
      }
      summary.overall_accuracy_stderr = std::sqrt(va / (count - 1.0) / count);
      summary.correct_density_stderr = std::sqrt(vd / (count - 1.0) / count);
    }
    summary.trials = std::move(results[s]);
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace qoc
