#pragma once

// Time-slotted episodes and Monte Carlo aggregation over channel draws.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "qoc/allocator.hpp"
#include "qoc/channel.hpp"
#include "qoc/model.hpp"

namespace qoc {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Range&, const Range&) = default;
};

struct ChannelConfig {
  std::vector<double> distances_km;  // empty: uniform draw from distance_range_km
  std::vector<double> speeds_kmh;    // empty: uniform draw from speed_range_kmh
  Range distance_range_km{0.1, 1.1};
  Range speed_range_kmh{0.0, 60.0};
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -174.0;
  double carrier_hz = 2.0e9;
  double shadowing_std_db = kShadowingStdDb;
  DopplerMode doppler = DopplerMode::jakes;

  friend bool operator==(const ChannelConfig&, const ChannelConfig&) = default;
};

struct ProblemConfig {
  double b_total_hz = 10.0e6;
  double b_min_fraction = 0.1;
  double p_min = 0.3;
  AccuracyConstraintMode accuracy_mode = AccuracyConstraintMode::per_pair;
  MosModel mos;

  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct SimScenario {
  ContentScenario content;
  ChannelConfig channel;
  ProblemConfig problem;

  friend bool operator==(const SimScenario&, const SimScenario&) = default;
};

struct EpisodeConfig {
  double total_duration_s = 2.0;
  double processing_delay_s = 0.2;
  double slot_s = 0.05;
  Scheme scheme = Scheme::qoc;
  std::uint64_t seed = 1;
};

struct SlotCount {
  std::size_t slots = 0;
  bool exact = true;  // false when (T - delay)/slot was rounded down
};

/// floor((T - delay)/slot). Throws DomainError unless T > delay > 0, slot > 0
/// and at least one slot fits.
SlotCount slot_count(const EpisodeConfig& config);

/// Large-scale geometry and fading seeds of one Monte Carlo trial.
struct ChannelRealization {
  std::vector<VehicleLink> links;
  std::vector<double> shadowing_db;
  std::vector<double> rho;
  std::vector<std::uint64_t> fading_seeds;
};

/// Draws positions, speeds, shadowing and fading seeds from `seed`. Depends
/// only on the channel config, M and the seed, never on the scheme.
ChannelRealization draw_channel(const ChannelConfig& channel, std::size_t vehicles,
                                double slot_s, std::uint64_t seed);

struct AggregateMetrics {
  double overall_accuracy = 0.0;
  double correct_density = 0.0;
  std::vector<double> mean_bandwidth_hz;
  double mean_objective = 0.0;  // slot-averaged content objective
  std::size_t infeasible_slots = 0;
};

struct EpisodeTrace {
  ChannelRealization realization;
  std::vector<AllocationResult> slots;
  std::vector<std::vector<ChannelState>> channels;
  AggregateMetrics metrics;
};

/// Problem data for one slot's channel snapshot.
AllocationProblem make_slot_problem(const SimScenario& scenario,
                                    const ChannelRealization& realization,
                                    std::vector<ChannelState> snapshot);

/// Translated lower bounds (unattainable ones capped at the budget) scaled
/// down to fit the budget.
std::vector<double> fallback_bandwidths(std::span<const double> translated_bounds_hz,
                                        double b_total_hz);

EpisodeTrace run_episode(const EpisodeConfig& config, const SimScenario& scenario);
EpisodeTrace run_episode(const EpisodeConfig& config, const SimScenario& scenario,
                         const ChannelRealization& realization);

/// Density-weighted mean of slot-averaged accuracies. DomainError when every
/// density is zero.
double metric_overall_accuracy(const EpisodeTrace& trace, const ContentScenario& scenario);

/// (1/M) * sum of density * slot-averaged accuracy.
double metric_correct_density(const EpisodeTrace& trace, const ContentScenario& scenario);

struct SchemeSummary {
  Scheme scheme = Scheme::qoc;
  AggregateMetrics mean;
  double overall_accuracy_stderr = 0.0;
  double correct_density_stderr = 0.0;
  std::vector<AggregateMetrics> trials;  // ordered by trial index
};

struct MonteCarloOptions {
  std::size_t trials = 1;
  std::vector<Scheme> schemes{Scheme::qoc, Scheme::da, Scheme::qoe};
  unsigned threads = 1;  // 0: hardware concurrency
};

/// Trial k of every scheme uses seed `base.seed + k`, so schemes see the same
/// channels. Results are reduced in trial order; thread count never changes them.
std::vector<SchemeSummary> run_monte_carlo(const EpisodeConfig& base, const SimScenario& scenario,
                                           const MonteCarloOptions& options);

}  // namespace qoc
