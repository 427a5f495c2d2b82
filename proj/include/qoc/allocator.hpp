#pragma once

// Per-slot bandwidth allocation. Every scheme maximizes a separable concave
// utility of the vehicles' Shannon rates over {B >= lower, sum(B) <= total};
// the schemes differ only in the per-vehicle utility.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qoc/channel.hpp"
#include "qoc/model.hpp"

namespace qoc {

enum class Scheme { qoc, da, qoe };

Scheme parse_scheme(std::string_view text);
std::string_view to_string(Scheme scheme);

/// Which (vehicle, category) pairs the minimum-accuracy constraint covers.
enum class AccuracyConstraintMode {
  per_pair,        // only pairs with weight * density > 0
  all_categories,  // every category for every vehicle
};

AccuracyConstraintMode parse_accuracy_mode(std::string_view text);
std::string_view to_string(AccuracyConstraintMode mode);

/// Content-blind mean-opinion-score stand-in used by the QoE baseline:
/// MOS(R) = clamp(1 + kappa*ln(1 + R/ref), 1, 5), kappa = 4/ln(1 + max/ref).
struct MosModel {
  double ref_kbps = 100.0;
  double max_kbps = 100000.0;

  double kappa() const;
  double value(double rate_kbps) const;
  double slope(double rate_kbps) const;

  friend bool operator==(const MosModel&, const MosModel&) = default;
};

struct AllocationProblem {
  ContentScenario scenario;
  std::vector<VehicleLink> links;     // M
  std::vector<ChannelState> channel;  // M, snapshot for this slot
  double b_total_hz = 10e6;
  double b_min_hz = 0.0;
  double p_min = 0.0;
  AccuracyConstraintMode accuracy_mode = AccuracyConstraintMode::per_pair;
  MosModel mos;

  std::size_t num_vehicles() const noexcept { return scenario.num_videos(); }
};

/// Throws DomainError on any violated invariant.
void validate(const AllocationProblem& problem);

struct SolverDiagnostics {
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  bool infeasible_fallback = false;
};

struct AllocationResult {
  std::vector<double> bandwidths_hz;
  std::vector<double> rates_kbps;
  std::vector<QpValue> qps;
  std::vector<std::vector<double>> accuracies;  // [vehicle][category]
  double objective = 0.0;         // content objective of the problem's scenario
  double scheme_objective = 0.0;  // the objective the scheme maximized
  SolverDiagnostics diagnostics;
};

struct KktReport {
  double stationarity_residual = 0.0;
  double primal_violation = 0.0;
  double complementary_slackness = 0.0;
  double multiplier = 0.0;  // budget multiplier, objective units per Hz
};

struct ConcavityReport {
  int chords = 0;
  int violations = 0;
  double worst_violation = 0.0;  // max of (f(x)+f(y))/2 - f((x+y)/2), floored at 0
};

struct SolverOptions {
  int max_iterations = 10000;
  double tolerance = 1e-8;  // projected-gradient norm relative to its initial value
};

/// Lower bounds before the feasibility check. Unattainable accuracy targets
/// show up as +inf entries.
struct LowerBoundTranslation {
  std::vector<double> bounds_hz;
  std::optional<std::size_t> binding_vehicle;  // set when infeasible
};

LowerBoundTranslation translate_lower_bounds(const AllocationProblem& problem);

/// max(b_min, bandwidth needed for p_min on every constrained category), per
/// vehicle. Throws InfeasibleError naming the first vehicle that breaks the budget.
std::vector<double> effective_lower_bounds(const AllocationProblem& problem);

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;  // per Hz
};

/// Scheme objective at `bandwidths_hz` with its analytic gradient. Throws
/// DomainError for non-positive bandwidths.
ObjectiveValue objective_and_gradient(const AllocationProblem& problem,
                                      std::span<const double> bandwidths_hz,
                                      Scheme scheme = Scheme::qoc);

/// Euclidean projection onto {x >= lower, sum(x) <= total}.
std::vector<double> project_feasible(std::span<const double> point, std::span<const double> lower,
                                     double total);

AllocationResult solve(const AllocationProblem& problem, Scheme scheme,
                       std::span<const double> warm_start = {},
                       const SolverOptions& options = {});

/// Solve against precomputed lower bounds (skips the translation step).
AllocationResult solve_with_bounds(const AllocationProblem& problem, Scheme scheme,
                                   std::span<const double> lower_hz,
                                   std::span<const double> warm_start = {},
                                   const SolverOptions& options = {});

AllocationResult solve_qoc(const AllocationProblem& problem);
AllocationResult solve_da(const AllocationProblem& problem);
AllocationResult solve_qoe(const AllocationProblem& problem);

/// Brute-force maximizer over a uniform grid on the saturated budget face,
/// followed by zoomed re-gridding around the incumbent. Test oracle; M <= 4.
AllocationResult solve_grid_oracle(const AllocationProblem& problem, int grid_points,
                                   Scheme scheme = Scheme::qoc, int zoom_levels = 8);

/// Midpoint-concavity probe of the scheme objective on random feasible chords.
ConcavityReport verify_concavity(const AllocationProblem& problem, int chords, Rng& rng,
                                 Scheme scheme = Scheme::qoc, double tolerance = 1e-9);

KktReport kkt_check(const AllocationProblem& problem, const AllocationResult& result,
                    Scheme scheme = Scheme::qoc);

/// Fill rates, QPs, accuracies and objectives for a given bandwidth vector.
AllocationResult evaluate_allocation(const AllocationProblem& problem, Scheme scheme,
                                     std::vector<double> bandwidths_hz);

}  // namespace qoc
