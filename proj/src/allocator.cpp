#include "qoc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "qoc/error.hpp"

namespace qoc {

Scheme parse_scheme(std::string_view text) {
  if (text == "qoc") return Scheme::qoc;
  if (text == "da") return Scheme::da;
  if (text == "qoe") return Scheme::qoe;
  throw DomainError(fmt::format("unknown scheme '{}' (expected qoc, da or qoe)", text));
}

std::string_view to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::qoc: return "qoc";
    case Scheme::da: return "da";
    case Scheme::qoe: return "qoe";
  }
  return "?";
}

AccuracyConstraintMode parse_accuracy_mode(std::string_view text) {
  if (text == "per_pair") return AccuracyConstraintMode::per_pair;
  if (text == "all_categories") return AccuracyConstraintMode::all_categories;
  throw DomainError(fmt::format("unknown accuracy constraint mode '{}'", text));
}

std::string_view to_string(AccuracyConstraintMode mode) {
  return mode == AccuracyConstraintMode::per_pair ? "per_pair" : "all_categories";
}

double MosModel::kappa() const { return 4.0 / std::log1p(max_kbps / ref_kbps); }

double MosModel::value(double rate_kbps) const {
  return std::clamp(1.0 + kappa() * std::log1p(rate_kbps / ref_kbps), 1.0, 5.0);
}

double MosModel::slope(double rate_kbps) const {
  return rate_kbps < max_kbps ? kappa() / (ref_kbps + rate_kbps) : 0.0;
}

void validate(const AllocationProblem& problem) {
  validate(problem.scenario);
  const std::size_t m_count = problem.num_vehicles();
  if (problem.links.size() != m_count || problem.channel.size() != m_count)
    throw DomainError(fmt::format("problem has {} videos, {} links and {} channel states",
                                  m_count, problem.links.size(), problem.channel.size()));
  for (const auto& link : problem.links) validate(link);
  for (const auto& state : problem.channel)
    if (!std::isfinite(state.large_scale_db) || !std::isfinite(std::abs(state.small_scale)))
      throw DomainError("channel state must be finite");
  if (!(problem.b_total_hz > 0.0) || !std::isfinite(problem.b_total_hz))
    throw DomainError(fmt::format("total bandwidth must be > 0, got {}", problem.b_total_hz));
  if (m_count > 0 &&
      !(problem.b_min_hz >= 0.0 && problem.b_min_hz <= problem.b_total_hz / m_count * (1 + 1e-12)))
    throw DomainError(fmt::format("minimum bandwidth {} outside [0, total/M]", problem.b_min_hz));
  double min_gamma = 1.0;
  for (const auto& c : problem.scenario.categories) min_gamma = std::min(min_gamma, c.gamma);
  if (!(problem.p_min >= 0.0 && problem.p_min < min_gamma))
    throw DomainError(
        fmt::format("p_min must be in [0, {}), got {}", min_gamma, problem.p_min));
  if (!(problem.mos.ref_kbps > 0.0 && problem.mos.max_kbps > 0.0))
    throw DomainError("MOS reference and saturation rates must be > 0");
}

namespace {

// Per-vehicle utility of rate for each scheme, chained through the Shannon rate.
class Evaluator {
 public:
  Evaluator(const AllocationProblem& problem, Scheme scheme)
      : problem_(problem), scheme_(scheme) {
    snr_.reserve(problem.num_vehicles());
    for (std::size_t m = 0; m < problem.num_vehicles(); ++m)
      snr_.push_back(snr_bandwidth_product(problem.links[m], problem.channel[m]));
    if (scheme == Scheme::da) {
      da_scenario_ = problem.scenario;
      std::fill(da_scenario_.weights.begin(), da_scenario_.weights.end(), 1.0);
      for (auto& v : da_scenario_.videos) std::fill(v.densities.begin(), v.densities.end(), 1.0);
    }
  }

  std::size_t size() const { return snr_.size(); }

  double rate_kbps(std::size_t m, double bandwidth_hz) const {
    return bandwidth_hz > 0.0 ? shannon_rate(bandwidth_hz, snr_[m]) / kBitsPerRateUnit : 0.0;
  }

  VideoUtility utility(std::size_t m, double rate_kbps) const {
    switch (scheme_) {
      case Scheme::qoc: return video_content_quality(problem_.scenario, m, rate_kbps);
      case Scheme::da: return video_content_quality(da_scenario_, m, rate_kbps);
      case Scheme::qoe: return {problem_.mos.value(rate_kbps), problem_.mos.slope(rate_kbps)};
    }
    return {};
  }

  double value(std::span<const double> bandwidths_hz) const {
    if (size() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t m = 0; m < size(); ++m)
      total += utility(m, rate_kbps(m, bandwidths_hz[m])).value;
    return total / static_cast<double>(size());
  }

  double value_and_gradient(std::span<const double> bandwidths_hz, std::span<double> grad) const {
    if (size() == 0) return 0.0;
    const double inv_m = 1.0 / static_cast<double>(size());
    double total = 0.0;
    for (std::size_t m = 0; m < size(); ++m) {
      const double b = bandwidths_hz[m];
      const auto u = utility(m, rate_kbps(m, b));
      total += u.value;
      const double drate =
          b > 0.0 ? shannon_rate_slope(b, snr_[m]) / kBitsPerRateUnit
                  : (snr_[m] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      grad[m] = u.slope == 0.0 ? 0.0 : inv_m * u.slope * drate;
    }
    return total * inv_m;
  }

 private:
  const AllocationProblem& problem_;
  Scheme scheme_;
  ContentScenario da_scenario_;
  std::vector<double> snr_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double sum(std::span<const double> a) { return std::accumulate(a.begin(), a.end(), 0.0); }

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> projected_step(std::span<const double> x, std::span<const double> g,
                                   double step, std::span<const double> lower, double total) {
  std::vector<double> trial(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] + step * g[i];
  auto p = project_feasible(trial, lower, total);
  for (std::size_t i = 0; i < x.size(); ++i) p[i] -= x[i];
  return p;
}

}  // namespace

LowerBoundTranslation translate_lower_bounds(const AllocationProblem& problem) {
  validate(problem);
  const auto& scn = problem.scenario;
  LowerBoundTranslation out;
  out.bounds_hz.reserve(problem.num_vehicles());
  for (std::size_t m = 0; m < problem.num_vehicles(); ++m) {
    const double snr = snr_bandwidth_product(problem.links[m], problem.channel[m]);
    double bound = problem.b_min_hz;
    for (std::size_t n = 0; n < scn.num_categories() && problem.p_min > 0.0; ++n) {
      const bool active = problem.accuracy_mode == AccuracyConstraintMode::all_categories ||
                          scn.weights[n] * scn.videos[m].densities[n] > 0.0;
      if (!active) continue;
      const double q_max = max_qp_for_accuracy(scn.categories[n], problem.p_min).value();
      const double rate_kbps = rate_from_qp(scn.videos[m], q_max);
      bound = std::max(bound, bandwidth_for_rate(rate_kbps * kBitsPerRateUnit, snr));
    }
    out.bounds_hz.push_back(bound);
  }
  double running = 0.0;
  for (std::size_t m = 0; m < out.bounds_hz.size(); ++m) {
    running += out.bounds_hz[m];
    if (!std::isfinite(out.bounds_hz[m]) || running > problem.b_total_hz * (1.0 + 1e-12)) {
      out.binding_vehicle = m;
      break;
    }
  }
  return out;
}

std::vector<double> effective_lower_bounds(const AllocationProblem& problem) {
  auto t = translate_lower_bounds(problem);
  if (t.binding_vehicle) {
    const std::size_t m = *t.binding_vehicle;
    const double b = t.bounds_hz[m];
    throw InfeasibleError(
        std::isfinite(b)
            ? fmt::format("vehicle {} needs {:.6g} Hz; translated bounds exceed the {:.6g} Hz budget",
                          m + 1, b, problem.b_total_hz)
            : fmt::format("vehicle {} cannot reach accuracy {} at any bandwidth", m + 1,
                          problem.p_min),
        m);
  }
  return std::move(t.bounds_hz);
}

ObjectiveValue objective_and_gradient(const AllocationProblem& problem,
                                      std::span<const double> bandwidths_hz, Scheme scheme) {
  if (bandwidths_hz.size() != problem.num_vehicles())
    throw DomainError(fmt::format("got {} bandwidths for {} vehicles", bandwidths_hz.size(),
                                  problem.num_vehicles()));
  for (double b : bandwidths_hz)
    if (!(b > 0.0)) throw DomainError(fmt::format("bandwidth must be > 0 Hz, got {}", b));
  Evaluator ev(problem, scheme);
  ObjectiveValue out;
  out.gradient.resize(bandwidths_hz.size());
  out.value = ev.value_and_gradient(bandwidths_hz, out.gradient);
  return out;
}

std::vector<double> project_feasible(std::span<const double> point, std::span<const double> lower,
                                     double total) {
  if (point.size() != lower.size())
    throw DomainError(fmt::format("point has {} entries, lower bounds {}", point.size(), lower.size()));
  const double lower_sum = sum(lower);
  if (!std::isfinite(lower_sum) || lower_sum > total * (1.0 + 1e-12)) {
    const std::size_t bad = static_cast<std::size_t>(
        std::find_if(lower.begin(), lower.end(), [](double l) { return !std::isfinite(l); }) -
        lower.begin());
    throw InfeasibleError(fmt::format("lower bounds sum to {} > budget {}", lower_sum, total),
                          bad < lower.size() ? bad : 0);
  }
  const std::size_t n = point.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(point[i], lower[i]);
  if (sum(x) <= total) return x;

  // Find the shift tau > 0 with sum(max(point - tau, lower)) = total. Bisection
  // pins down the active set; the shift is then solved in closed form.
  auto shifted_sum = [&](double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::max(point[i] - tau, lower[i]);
    return s;
  };
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, point[i] - lower[i]);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (shifted_sum(mid) > total ? lo : hi) = mid;
  }
  double tau = hi;
  for (int pass = 0; pass < 4; ++pass) {
    double free_sum = 0.0;
    double fixed_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (point[i] - tau > lower[i]) {
        free_sum += point[i];
        ++free_count;
      } else {
        fixed_sum += lower[i];
      }
    }
    if (free_count == 0) break;
    const double exact = (free_sum + fixed_sum - total) / static_cast<double>(free_count);
    if (exact == tau) break;
    tau = exact;
  }
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(point[i] - tau, lower[i]);
  // Rounding residue goes to the lowest-index free coordinate.
  const double residue = total - sum(x);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > lower[i] && x[i] + residue >= lower[i]) {
      x[i] += residue;
      break;
    }
  }
  return x;
}

AllocationResult evaluate_allocation(const AllocationProblem& problem, Scheme scheme,
                                     std::vector<double> bandwidths_hz) {
  const Evaluator ev(problem, scheme);
  const auto& scn = problem.scenario;
  AllocationResult r;
  r.rates_kbps.reserve(bandwidths_hz.size());
  for (std::size_t m = 0; m < bandwidths_hz.size(); ++m) {
    const double rate = ev.rate_kbps(m, bandwidths_hz[m]);
    const QpValue q = qp_from_rate(scn.videos[m], rate);
    std::vector<double> acc;
    acc.reserve(scn.num_categories());
    for (const auto& cat : scn.categories) acc.push_back(accuracy_from_qp(cat, q));
    r.rates_kbps.push_back(rate);
    r.qps.push_back(q);
    r.accuracies.push_back(std::move(acc));
  }
  r.objective = qoc_objective(scn, r.rates_kbps);
  r.scheme_objective = ev.value(bandwidths_hz);
  r.bandwidths_hz = std::move(bandwidths_hz);
  return r;
}

AllocationResult solve_with_bounds(const AllocationProblem& problem, Scheme scheme,
                                   std::span<const double> lower_hz,
                                   std::span<const double> warm_start,
                                   const SolverOptions& options) {
  const std::size_t n = problem.num_vehicles();
  if (lower_hz.size() != n)
    throw DomainError(fmt::format("got {} lower bounds for {} vehicles", lower_hz.size(), n));
  const double total_hz = problem.b_total_hz;
  if (n == 0) return evaluate_allocation(problem, scheme, {});

  // Work in budget fractions; keep every coordinate off zero so the rate
  // derivative stays finite.
  std::vector<double> lower(n);
  for (std::size_t m = 0; m < n; ++m) lower[m] = lower_hz[m] / total_hz;
  const double slack = 1.0 - sum(lower);
  if (!(slack >= -1e-12)) {
    (void)project_feasible(lower, lower, 1.0);  // throws with the infeasibility detail
  }
  const double floor = std::min(1e-9, std::max(slack, 0.0) / (2.0 * static_cast<double>(n)));
  for (auto& l : lower) l = std::max(l, floor);

  std::vector<double> x(n);
  if (warm_start.size() == n) {
    for (std::size_t m = 0; m < n; ++m) x[m] = warm_start[m] / total_hz;
    // Top up to the full budget so the iterate starts on the saturated face.
    const double gap = 1.0 - sum(x);
    if (gap > 0.0)
      for (auto& v : x) v += gap / static_cast<double>(n);
  } else {
    const double rest = std::max(0.0, 1.0 - sum(lower)) / static_cast<double>(n);
    for (std::size_t m = 0; m < n; ++m) x[m] = lower[m] + rest;
  }
  x = project_feasible(x, lower, 1.0);

  const Evaluator ev(problem, scheme);
  auto eval = [&](std::span<const double> frac, std::span<double> grad) {
    std::vector<double> b(n);
    for (std::size_t m = 0; m < n; ++m) b[m] = frac[m] * total_hz;
    const double f = ev.value_and_gradient(b, grad);
    for (auto& g : grad) g *= total_hz;
    return f;
  };
  auto value_only = [&](std::span<const double> frac) {
    std::vector<double> b(n);
    for (std::size_t m = 0; m < n; ++m) b[m] = frac[m] * total_hz;
    return ev.value(b);
  };

  std::vector<double> g(n);
  double f = eval(x, g);
  auto pg_norm = [&](std::span<const double> at, std::span<const double> grad) {
    return norm2(projected_step(at, grad, 1.0, lower, 1.0));
  };
  const double pg0 = pg_norm(x, g);

  constexpr double kArmijo = 1e-4;
  constexpr double kStepMin = 1e-30;
  constexpr double kStepMax = 1e30;
  const double gmax = std::abs(*std::max_element(g.begin(), g.end(),
                                                 [](double a, double b) { return std::abs(a) < std::abs(b); }));
  double step = gmax > 0.0 ? std::clamp(0.1 / gmax, kStepMin, kStepMax) : 1.0;

  int iter = 0;
  bool converged = pg0 == 0.0 || !std::isfinite(pg0);
  std::vector<double> g_new(n);
  while (!converged && iter < options.max_iterations) {
    ++iter;
    const auto d = projected_step(x, g, step, lower, 1.0);
    const double slope = dot(g, d);
    if (norm2(d) == 0.0) {
      converged = true;
      break;
    }
    double lambda = 1.0;
    std::vector<double> trial(n);
    double f_trial = 0.0;
    for (;;) {
      for (std::size_t m = 0; m < n; ++m) trial[m] = x[m] + lambda * d[m];
      f_trial = value_only(trial);
      // Below rounding level the sufficient-increase test is meaningless;
      // accept the spectral step as is.
      if (f_trial >= f + kArmijo * lambda * slope ||
          lambda * slope <= 1e-15 * std::max(1.0, std::abs(f)))
        break;
      lambda *= 0.5;
    }
    const double f_new = eval(trial, g_new);
    double sy = 0.0;
    double ss = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double s = trial[m] - x[m];
      sy += s * (g_new[m] - g[m]);
      ss += s * s;
    }
    x.swap(trial);
    g.swap(g_new);
    f = f_new;
    step = sy < 0.0 ? std::clamp(ss / -sy, kStepMin, kStepMax) : std::min(step * 10.0, kStepMax);
    if (pg_norm(x, g) <= options.tolerance * pg0) converged = true;
  }

  std::vector<double> bandwidths(n);
  for (std::size_t m = 0; m < n; ++m) bandwidths[m] = x[m] * total_hz;
  if (!converged)
    throw NonConvergenceError(
        fmt::format("projected gradient ascent did not converge in {} iterations", iter),
        std::move(bandwidths));

  auto result = evaluate_allocation(problem, scheme, std::move(bandwidths));
  result.diagnostics.iterations = iter;
  result.diagnostics.converged = true;
  result.diagnostics.kkt_residual = kkt_check(problem, result, scheme).stationarity_residual;
  return result;
}

AllocationResult solve(const AllocationProblem& problem, Scheme scheme,
                       std::span<const double> warm_start, const SolverOptions& options) {
  const auto lower = effective_lower_bounds(problem);
  return solve_with_bounds(problem, scheme, lower, warm_start, options);
}

AllocationResult solve_qoc(const AllocationProblem& problem) { return solve(problem, Scheme::qoc); }
AllocationResult solve_da(const AllocationProblem& problem) { return solve(problem, Scheme::da); }
AllocationResult solve_qoe(const AllocationProblem& problem) { return solve(problem, Scheme::qoe); }

AllocationResult solve_grid_oracle(const AllocationProblem& problem, int grid_points,
                                   Scheme scheme, int zoom_levels) {
  const std::size_t n = problem.num_vehicles();
  if (n == 0 || n > 4)
    throw UnsupportedSizeError(fmt::format("grid oracle supports 1..4 vehicles, got {}", n));
  if (grid_points < 50)
    throw UnsupportedSizeError(fmt::format("grid oracle needs >= 50 points, got {}", grid_points));
  const auto lower = effective_lower_bounds(problem);
  const double total = problem.b_total_hz;
  const double slack = total - sum(lower);
  const Evaluator ev(problem, scheme);

  std::vector<double> best(lower);
  best.back() += slack;
  double best_f = ev.value(best);
  if (n == 1) return evaluate_allocation(problem, scheme, best);

  // Free coordinates are the first n-1 excesses over the lower bounds; the
  // last vehicle takes what remains of the budget.
  const std::size_t free = n - 1;
  std::vector<double> lo(free, 0.0);
  std::vector<double> hi(free, slack);
  std::vector<double> point(n);
  std::vector<double> excess(free);

  for (int level = 0; level <= zoom_levels; ++level) {
    std::vector<double> spacing(free);
    for (std::size_t i = 0; i < free; ++i)
      spacing[i] = (hi[i] - lo[i]) / static_cast<double>(grid_points - 1);
    std::vector<double> incumbent(best);

    std::function<void(std::size_t, double)> walk = [&](std::size_t dim, double used) {
      if (dim == free) {
        const double last = slack - used;
        if (last < 0.0) return;
        for (std::size_t i = 0; i < free; ++i) point[i] = lower[i] + excess[i];
        point[free] = lower[free] + last;
        const double f = ev.value(point);
        if (f > best_f) {
          best_f = f;
          incumbent = point;
        }
        return;
      }
      for (int k = 0; k < grid_points; ++k) {
        excess[dim] = lo[dim] + spacing[dim] * k;
        if (used + excess[dim] > slack * (1.0 + 1e-15)) break;
        walk(dim + 1, used + excess[dim]);
      }
    };
    walk(0, 0.0);
    best = incumbent;

    for (std::size_t i = 0; i < free; ++i) {
      const double centre = best[i] - lower[i];
      lo[i] = std::max(0.0, centre - 2.0 * spacing[i]);
      hi[i] = std::min(slack, centre + 2.0 * spacing[i]);
    }
  }
  return evaluate_allocation(problem, scheme, best);
}

ConcavityReport verify_concavity(const AllocationProblem& problem, int chords, Rng& rng,
                                 Scheme scheme, double tolerance) {
  const std::size_t n = problem.num_vehicles();
  // Without an accuracy target the bounds are just B_min, so curve parameters
  // that break the model invariants can still be probed.
  std::vector<double> lower(n, problem.b_min_hz);
  if (problem.p_min > 0.0) {
    lower = effective_lower_bounds(problem);
  } else if (problem.links.size() != n || problem.channel.size() != n ||
             !(problem.b_total_hz > 0.0) || problem.b_min_hz * n > problem.b_total_hz) {
    throw DomainError("concavity probe needs matching links, channels and a feasible budget");
  }
  const double slack = problem.b_total_hz - sum(lower);
  const Evaluator ev(problem, scheme);
  std::exponential_distribution<double> expo(1.0);

  // Uniform draw from {B >= lower, sum(B) <= total} via a Dirichlet with a
  // slack component.
  auto draw = [&] {
    std::vector<double> e(n + 1);
    for (auto& v : e) v = expo(rng);
    const double s = sum(e);
    std::vector<double> b(n);
    for (std::size_t m = 0; m < n; ++m) b[m] = lower[m] + slack * e[m] / s;
    return b;
  };

  ConcavityReport report;
  std::vector<double> mid(n);
  for (int c = 0; c < chords; ++c) {
    const auto x = draw();
    const auto y = draw();
    for (std::size_t m = 0; m < n; ++m) mid[m] = 0.5 * (x[m] + y[m]);
    const double gap = 0.5 * (ev.value(x) + ev.value(y)) - ev.value(mid);
    ++report.chords;
    report.worst_violation = std::max(report.worst_violation, gap);
    if (gap > tolerance) ++report.violations;
  }
  return report;
}

KktReport kkt_check(const AllocationProblem& problem, const AllocationResult& result,
                    Scheme scheme) {
  const std::size_t n = problem.num_vehicles();
  const auto& b = result.bandwidths_hz;
  const double total = problem.b_total_hz;
  KktReport report;
  if (n == 0) return report;

  const auto lower = translate_lower_bounds(problem).bounds_hz;
  const Evaluator ev(problem, scheme);
  std::vector<double> grad(n);
  ev.value_and_gradient(b, grad);
  double scale = 0.0;
  for (double g : grad) scale = std::max(scale, std::abs(g));

  double violation = std::max(0.0, sum(b) - total);
  for (std::size_t m = 0; m < n; ++m)
    violation = std::max(violation, std::isfinite(lower[m]) ? lower[m] - b[m] : total);
  report.primal_violation = std::max(0.0, violation) / total;

  const double active_tol = 1e-9 * total;
  std::vector<bool> free(n);
  double free_grad = 0.0;
  std::size_t free_count = 0;
  for (std::size_t m = 0; m < n; ++m) {
    free[m] = !(std::isfinite(lower[m]) && b[m] <= lower[m] + active_tol);
    if (free[m]) {
      free_grad += grad[m];
      ++free_count;
    }
  }
  const double budget_gap = total - sum(b);
  const bool budget_active = budget_gap <= 1e-6 * total;
  if (budget_active) {
    if (free_count > 0) {
      report.multiplier = free_grad / static_cast<double>(free_count);
    } else {
      report.multiplier = *std::max_element(grad.begin(), grad.end());
    }
  }
  report.multiplier = std::max(report.multiplier, 0.0);

  if (scale == 0.0) return report;
  double residual = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double r = grad[m] - report.multiplier;
    // Free coordinates need equality; coordinates at their bound need a
    // non-negative bound multiplier (gradient not above the budget price).
    residual = std::max(residual, free[m] ? std::abs(r) : std::max(r, 0.0));
  }
  report.stationarity_residual = residual / scale;
  report.complementary_slackness =
      report.multiplier * std::max(budget_gap, 0.0) / (scale * total);
  return report;
}

}  // namespace qoc
