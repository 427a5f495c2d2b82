#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "problems.hpp"
#include "qoc/allocator.hpp"
#include "qoc/error.hpp"

using namespace qoc;
using namespace qoc::testing;
using doctest::Approx;

namespace {

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

AllocationProblem single_vehicle() {
  auto p = equalized_problem();
  p.scenario.videos.resize(1);
  p.links.resize(1);
  p.channel.resize(1);
  return p;
}

AllocationProblem twin_vehicles() {
  auto p = equalized_problem();
  p.scenario.videos = {p.scenario.videos[0], p.scenario.videos[0]};
  p.links.resize(2);
  p.channel.assign(2, ChannelState{path_loss_db(0.6), {1.0, 0.0}});
  p.b_min_hz = 0.0;
  p.p_min = 0.0;
  return p;
}

}  // namespace

TEST_CASE("scheme and mode names") {
  CHECK(parse_scheme("qoe") == Scheme::qoe);
  CHECK(to_string(Scheme::da) == "da");
  CHECK_THROWS_AS(parse_scheme("max"), DomainError);
  CHECK(parse_accuracy_mode("all_categories") == AccuracyConstraintMode::all_categories);
}

TEST_CASE("MOS model") {
  MosModel mos;
  CHECK(mos.value(0.0) == 1.0);
  CHECK(mos.value(100000.0) == Approx(5.0).epsilon(1e-14));
  CHECK(mos.value(1e7) == 5.0);
  CHECK(mos.slope(1e7) == 0.0);
  const double h = 1e-3;
  CHECK(mos.slope(2000.0) == Approx((mos.value(2000.0 + h) - mos.value(2000.0 - h)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("problem validation") {
  auto p = equalized_problem();
  CHECK_NOTHROW(validate(p));
  p.b_min_hz = 0.5 * p.b_total_hz;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = equalized_problem();
  p.p_min = 0.7;
  CHECK_THROWS_AS(validate(p), DomainError);
  p = equalized_problem();
  p.channel.pop_back();
  CHECK_THROWS_AS(validate(p), DomainError);
}

TEST_CASE("effective lower bounds") {
  auto p = equalized_problem(10e6, 0.0, 0.0);
  CHECK(effective_lower_bounds(p) == std::vector<double>(3, 0.0));

  // Strong links: the accuracy targets are met well below B_min.
  p = equalized_problem();
  for (double b : effective_lower_bounds(p)) CHECK(b == 1e6);

  // A weak link needs more than B_min to reach QP <= 40.95 on video 1.
  p.channel[0] = ChannelState{path_loss_db(0.45), {1.0, 0.0}};
  const auto lower = effective_lower_bounds(p);
  CHECK(lower[0] > 1e6);
  const double c = snr_bandwidth_product(p.links[0], p.channel[0]);
  const double rate = shannon_rate(lower[0], c) / kBitsPerRateUnit;
  CHECK(qp_from_rate(p.scenario.videos[0], rate).value() == Approx(40.952255757).epsilon(1e-8));

  // Near-gamma target on a far link cannot be met.
  p = equalized_problem();
  p.p_min = 0.69;
  p.channel[1] = ChannelState{path_loss_db(1.0), {1.0, 0.0}};
  try {
    (void)effective_lower_bounds(p);
    FAIL("expected infeasibility");
  } catch (const InfeasibleError& e) {
    CHECK(e.vehicle() == 1);
  }
  const auto t = translate_lower_bounds(p);
  REQUIRE(t.binding_vehicle.has_value());
  CHECK(std::isinf(t.bounds_hz[1]));
}

TEST_CASE("accuracy constraint modes") {
  // Video 3 shows no people, so per-pair mode ignores category 1 for it.
  auto p = equalized_problem();
  p.p_min = 0.6;
  p.channel[2] = ChannelState{path_loss_db(0.3), {1.0, 0.0}};
  const auto per_pair = translate_lower_bounds(p);
  p.accuracy_mode = AccuracyConstraintMode::all_categories;
  const auto all = translate_lower_bounds(p);
  CHECK(all.bounds_hz[2] >= per_pair.bounds_hz[2]);
  CHECK(all.bounds_hz[0] == per_pair.bounds_hz[0]);
}

TEST_CASE("objective gradient") {
  const auto p = equalized_problem();
  std::vector<double> b{4e6, 3e6, 3e6};
  for (Scheme s : {Scheme::qoc, Scheme::da, Scheme::qoe}) {
    const auto og = objective_and_gradient(p, b, s);
    for (std::size_t m = 0; m < 3; ++m) {
      auto up = b;
      auto down = b;
      const double h = 1e-6 * b[m];
      up[m] += h;
      down[m] -= h;
      const double fd = (objective_and_gradient(p, up, s).value - objective_and_gradient(p, down, s).value) / (2 * h);
      CHECK(og.gradient[m] == Approx(fd).epsilon(1e-5));
    }
  }
  CHECK_THROWS_AS(objective_and_gradient(p, std::vector<double>{0.0, 5e6, 5e6}), DomainError);

  auto empty = p;
  for (auto& v : empty.scenario.videos) std::fill(v.densities.begin(), v.densities.end(), 0.0);
  const auto z = objective_and_gradient(empty, b);
  CHECK(z.value == 0.0);
  for (double g : z.gradient) CHECK(g == 0.0);

  const auto twin = twin_vehicles();
  const auto tg = objective_and_gradient(twin, std::vector<double>{3e6, 3e6});
  CHECK(tg.gradient[0] == tg.gradient[1]);
}

TEST_CASE("projection") {
  std::vector<double> lower{1.0, 1.0, 1.0};
  std::vector<double> inside{2.0, 3.0, 1.5};
  CHECK(project_feasible(inside, lower, 10.0) == inside);
  CHECK(project_feasible(lower, lower, 10.0) == lower);
  CHECK_THROWS_AS(project_feasible(inside, lower, 2.0), InfeasibleError);

  // Brute-force oracle: dense grid on the budget face, where the projection
  // of a point above the budget must land.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 6.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x{u(rng) + 2.0, u(rng) + 2.0, u(rng) - 1.0};
    const double total = 6.0;
    const auto proj = project_feasible(x, lower, total);
    CHECK(sum(proj) == Approx(total).epsilon(1e-12));
    double best = INFINITY;
    std::vector<double> arg;
    const int n = 1200;
    const double span = total - 3.0;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const std::vector<double> y{1.0 + span * i / n, 1.0 + span * j / n, 1.0 + span * (n - i - j) / n};
        double d = 0.0;
        for (int k = 0; k < 3; ++k) d += (y[k] - x[k]) * (y[k] - x[k]);
        if (d < best) {
          best = d;
          arg = y;
        }
      }
    }
    for (int k = 0; k < 3; ++k) CHECK(std::abs(proj[k] - arg[k]) < 1e-4 * total + span / n);
  }
}

TEST_CASE("solver trivial cases") {
  const auto one = single_vehicle();
  CHECK(solve_qoc(one).bandwidths_hz[0] == Approx(one.b_total_hz).epsilon(1e-12));
  CHECK(solve_grid_oracle(one, 200).bandwidths_hz[0] == Approx(one.b_total_hz).epsilon(1e-12));

  const auto twin = twin_vehicles();
  for (Scheme s : {Scheme::qoc, Scheme::da, Scheme::qoe}) {
    const auto r = solve(twin, s);
    CHECK(r.bandwidths_hz[0] == Approx(5e6).epsilon(1e-6));
    CHECK(r.bandwidths_hz[1] == Approx(5e6).epsilon(1e-6));
  }
  const auto r = solve_qoc(twin);
  CHECK(kkt_check(twin, r).stationarity_residual <= 1e-6);
}

TEST_CASE("equalized default scenario") {
  const auto p = equalized_problem();
  const auto r = solve_qoc(p);
  CHECK(r.diagnostics.converged);
  CHECK(sum(r.bandwidths_hz) == Approx(p.b_total_hz).epsilon(1e-6));
  CHECK(r.bandwidths_hz[0] > r.bandwidths_hz[1]);
  CHECK(r.bandwidths_hz[1] > r.bandwidths_hz[2]);

  const auto grid = solve_grid_oracle(p, 200);
  CHECK(std::abs(r.objective - grid.objective) <= 1e-4 * grid.objective);
  CHECK(r.objective >= grid.objective - 1e-12 * grid.objective);

  std::vector<double> rates;
  for (double b : r.bandwidths_hz)
    rates.push_back(transmission_rate(b, p.links[0], p.channel[0]) / kBitsPerRateUnit);
  CHECK(r.objective == Approx(qoc_objective(p.scenario, rates)).epsilon(1e-9));
  CHECK(r.rates_kbps == rates);

  const auto da = solve_da(p);
  CHECK(da.bandwidths_hz[2] > r.bandwidths_hz[2]);
  CHECK(da.objective <= r.objective);

  const auto qoe = solve_qoe(p);
  CHECK(qoe.bandwidths_hz[0] == Approx(qoe.bandwidths_hz[1]).epsilon(1e-6));
  CHECK(qoe.bandwidths_hz[1] == Approx(qoe.bandwidths_hz[2]).epsilon(1e-6));
  CHECK(qoe.objective <= r.objective);
}

TEST_CASE("DA with zero densities equals QoC with unit densities") {
  auto zero = equalized_problem();
  for (auto& v : zero.scenario.videos) std::fill(v.densities.begin(), v.densities.end(), 0.0);
  zero.p_min = 0.0;
  auto ones = zero;
  for (auto& v : ones.scenario.videos) std::fill(v.densities.begin(), v.densities.end(), 1.0);
  const auto a = solve_da(zero);
  const auto b = solve_qoc(ones);
  for (std::size_t m = 0; m < 3; ++m) CHECK(a.bandwidths_hz[m] == Approx(b.bandwidths_hz[m]).epsilon(1e-6));
}

TEST_CASE("grid oracle agreement and KKT on random instances") {
  Rng rng(2024);
  for (int k = 0; k < 8; ++k) {
    const auto p = random_feasible_problem(rng);
    for (Scheme s : {Scheme::qoc, Scheme::qoe}) {
      const auto r = solve(p, s);
      const auto g = solve_grid_oracle(p, 200, s);
      CHECK(std::abs(r.scheme_objective - g.scheme_objective) <= 1e-4 * std::abs(g.scheme_objective));
      const auto kkt = kkt_check(p, r, s);
      CHECK(kkt.stationarity_residual <= 1e-6);
      CHECK(kkt.primal_violation <= 1e-6);
      CHECK(kkt.multiplier >= 0.0);
    }
    const auto q = solve_qoc(p);
    const auto d = solve_da(p);
    const auto e = solve_qoe(p);
    CHECK(q.objective >= d.objective * (1 - 1e-12));
    CHECK(q.objective >= e.objective * (1 - 1e-12));
    const auto lower = effective_lower_bounds(p);
    for (std::size_t m = 0; m < 3; ++m) CHECK(q.bandwidths_hz[m] >= lower[m] * (1 - 1e-12));
  }
}

TEST_CASE("grid oracle consistency and limits") {
  const auto p = equalized_problem();
  const auto coarse = solve_grid_oracle(p, 50, Scheme::qoc, 0);
  const auto fine = solve_grid_oracle(p, 200, Scheme::qoc, 0);
  CHECK(fine.objective >= coarse.objective - 1e-9);
  CHECK(fine.objective - coarse.objective <= 1e-2 * fine.objective);

  auto big = p;
  for (int i = 0; i < 2; ++i) {
    big.scenario.videos.push_back(big.scenario.videos[0]);
    big.links.push_back(big.links[0]);
    big.channel.push_back(big.channel[0]);
  }
  big.b_min_hz = 0.0;
  CHECK_THROWS_AS(solve_grid_oracle(big, 200), UnsupportedSizeError);
  CHECK_THROWS_AS(solve_grid_oracle(p, 20), UnsupportedSizeError);
}

TEST_CASE("KKT negative control") {
  const auto p = equalized_problem();
  const auto bad = evaluate_allocation(p, Scheme::qoc, {1e6, 1e6, 8e6});
  CHECK(kkt_check(p, bad).stationarity_residual > 1e-2);
}

TEST_CASE("concavity probe") {
  Rng rng(17);
  const auto p = equalized_problem();
  const auto report = verify_concavity(p, 1000, rng);
  CHECK(report.chords == 1000);
  CHECK(report.violations == 0);

  auto flat = p;
  for (auto& v : flat.scenario.videos) std::fill(v.densities.begin(), v.densities.end(), 0.0);
  flat.p_min = 0.0;
  CHECK(verify_concavity(flat, 200, rng).worst_violation == 0.0);

  // beta < 1 alone keeps the bandwidth-space objective concave: alpha*Q^beta
  // is a negative multiple of exp(beta*b*R), which is concave in R.
  auto shallow = p;
  shallow.p_min = 0.0;
  for (auto& c : shallow.scenario.categories) {
    c.alpha = -0.08;
    c.beta = 0.5;
    c.gamma = 0.9;
  }
  CHECK(verify_concavity(shallow, 1000, rng).violations == 0);

  // A convex accuracy curve (alpha > 0) is caught.
  auto convex = shallow;
  for (auto& c : convex.scenario.categories) {
    c.alpha = 2e-4;
    c.beta = 2.0;
    c.gamma = 0.2;
  }
  const auto bad = verify_concavity(convex, 1000, rng);
  CHECK(bad.violations > 0);
  CHECK(bad.worst_violation > 1e-9);
}

TEST_CASE("monotone in budget and invariant to density scale") {
  double prev = 0.0;
  for (double mhz = 4.0; mhz <= 20.0; mhz += 2.0) {
    auto p = equalized_problem(mhz * 1e6);
    p.channel.assign(3, ChannelState{path_loss_db(0.35), {1.0, 0.0}});
    p.b_min_hz = 0.4e6;
    const double obj = solve_qoc(p).objective;
    CHECK(obj >= prev);
    prev = obj;
  }

  const auto p = equalized_problem();
  auto scaled = p;
  for (auto& v : scaled.scenario.videos)
    for (auto& d : v.densities) d *= 3.5;
  const auto a = solve_qoc(p);
  const auto b = solve_qoc(scaled);
  for (std::size_t m = 0; m < 3; ++m) CHECK(a.bandwidths_hz[m] == Approx(b.bandwidths_hz[m]).epsilon(1e-6));
}

TEST_CASE("warm start reaches the same optimum") {
  const auto p = equalized_problem();
  const auto cold = solve_qoc(p);
  const std::vector<double> warm{2e6, 2e6, 2e6};
  const auto r = solve(p, Scheme::qoc, warm);
  for (std::size_t m = 0; m < 3; ++m)
    CHECK(r.bandwidths_hz[m] == Approx(cold.bandwidths_hz[m]).epsilon(1e-6));
}

TEST_CASE("iteration cap reports the best iterate") {
  const auto p = equalized_problem();
  SolverOptions opts;
  opts.max_iterations = 1;
  try {
    (void)solve(p, Scheme::qoc, {}, opts);
    FAIL("expected non-convergence");
  } catch (const NonConvergenceError& e) {
    CHECK(e.best_iterate().size() == 3);
    CHECK(sum(e.best_iterate()) <= p.b_total_hz * (1 + 1e-12));
  }
}
