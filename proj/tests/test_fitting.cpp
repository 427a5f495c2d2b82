#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "qoc/error.hpp"
#include "qoc/fitting.hpp"

using namespace qoc;
using doctest::Approx;

namespace {

std::vector<SamplePoint> accuracy_samples(const CategoryAccuracyModel& c) {
  std::vector<SamplePoint> s;
  for (double q = 12.0; q <= 45.0; q += 3.0) s.push_back({q, accuracy_curve(c, q)});
  return s;
}

std::vector<SamplePoint> rate_samples(const VideoRateModel& v) {
  std::vector<SamplePoint> s;
  for (double r = 500.0; r <= 20000.0; r += 1500.0) s.push_back({r, qp_curve(v, r)});
  return s;
}

bool close(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

}  // namespace

TEST_CASE("accuracy fit recovers every default category") {
  for (const auto& c : default_content_scenario().categories) {
    const auto samples = accuracy_samples(c);
    const auto fit = fit_accuracy_model(samples);
    CHECK(fit.converged);
    CHECK(close(fit.parameters.alpha, c.alpha, 0.01));
    CHECK(close(fit.parameters.beta, c.beta, 0.01));
    CHECK(close(fit.parameters.gamma, c.gamma, 0.01));
    CHECK(fit.rmse <= 1e-10);
    CHECK(std::abs(fit.rmse - rmse(samples, fit.parameters)) <= 1e-12);

    const auto again = fit_accuracy_model(samples, fit.parameters);
    CHECK(again.iterations <= 2);
    CHECK(again.rmse <= fit.rmse + 1e-15);
  }
}

TEST_CASE("rate fit recovers every default video") {
  for (const auto& v : default_content_scenario().videos) {
    const auto fit = fit_rate_model(rate_samples(v));
    CHECK(fit.converged);
    CHECK(close(fit.parameters.a, v.a, 0.01));
    CHECK(close(fit.parameters.b, v.b, 0.01));
    CHECK(fit.rmse <= 1e-10);
  }
}

TEST_CASE("two-point exponential is interpolated exactly") {
  const std::vector<SamplePoint> s{{1000.0, 40.0}, {5000.0, 30.0}};
  const auto fit = fit_rate_model(s);
  const double b = std::log(30.0 / 40.0) / 4000.0;
  CHECK(fit.parameters.b == Approx(b).epsilon(1e-12));
  CHECK(fit.parameters.a == Approx(40.0 / std::exp(b * 1000.0)).epsilon(1e-12));
}

TEST_CASE("noisy accuracy samples") {
  const auto c = default_content_scenario().categories[1];
  std::mt19937_64 rng(99);
  std::normal_distribution<double> noise(0.0, 0.005);
  std::vector<SamplePoint> s;
  for (double q = 10.0; q <= 50.0; q += 0.25) s.push_back({q, std::clamp(accuracy_curve(c, q) + noise(rng), 0.0, 1.0)});
  const auto fit = fit_accuracy_model(s);
  CHECK(fit.rmse == Approx(0.005).epsilon(0.4));
  CHECK(cost_gradient_norm(s, fit.parameters) <= 1e-8 * s.size());
}

TEST_CASE("flat data") {
  std::vector<SamplePoint> s;
  for (double q = 10.0; q <= 40.0; q += 5.0) s.push_back({q, 0.6});
  const auto fit = fit_accuracy_model(s);
  CHECK(std::abs(fit.parameters.alpha) < 1e-6);
  CHECK(fit.parameters.gamma == Approx(0.6).epsilon(1e-6));
}

TEST_CASE("fit input errors") {
  const std::vector<SamplePoint> same_x{{20.0, 0.5}, {20.0, 0.4}, {20.0, 0.3}, {20.0, 0.2}};
  CHECK_THROWS_AS(fit_accuracy_model(same_x), RankDeficiencyError);
  const std::vector<SamplePoint> few{{10.0, 0.5}, {20.0, 0.4}, {30.0, 0.3}};
  CHECK_THROWS_AS(fit_accuracy_model(few), DomainError);
  const std::vector<SamplePoint> out_of_range{{10.0, 0.5}, {20.0, 1.4}, {30.0, 0.3}, {40.0, 0.2}};
  CHECK_THROWS_AS(fit_accuracy_model(out_of_range), DomainError);
  const std::vector<SamplePoint> negative{{100.0, 30.0}, {200.0, -1.0}};
  CHECK_THROWS_AS(fit_rate_model(negative), DomainError);
  const std::vector<SamplePoint> one_rate{{100.0, 30.0}, {100.0, 31.0}};
  CHECK_THROWS_AS(fit_rate_model(one_rate), RankDeficiencyError);
}

TEST_CASE("rmse") {
  const CategoryAccuracyModel flat{-1e-30, 2.0, 0.5};
  const std::vector<SamplePoint> one{{10.0, 0.8}};
  CHECK(rmse(one, flat) == Approx(0.3).epsilon(1e-12));
  const std::vector<SamplePoint> s{{1.0, 0.6}, {2.0, 0.3}, {3.0, 0.5}};
  // residuals 0.1, -0.2, 0 -> sqrt(0.05/3)
  CHECK(std::abs(rmse(s, flat) - std::sqrt(0.05 / 3.0)) <= 1e-12);
  CHECK_THROWS_AS(rmse(std::vector<SamplePoint>{}, flat), DomainError);
}
