#include "qoc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "qoc/error.hpp"

namespace qoc {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(fmt::format("{} must be finite, got {}", what, x));
}

}  // namespace

QpValue::QpValue(double value) {
  require_finite(value, "QP");
  value_ = std::clamp(value, kQpMin, kQpMax);
}

void validate(const CategoryAccuracyModel& model) {
  require_finite(model.alpha, "alpha");
  require_finite(model.beta, "beta");
  require_finite(model.gamma, "gamma");
  if (!(model.alpha < 0.0)) throw DomainError(fmt::format("alpha must be < 0, got {}", model.alpha));
  if (!(model.beta > 1.0)) throw DomainError(fmt::format("beta must be > 1, got {}", model.beta));
  if (!(model.gamma > 0.0 && model.gamma <= 1.0))
    throw DomainError(fmt::format("gamma must be in (0, 1], got {}", model.gamma));
}

void validate(const VideoRateModel& model, std::size_t num_categories) {
  require_finite(model.a, "a");
  require_finite(model.b, "b");
  if (!(model.a > 0.0)) throw DomainError(fmt::format("a must be > 0, got {}", model.a));
  if (!(model.b < 0.0)) throw DomainError(fmt::format("b must be < 0, got {}", model.b));
  if (model.densities.size() != num_categories)
    throw DomainError(fmt::format("density vector has {} entries, expected {}",
                                  model.densities.size(), num_categories));
  for (double d : model.densities) {
    require_finite(d, "density");
    if (d < 0.0) throw DomainError(fmt::format("density must be >= 0, got {}", d));
  }
}

void validate(const ContentScenario& scenario) {
  const std::size_t n = scenario.num_categories();
  if (n == 0) throw DomainError("scenario has no categories");
  if (scenario.weights.size() != n)
    throw DomainError(
        fmt::format("weights has {} entries, expected {}", scenario.weights.size(), n));
  for (const auto& c : scenario.categories) validate(c);
  for (const auto& v : scenario.videos) validate(v, n);
  for (double w : scenario.weights) {
    require_finite(w, "weight");
    if (w < 0.0) throw DomainError(fmt::format("weight must be >= 0, got {}", w));
  }
}

double accuracy_curve(const CategoryAccuracyModel& model, double qp) {
  return model.alpha * std::pow(qp, model.beta) + model.gamma;
}

double accuracy_from_qp(const CategoryAccuracyModel& model, QpValue qp) {
  require_finite(model.alpha, "alpha");
  require_finite(model.beta, "beta");
  require_finite(model.gamma, "gamma");
  return std::clamp(accuracy_curve(model, qp.value()), 0.0, 1.0);
}

double accuracy_slope(const CategoryAccuracyModel& model, double qp) {
  const double p = accuracy_curve(model, qp);
  if (p <= 0.0 || p >= 1.0 || qp <= 0.0) return 0.0;
  return model.alpha * model.beta * std::pow(qp, model.beta - 1.0);
}

double qp_curve(const VideoRateModel& model, double rate_kbps) {
  return model.a * std::exp(model.b * rate_kbps);
}

QpValue qp_from_rate(const VideoRateModel& model, double rate_kbps) {
  require_finite(rate_kbps, "rate");
  if (rate_kbps < 0.0) throw DomainError(fmt::format("rate must be >= 0, got {}", rate_kbps));
  return QpValue(qp_curve(model, rate_kbps));
}

double rate_from_qp(const VideoRateModel& model, double qp) {
  require_finite(qp, "QP");
  if (qp <= 0.0) throw DomainError(fmt::format("QP must be > 0 to invert, got {}", qp));
  if (qp >= model.a) return 0.0;
  return std::log(qp / model.a) / model.b;
}

QpValue max_qp_for_accuracy(const CategoryAccuracyModel& model, double p_min) {
  require_finite(p_min, "p_min");
  if (p_min < 0.0) throw DomainError(fmt::format("p_min must be >= 0, got {}", p_min));
  if (p_min >= model.gamma)
    throw InfeasibleAccuracyError(fmt::format(
        "accuracy {} is not reachable: curve ceiling gamma is {}", p_min, model.gamma));
  const double q = std::pow((p_min - model.gamma) / model.alpha, 1.0 / model.beta);
  return QpValue(std::isfinite(q) ? q : kQpMax);
}

double accuracy_at_rate(const ContentScenario& scenario, std::size_t m, std::size_t n,
                        double rate_kbps) {
  return accuracy_from_qp(scenario.categories.at(n),
                          qp_from_rate(scenario.videos.at(m), rate_kbps));
}

VideoUtility video_content_quality(const ContentScenario& scenario, std::size_t m,
                                   double rate_kbps) {
  const VideoRateModel& video = scenario.videos.at(m);
  const double q_raw = qp_curve(video, rate_kbps);
  const QpValue q(q_raw);
  // dQ/dR vanishes where the QP clamp is active.
  const bool clamped = q_raw < kQpMin || q_raw > kQpMax;
  const double dq_drate = clamped ? 0.0 : video.b * q_raw;

  VideoUtility u;
  for (std::size_t n = 0; n < scenario.num_categories(); ++n) {
    const double w = scenario.weights[n] * video.densities[n];
    if (w == 0.0) continue;
    const auto& cat = scenario.categories[n];
    u.value += w * accuracy_from_qp(cat, q);
    u.slope += w * accuracy_slope(cat, q.value()) * dq_drate;
  }
  return u;
}

double qoc_objective(const ContentScenario& scenario, std::span<const double> rates_kbps) {
  const std::size_t m_count = scenario.num_videos();
  if (rates_kbps.size() != m_count)
    throw DomainError(
        fmt::format("got {} rates for {} videos", rates_kbps.size(), m_count));
  if (m_count == 0) return 0.0;
  double total = 0.0;
  for (std::size_t m = 0; m < m_count; ++m)
    total += video_content_quality(scenario, m, rates_kbps[m]).value;
  return total / static_cast<double>(m_count);
}

double qoc_upper_bound(const ContentScenario& scenario) {
  if (scenario.videos.empty()) return 0.0;
  double total = 0.0;
  for (const auto& video : scenario.videos)
    for (std::size_t n = 0; n < scenario.num_categories(); ++n)
      total += scenario.weights[n] * video.densities[n] * scenario.categories[n].gamma;
  return total / static_cast<double>(scenario.num_videos());
}

ContentScenario default_content_scenario() {
  ContentScenario s;
  s.categories = {
      {-2.214e-12, 6.741, 0.6940},
      {-3.820e-13, 7.256, 0.6958},
      {-8.405e-8, 4.158, 0.7250},
  };
  s.videos = {
      {46.27, -7.086e-5, {11.1, 1.6, 1.5}},
      {45.96, -8.648e-5, {1.0, 8.5, 0.3}},
      {45.22, -1.052e-4, {0.0, 1.9, 0.0}},
  };
  s.weights = {1.0, 1.0, 1.0};
  return s;
}

}  // namespace qoc
