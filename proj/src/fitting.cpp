#include "qoc/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "qoc/error.hpp"

namespace qoc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fills residuals (model - y) and the Jacobian of the residuals for `theta`.
using ResidualFn = std::function<void(const VectorXd& theta, VectorXd& r, MatrixXd& jac)>;

struct LmOutcome {
  VectorXd theta;
  int iterations = 0;
  bool converged = false;
};

LmOutcome levenberg_marquardt(const ResidualFn& residuals, VectorXd theta, std::size_t samples,
                              double scale, const FitOptions& options) {
  const auto p = theta.size();
  VectorXd r(samples);
  MatrixXd jac(samples, p);
  residuals(theta, r, jac);
  double cost = 0.5 * r.squaredNorm();
  double mu = 1e-3;
  // Below this the fit is exact to rounding; relative changes stop meaning anything.
  const double floor = 1e-28 * std::max(scale, 1e-300);

  LmOutcome out;
  out.theta = theta;
  if (cost <= floor) {
    out.converged = true;
    return out;
  }
  VectorXd r_new(samples);
  MatrixXd jac_new(samples, p);
  for (int it = 1; it <= options.max_iterations; ++it) {
    out.iterations = it;
    const MatrixXd a = jac.transpose() * jac;
    const VectorXd g = jac.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 60 && !accepted; ++tries) {
      MatrixXd damped = a;
      for (Eigen::Index i = 0; i < p; ++i)
        damped(i, i) += mu * std::max(a(i, i), 1e-300);
      const VectorXd step = damped.ldlt().solve(-g);
      if (!step.allFinite()) {
        mu *= 10.0;
        continue;
      }
      const VectorXd trial = theta + step;
      residuals(trial, r_new, jac_new);
      const double trial_cost = 0.5 * r_new.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const double change = cost - trial_cost;
        theta = trial;
        r.swap(r_new);
        jac.swap(jac_new);
        const double previous = cost;
        cost = trial_cost;
        mu = std::max(mu / 3.0, 1e-15);
        accepted = true;
        if (change <= options.relative_tolerance * previous || cost <= floor) {
          out.theta = theta;
          out.converged = true;
          return out;
        }
      } else {
        mu *= 4.0;
      }
    }
    if (!accepted) {
      // No descent direction left at any damping: stationary to rounding.
      out.theta = theta;
      out.converged = true;
      return out;
    }
  }
  out.theta = theta;
  return out;
}

std::size_t distinct_x(std::span<const SamplePoint> samples) {
  std::set<double> xs;
  for (const auto& s : samples) xs.insert(s.x);
  return xs.size();
}

void require_finite(std::span<const SamplePoint> samples) {
  for (const auto& s : samples)
    if (!std::isfinite(s.x) || !std::isfinite(s.y))
      throw DomainError(fmt::format("sample ({}, {}) is not finite", s.x, s.y));
}

double sum_squares(std::span<const SamplePoint> samples) {
  double s = 0.0;
  for (const auto& p : samples) s += p.y * p.y;
  return s;
}

// Theta for the accuracy curve: (s, beta, gamma), alpha = -exp(s).
void accuracy_residuals(std::span<const SamplePoint> samples, const VectorXd& theta, VectorXd& r,
                        MatrixXd& jac) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double x = samples[i].x;
    const double term = x > 0.0 ? std::exp(theta[0] + theta[1] * std::log(x)) : 0.0;
    r[i] = theta[2] - term - samples[i].y;
    jac(i, 0) = -term;
    jac(i, 1) = x > 0.0 ? -term * std::log(x) : 0.0;
    jac(i, 2) = 1.0;
  }
}

// Theta for the rate curve: (u, b), a = exp(u).
void rate_residuals(std::span<const SamplePoint> samples, const VectorXd& theta, VectorXd& r,
                    MatrixXd& jac) {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = std::exp(theta[0] + theta[1] * samples[i].x);
    r[i] = f - samples[i].y;
    jac(i, 0) = f;
    jac(i, 1) = f * samples[i].x;
  }
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  bool ok = false;
};

LineFit least_squares_line(std::span<const double> xs, std::span<const double> ys) {
  LineFit f;
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return f;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.ok = std::isfinite(f.slope) && std::isfinite(f.intercept);
  return f;
}

// gamma from just above max(y); (s, beta) from the line log(gamma - y) = s + beta*log(x).
// The gamma offset is scanned and the lowest-cost candidate kept.
VectorXd accuracy_initial_guess(std::span<const SamplePoint> samples) {
  double y_max = -std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    y_max = std::max(y_max, s.y);
    y_min = std::min(y_min, s.y);
  }
  const double span = std::max(y_max - y_min, 1e-6);

  VectorXd best(3);
  best << std::log(1e-6 * span), 2.0, y_max;
  double best_cost = std::numeric_limits<double>::infinity();
  VectorXd r(samples.size());
  MatrixXd jac(samples.size(), 3);
  for (int k = -12; k <= 2; ++k) {
    const double gamma = y_max + span * std::pow(10.0, 0.5 * k);
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& s : samples) {
      if (s.x > 0.0 && gamma - s.y > 0.0) {
        lx.push_back(std::log(s.x));
        ly.push_back(std::log(gamma - s.y));
      }
    }
    const auto line = least_squares_line(lx, ly);
    if (!line.ok) continue;
    VectorXd theta(3);
    theta << line.intercept, line.slope, gamma;
    accuracy_residuals(samples, theta, r, jac);
    const double cost = r.squaredNorm();
    if (std::isfinite(cost) && cost < best_cost) {
      best_cost = cost;
      best = theta;
    }
  }
  return best;
}

}  // namespace

double rmse(std::span<const SamplePoint> samples, const CategoryAccuracyModel& model) {
  if (samples.empty()) throw DomainError("RMSE of an empty sample set");
  double s = 0.0;
  for (const auto& p : samples) {
    const double r = accuracy_curve(model, p.x) - p.y;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(samples.size()));
}

double rmse(std::span<const SamplePoint> samples, const RateCurve& curve) {
  if (samples.empty()) throw DomainError("RMSE of an empty sample set");
  double s = 0.0;
  for (const auto& p : samples) {
    const double r = curve.a * std::exp(curve.b * p.x) - p.y;
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(samples.size()));
}

double cost_gradient_norm(std::span<const SamplePoint> samples, const CategoryAccuracyModel& model) {
  VectorXd theta(3);
  theta << std::log(-model.alpha), model.beta, model.gamma;
  VectorXd r(samples.size());
  MatrixXd jac(samples.size(), 3);
  accuracy_residuals(samples, theta, r, jac);
  return (jac.transpose() * r).norm();
}

double cost_gradient_norm(std::span<const SamplePoint> samples, const RateCurve& curve) {
  VectorXd theta(2);
  theta << std::log(curve.a), curve.b;
  VectorXd r(samples.size());
  MatrixXd jac(samples.size(), 2);
  rate_residuals(samples, theta, r, jac);
  return (jac.transpose() * r).norm();
}

FitResult<CategoryAccuracyModel> fit_accuracy_model(std::span<const SamplePoint> samples,
                                                    std::optional<CategoryAccuracyModel> init,
                                                    const FitOptions& options) {
  require_finite(samples);
  for (const auto& s : samples)
    if (s.y < 0.0 || s.y > 1.0)
      throw DomainError(fmt::format("accuracy sample {} outside [0, 1]", s.y));
  if (distinct_x(samples) < 3)
    throw RankDeficiencyError(
        fmt::format("accuracy fit needs >= 3 distinct QP values, got {}", distinct_x(samples)));
  if (samples.size() < 4)
    throw DomainError(fmt::format("accuracy fit needs >= 4 samples, got {}", samples.size()));

  VectorXd theta(3);
  if (init) {
    if (!(init->alpha < 0.0)) throw DomainError("initial alpha must be < 0");
    theta << std::log(-init->alpha), init->beta, init->gamma;
  } else {
    theta = accuracy_initial_guess(samples);
  }
  const auto outcome = levenberg_marquardt(
      [&](const VectorXd& t, VectorXd& r, MatrixXd& j) { accuracy_residuals(samples, t, r, j); },
      theta, samples.size(), sum_squares(samples), options);

  FitResult<CategoryAccuracyModel> fit;
  fit.parameters = {-std::exp(outcome.theta[0]), outcome.theta[1], outcome.theta[2]};
  fit.rmse = rmse(samples, fit.parameters);
  fit.iterations = outcome.iterations;
  fit.converged = outcome.converged;
  return fit;
}

FitResult<RateCurve> fit_rate_model(std::span<const SamplePoint> samples,
                                    std::optional<RateCurve> init, const FitOptions& options) {
  require_finite(samples);
  for (const auto& s : samples)
    if (!(s.y > 0.0)) throw DomainError(fmt::format("QP sample {} must be > 0", s.y));
  if (distinct_x(samples) < 2)
    throw RankDeficiencyError(
        fmt::format("rate fit needs >= 2 distinct rates, got {}", distinct_x(samples)));

  VectorXd theta(2);
  if (init) {
    if (!(init->a > 0.0)) throw DomainError("initial a must be > 0");
    theta << std::log(init->a), init->b;
  } else {
    std::vector<double> xs;
    std::vector<double> ly;
    for (const auto& s : samples) {
      xs.push_back(s.x);
      ly.push_back(std::log(s.y));
    }
    const auto line = least_squares_line(xs, ly);
    theta << line.intercept, line.slope;
  }
  const auto outcome = levenberg_marquardt(
      [&](const VectorXd& t, VectorXd& r, MatrixXd& j) { rate_residuals(samples, t, r, j); },
      theta, samples.size(), sum_squares(samples), options);

  FitResult<RateCurve> fit;
  fit.parameters = {std::exp(outcome.theta[0]), outcome.theta[1]};
  fit.rmse = rmse(samples, fit.parameters);
  fit.iterations = outcome.iterations;
  fit.converged = outcome.converged;
  return fit;
}

}  // namespace qoc
