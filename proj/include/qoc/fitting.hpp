#pragma once

// Least-squares calibration of the accuracy-vs-QP and QP-vs-rate curves from
// measured samples.

#include <optional>
#include <span>

#include "qoc/model.hpp"

namespace qoc {

struct SamplePoint {
  double x = 0.0;  // QP for accuracy samples, rate (kbps) for QP samples
  double y = 0.0;  // accuracy, or QP
};

/// The (a, b) pair of Q = a*exp(b*R).
struct RateCurve {
  double a = 0.0;
  double b = 0.0;
  friend bool operator==(const RateCurve&, const RateCurve&) = default;
};

template <class Params>
struct FitResult {
  Params parameters;
  double rmse = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-12;  // on the cost change of an accepted step
};

/// Damped Gauss-Newton on sum (y - (alpha*x^beta + gamma))^2 with alpha kept
/// negative through alpha = -exp(s). Needs >= 4 samples over >= 3 distinct x.
FitResult<CategoryAccuracyModel> fit_accuracy_model(
    std::span<const SamplePoint> samples, std::optional<CategoryAccuracyModel> init = {},
    const FitOptions& options = {});

/// Same machinery for y = a*exp(b*x) with a = exp(u). Needs >= 2 samples over
/// >= 2 distinct x and strictly positive y.
FitResult<RateCurve> fit_rate_model(std::span<const SamplePoint> samples,
                                    std::optional<RateCurve> init = {},
                                    const FitOptions& options = {});

double rmse(std::span<const SamplePoint> samples, const CategoryAccuracyModel& model);
double rmse(std::span<const SamplePoint> samples, const RateCurve& curve);

/// Gradient norm of the least-squares cost at `model`, in the fit's own
/// parameterization (s, beta, gamma) / (u, b).
double cost_gradient_norm(std::span<const SamplePoint> samples, const CategoryAccuracyModel& model);
double cost_gradient_norm(std::span<const SamplePoint> samples, const RateCurve& curve);

}  // namespace qoc
