#include "qoc/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace qoc {

namespace {

constexpr double kSeriesLimit = 12.0;

double j0_series(double x) {
  // Extended precision absorbs the cancellation between terms near |x| = 12.
  const long double q = static_cast<long double>(x) * x / 4.0L;
  long double term = 1.0L;
  long double sum = 1.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (static_cast<long double>(k) * k);
    sum += term;
    if (std::fabs(term) < 1e-22L * std::fabs(sum) && std::fabs(term) < 1e-22L) break;
  }
  return static_cast<double>(sum);
}

double j0_asymptotic(double x) {
  // J0(x) ~ sqrt(2/(pi x)) * (P cos(chi) - Q sin(chi)), chi = x - pi/4,
  // with coefficients a_k = prod_{j<=k} -(2j-1)^2 / (k! 8^k).
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;  // a_k / x^k
  double last = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (-(odd * odd)) / (8.0 * k * x);
    if (std::fabs(next) >= last) break;
    last = std::fabs(next);
    term = next;
    // Even k contribute to P with sign (-1)^(k/2); odd k to Q with (-1)^((k-1)/2).
    switch (k % 4) {
      case 0: p += term; break;
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
    }
    if (last < 1e-17) break;
  }
  const double chi = x - std::numbers::pi / 4.0;
  return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j0(double x) {
  x = std::fabs(x);
  if (std::isnan(x)) return x;
  if (std::isinf(x)) return 0.0;
  return x <= kSeriesLimit ? j0_series(x) : j0_asymptotic(x);
}

}  // namespace qoc
