#pragma once

namespace qoc {

/// Bessel function of the first kind, order zero. Power series for |x| <= 12,
/// Hankel asymptotic expansion (optimally truncated) beyond.
double bessel_j0(double x);

}  // namespace qoc
