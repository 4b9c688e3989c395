#ifndef LIPDP_QUADRATURE_HPP
#define LIPDP_QUADRATURE_HPP

#include <functional>

namespace lipdp {

/// Adaptive Simpson quadrature of f over [a, b] to the given absolute
/// tolerance. Interval halving stops once the local Richardson error
/// estimate is small enough or max_depth is reached, so integrands with
/// isolated kinks converge without a global fine grid. a > b integrates
/// with the usual sign flip.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-9, int max_depth = 50);

}  // namespace lipdp

#endif  // LIPDP_QUADRATURE_HPP
