#pragma once

#include <functional>
#include <vector>

namespace sbfl::quadrature {

// Adaptive Simpson integration of f over [a, b] to an absolute tolerance.
// Throws sbfl::numerical_error with the achieved tolerance if some
// subinterval still disagrees after max_depth bisections.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth = 64);

// Same, but the interval is pre-split at the given ascending knots
// (integrable kinks and density peaks belong on segment endpoints, where
// the rule always samples them). Knots outside [a, b] are ignored.
double integrate_segments(const std::function<double(double)>& f, double a,
                          double b, const std::vector<double>& interior_knots,
                          double abs_tol, int max_depth = 64);

}  // namespace sbfl::quadrature
