#pragma once

#include <functional>
#include <stdexcept>

namespace gradnoise {

/// Thrown when an adaptive quadrature fails to reach its tolerance
/// (typically a divergent or near-divergent integrand).
class quadrature_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using RealFn = std::function<double(double)>;

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
/// Throws quadrature_error if the recursion depth limit is exceeded.
double integrate(const RealFn& f, double a, double b, double tol = 1e-12);

/// Integral of f over [a, +inf), via the substitution y = a + t/(1-t).
/// Requires f to decay faster than 1/y^2; otherwise the adaptive rule
/// fails to converge and quadrature_error is thrown.
double integrate_from(const RealFn& f, double a, double tol = 1e-12);

/// Integral of f over (-inf, b].
double integrate_to(const RealFn& f, double b, double tol = 1e-12);

} // namespace gradnoise
