#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradnoise {

/// Thrown when a tail/nontriviality certification cannot be computed
/// (divergent or non-convergent quadrature).
class certification_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ShapeKind { canonical, power, constant, custom };

/// bounded: sup|g|, sup|g'| finite (martingale-limit hypotheses);
/// power: g(z) = |z|^gamma, gamma > 1 (fast-rate hypotheses).
enum class ShapeRegime { bounded, power };

/// The noise amplitude profile g together with its derivative and the
/// dissipation integral G(x) = int_0^x g'(y)^2 dy. kappa is the smaller
/// of the two half-line integrals of g'^2 (the nontriviality constant).
///
/// Values are immutable after construction and cheap to copy; custom
/// shapes share their interpolation tables.
struct NoiseShape {
    ShapeKind kind = ShapeKind::constant;
    ShapeRegime regime = ShapeRegime::bounded;
    double gamma = 0.0; // meaningful for kind == power only
    double kappa = 0.0;
    double sup_g = 0.0;      // +inf in the power regime
    double sup_gprime = 0.0; // +inf in the power regime

    std::function<double(double)> g;
    std::function<double(double)> gprime;
    std::function<double(double)> G;
};

/// g(z) = |z| / sqrt(1 + z^2). g is not differentiable at 0; we take
/// gprime(0) = 0 (the point has measure zero and the model reads
/// "noise switched off at critical points" literally). G and kappa use
/// closed forms; tests pin them against the quadrature oracle.
NoiseShape make_canonical();

/// g(z) = |z|^gamma, gamma > 1. Unbounded; kappa and the sups are +inf.
NoiseShape make_power(double gamma);

/// g identically c: reduces the model to additive noise (OU control).
NoiseShape make_constant(double c);

/// Monotone cubic (Fritsch-Carlson) interpolant of tabulated (z, g(z))
/// samples, held constant outside the table. G is exact per interval
/// (the interpolant derivative is piecewise quadratic). Requires at
/// least two samples with strictly ascending z.
NoiseShape make_custom(const std::vector<double>& z, const std::vector<double>& gz);

/// Reads a whitespace-separated two-column table (z, g(z)), one sample
/// per line, '#' starting a comment. Throws std::runtime_error on
/// malformed input.
NoiseShape load_custom_shape(const std::string& path);

struct TailCertificate {
    double C_hat = 0.0;
    bool pass = false;
};

/// Certifies the tail condition sup_z z * (two-sided tail of g'^2) < inf
/// on the given z grid. Requires a bounded-regime shape; the power
/// family is rejected up front (g' is not square integrable).
TailCertificate certify_tail(const NoiseShape& ns, const std::vector<double>& z_grid);

/// Nontriviality constant by direct quadrature:
/// min( int_0^inf g'^2, int_-inf^0 g'^2 ). Bounded regime only.
double kappa_of(const NoiseShape& ns);

} // namespace gradnoise
