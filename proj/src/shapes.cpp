#include "gradnoise/shapes.hpp"

#include "gradnoise/quad.hpp"
#include "gradnoise/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace gradnoise {

namespace {

double sign_of(double z) { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

/// Antiderivative of (1+y^2)^{-3} from 0, extended as an odd function.
double canonical_G(double x) {
    if (std::isinf(x)) return sign_of(x) * 3.0 * kPi / 16.0;
    const double a = std::abs(x);
    const double t = 1.0 + a * a;
    const double v = a / (4.0 * t * t) + 3.0 * a / (8.0 * t) + 0.375 * std::atan(a);
    return sign_of(x) * v;
}

/// Fritsch-Carlson monotone cubic Hermite interpolant. Between knots the
/// derivative is quadratic, so integrals of gprime^2 are degree-4
/// polynomials and 3-point Gauss quadrature is exact per interval.
struct PchipCurve {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> d;     // knot slopes
    std::vector<double> cumul; // int of gprime^2 from x[0] to each knot
    double cumul_at_zero = 0.0;
    double sup_val = 0.0;
    double sup_slope = 0.0;

    int interval_of(double t) const {
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        int k = static_cast<int>(it - x.begin()) - 1;
        const int last = static_cast<int>(x.size()) - 2;
        return std::clamp(k, 0, last);
    }

    double value(double t) const {
        if (t <= x.front()) return y.front();
        if (t >= x.back()) return y.back();
        const int k = interval_of(t);
        const double h = x[k + 1] - x[k];
        const double s = (t - x[k]) / h;
        const double h00 = (2.0 * s - 3.0) * s * s + 1.0;
        const double h10 = ((s - 2.0) * s + 1.0) * s;
        const double h01 = (3.0 - 2.0 * s) * s * s;
        const double h11 = (s - 1.0) * s * s;
        return y[k] * h00 + h * d[k] * h10 + y[k + 1] * h01 + h * d[k + 1] * h11;
    }

    double slope(double t) const {
        if (t <= x.front() || t >= x.back()) return 0.0;
        const int k = interval_of(t);
        const double h = x[k + 1] - x[k];
        const double s = (t - x[k]) / h;
        const double g00 = 6.0 * s * (s - 1.0);
        const double g10 = (3.0 * s - 4.0) * s + 1.0;
        const double g01 = -g00;
        const double g11 = (3.0 * s - 2.0) * s;
        return (y[k] * g00 + h * d[k] * g10 + y[k + 1] * g01 + h * d[k + 1] * g11) / h;
    }

    double gauss3_slope_sq(double a, double b) const {
        static const double xi = std::sqrt(0.6);
        static const double w0 = 8.0 / 9.0, w1 = 5.0 / 9.0;
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        const double q0 = slope(mid);
        const double qm = slope(mid - half * xi);
        const double qp = slope(mid + half * xi);
        return half * (w0 * q0 * q0 + w1 * (qm * qm + qp * qp));
    }

    /// int of gprime^2 from x[0] to clamp(t); constant outside the table.
    double cumulative(double t) const {
        if (t <= x.front()) return 0.0;
        if (t >= x.back()) return cumul.back();
        const int k = interval_of(t);
        return cumul[k] + gauss3_slope_sq(x[k], t);
    }
};

std::vector<double> fritsch_carlson_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    std::vector<double> h(n - 1), delta(n - 1), d(n);
    for (int k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (int k = 1; k + 1 < n; ++k) {
        if (delta[k - 1] * delta[k] <= 0.0) {
            d[k] = 0.0;
        } else {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    auto endpoint = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0)
            s = 0.0;
        else if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0))
            s = 3.0 * d0;
        return s;
    };
    d[0] = endpoint(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = endpoint(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

std::shared_ptr<const PchipCurve> build_pchip(const std::vector<double>& z, const std::vector<double>& gz) {
    if (z.size() != gz.size()) throw std::invalid_argument("custom shape: column length mismatch");
    if (z.size() < 2) throw std::invalid_argument("custom shape: need at least two samples");
    for (size_t k = 0; k < z.size(); ++k) {
        if (!std::isfinite(z[k]) || !std::isfinite(gz[k]))
            throw std::invalid_argument("custom shape: non-finite table entry");
        if (k > 0 && !(z[k] > z[k - 1]))
            throw std::invalid_argument("custom shape: z column must be strictly ascending");
    }
    auto c = std::make_shared<PchipCurve>();
    c->x = z;
    c->y = gz;
    c->d = fritsch_carlson_slopes(z, gz);

    const int n = static_cast<int>(z.size());
    c->cumul.assign(n, 0.0);
    for (int k = 0; k + 1 < n; ++k)
        c->cumul[k + 1] = c->cumul[k] + c->gauss3_slope_sq(z[k], z[k + 1]);
    c->cumul_at_zero = c->cumulative(0.0);

    for (double v : gz) c->sup_val = std::max(c->sup_val, std::abs(v));
    for (int k = 0; k + 1 < n; ++k) {
        // slope on interval k is (A s^2 + B s + C)/h in the local variable s
        const double h = z[k + 1] - z[k];
        const double dy = gz[k] - gz[k + 1];
        const double A = 6.0 * dy + 3.0 * h * (c->d[k] + c->d[k + 1]);
        const double B = -6.0 * dy - 2.0 * h * (2.0 * c->d[k] + c->d[k + 1]);
        const double C = h * c->d[k];
        double peak = std::max(std::abs(C), std::abs(A + B + C));
        if (A != 0.0) {
            const double s = -B / (2.0 * A);
            if (s > 0.0 && s < 1.0) peak = std::max(peak, std::abs((A * s + B) * s + C));
        }
        c->sup_slope = std::max(c->sup_slope, peak / h);
    }
    return c;
}

} // namespace

NoiseShape make_canonical() {
    NoiseShape s;
    s.kind = ShapeKind::canonical;
    s.regime = ShapeRegime::bounded;
    s.kappa = 3.0 * kPi / 16.0;
    s.sup_g = 1.0;
    s.sup_gprime = 1.0;
    s.g = [](double z) {
        const double a = std::abs(z);
        if (a > 1e8) return 1.0;
        return a / std::sqrt(1.0 + a * a);
    };
    s.gprime = [](double z) {
        if (z == 0.0) return 0.0;
        if (std::abs(z) > 1e100) return 0.0;
        const double t = 1.0 + z * z;
        return sign_of(z) / (t * std::sqrt(t));
    };
    s.G = [](double x) { return canonical_G(x); };
    return s;
}

NoiseShape make_power(double gamma) {
    if (!(gamma > 1.0)) throw std::domain_error("make_power: gamma must exceed 1");
    NoiseShape s;
    s.kind = ShapeKind::power;
    s.regime = ShapeRegime::power;
    s.gamma = gamma;
    const double inf = std::numeric_limits<double>::infinity();
    s.kappa = inf;
    s.sup_g = inf;
    s.sup_gprime = inf;
    s.g = [gamma](double z) { return std::pow(std::abs(z), gamma); };
    s.gprime = [gamma](double z) {
        if (z == 0.0) return 0.0;
        return sign_of(z) * gamma * std::pow(std::abs(z), gamma - 1.0);
    };
    s.G = [gamma](double x) {
        if (x == 0.0) return 0.0;
        return sign_of(x) * gamma * gamma * std::pow(std::abs(x), 2.0 * gamma - 1.0) / (2.0 * gamma - 1.0);
    };
    return s;
}

NoiseShape make_constant(double c) {
    NoiseShape s;
    s.kind = ShapeKind::constant;
    s.regime = ShapeRegime::bounded;
    s.kappa = 0.0;
    s.sup_g = std::abs(c);
    s.sup_gprime = 0.0;
    s.g = [c](double) { return c; };
    s.gprime = [](double) { return 0.0; };
    s.G = [](double) { return 0.0; };
    return s;
}

NoiseShape make_custom(const std::vector<double>& z, const std::vector<double>& gz) {
    auto curve = build_pchip(z, gz);
    NoiseShape s;
    s.kind = ShapeKind::custom;
    s.regime = ShapeRegime::bounded;
    s.kappa = std::min(curve->cumul.back() - curve->cumul_at_zero, curve->cumul_at_zero);
    s.sup_g = curve->sup_val;
    s.sup_gprime = curve->sup_slope;
    s.g = [curve](double t) { return curve->value(t); };
    s.gprime = [curve](double t) { return curve->slope(t); };
    s.G = [curve](double t) { return curve->cumulative(t) - curve->cumul_at_zero; };
    return s;
}

NoiseShape load_custom_shape(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open shape table: " + path);
    std::vector<double> z, gz;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double a, b;
        if (!(row >> a)) continue; // blank or comment-only line
        if (!(row >> b))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two columns");
        double extra;
        if (row >> extra)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two columns");
        z.push_back(a);
        gz.push_back(b);
    }
    try {
        return make_custom(z, gz);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

TailCertificate certify_tail(const NoiseShape& ns, const std::vector<double>& z_grid) {
    if (ns.regime != ShapeRegime::bounded)
        throw std::invalid_argument("certify_tail: bounded regime required (g' not square integrable)");
    const auto q = [&ns](double y) {
        const double d = ns.gprime(y);
        return d * d;
    };
    if (z_grid.empty()) throw std::invalid_argument("certify_tail: empty z grid");
    TailCertificate cert;
    try {
        for (double zv : z_grid) {
            if (!(zv > 0.0)) throw std::invalid_argument("certify_tail: z grid entries must be positive");
            const double tail = integrate_from(q, zv, 1e-12) + integrate_to(q, -zv, 1e-12);
            cert.C_hat = std::max(cert.C_hat, zv * tail);
        }
    } catch (const quadrature_error& e) {
        throw certification_error(std::string("tail certification did not converge: ") + e.what());
    }
    cert.pass = std::isfinite(cert.C_hat);
    return cert;
}

double kappa_of(const NoiseShape& ns) {
    if (ns.regime != ShapeRegime::bounded)
        throw std::invalid_argument("kappa_of: bounded regime required");
    // shapes may carry a removable point defect in g' at 0 (canonical:
    // gprime(0) := 0); nudge the endpoint sample off it so the adaptive
    // rule sees the a.e.-continuous representative
    const auto q_at = [&ns](double y) {
        const double d = ns.gprime(y);
        return d * d;
    };
    const auto q_right = [&q_at](double y) { return q_at(y == 0.0 ? 1e-300 : y); };
    const auto q_left = [&q_at](double y) { return q_at(y == 0.0 ? -1e-300 : y); };
    try {
        const double right = integrate_from(q_right, 0.0, 1e-12);
        const double left = integrate_to(q_left, 0.0, 1e-12);
        return std::min(right, left);
    } catch (const quadrature_error& e) {
        throw certification_error(std::string("kappa quadrature did not converge: ") + e.what());
    }
}

} // namespace gradnoise
