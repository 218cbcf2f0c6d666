#include "gradnoise/quad.hpp"

#include <cmath>

namespace gradnoise {
namespace {

struct SimpsonPanel {
    double a, b, fa, fm, fb, s;
};

double simpson(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const RealFn& f, SimpsonPanel p, double tol, int depth) {
    if (depth > 60) {
        throw quadrature_error("adaptive Simpson: depth limit exceeded (integrand too rough or divergent)");
    }
    const double m = 0.5 * (p.a + p.b);
    const double lm = 0.5 * (p.a + m);
    const double rm = 0.5 * (m + p.b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double sl = simpson(p.fa, flm, p.fm, m - p.a);
    const double sr = simpson(p.fm, frm, p.fb, p.b - m);
    const double err = sl + sr - p.s;
    if (std::abs(err) <= 15.0 * tol) {
        return sl + sr + err / 15.0; // Richardson correction
    }
    SimpsonPanel left{p.a, m, p.fa, flm, p.fm, sl};
    SimpsonPanel right{m, p.b, p.fm, frm, p.fb, sr};
    return adapt(f, left, 0.5 * tol, depth + 1) + adapt(f, right, 0.5 * tol, depth + 1);
}

} // namespace

double integrate(const RealFn& f, double a, double b, double tol) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    SimpsonPanel whole{a, b, fa, fm, fb, simpson(fa, fm, fb, b - a)};
    return adapt(f, whole, tol, 0);
}

double integrate_from(const RealFn& f, double a, double tol) {
    // y = a + t/(1-t) maps t in [0,1) onto [a, inf); dy = dt/(1-t)^2.
    auto g = [&f, a](double t) -> double {
        if (t >= 1.0 - 1e-14) return 0.0;
        const double om = 1.0 - t;
        const double y = a + t / om;
        const double v = f(y) / (om * om);
        return std::isfinite(v) ? v : 0.0;
    };
    // the cutoff above would silently truncate a divergent tail, so probe
    // the transformed integrand: it must not keep growing as t -> 1
    const double v1 = std::abs(g(1.0 - 1e-8));
    const double v2 = std::abs(g(1.0 - 1e-10));
    if (v2 > 10.0 * v1 && v2 > 1.0) {
        throw quadrature_error("half-line integrand decays slower than 1/y^2");
    }
    return integrate(g, 0.0, 1.0, tol);
}

double integrate_to(const RealFn& f, double b, double tol) {
    return integrate_from([&f, b](double y) { return f(2.0 * b - y); }, b, tol);
}

} // namespace gradnoise
