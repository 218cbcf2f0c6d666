#include "gradnoise/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace gradnoise {

namespace {

constexpr double kZ95 = 1.959963984540054;

void require_common_times(const std::vector<TrajectoryDiagnostics>& ens) {
    if (ens.empty()) throw alignment_error("empty ensemble");
    const auto& t0 = ens.front().times;
    if (t0.empty()) throw alignment_error("trajectory carries no records");
    for (const auto& d : ens)
        if (d.times != t0) throw alignment_error("trajectories disagree on the time axis");
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0.0;
    for (size_t k = 1; k < t.size(); ++k) s += 0.5 * (f[k - 1] + f[k]) * (t[k] - t[k - 1]);
    return s;
}

ValueWithCI mean_from(const std::vector<double>& xs) {
    const size_t n = xs.size();
    if (n == 0) throw alignment_error("empty sample");
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(n);
    if (n == 1) return {m, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    return {m, kZ95 * sd / std::sqrt(static_cast<double>(n))};
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

} // namespace

ValueWithCI ensemble_mean(const std::vector<double>& values) { return mean_from(values); }

ValueWithCI sample_variance(const std::vector<double>& values) {
    const size_t n = values.size();
    if (n < 2) throw alignment_error("variance needs at least two samples");
    double m = 0.0;
    for (double x : values) m += x;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : values) ss += (x - m) * (x - m);
    const double var = ss / static_cast<double>(n - 1);
    return {var, kZ95 * var * std::sqrt(2.0 / static_cast<double>(n - 1))};
}

ValueWithCI gradient_l1_integral(const std::vector<TrajectoryDiagnostics>& ens) {
    require_common_times(ens);
    std::vector<double> per;
    per.reserve(ens.size());
    for (const auto& d : ens) per.push_back(trapezoid(d.times, d.grad_l1));
    return mean_from(per);
}

ValueWithCI gradient_l1_integral_full(const std::vector<TrajectoryDiagnostics>& ens) {
    if (ens.empty()) throw alignment_error("empty ensemble");
    std::vector<double> per;
    per.reserve(ens.size());
    for (const auto& d : ens) per.push_back(d.grad_l1_integral);
    return mean_from(per);
}

ValueWithCI gradient_l2g_integral_full(const std::vector<TrajectoryDiagnostics>& ens) {
    if (ens.empty()) throw alignment_error("empty ensemble");
    std::vector<double> per;
    per.reserve(ens.size());
    for (const auto& d : ens) per.push_back(d.grad_l2g_integral);
    return mean_from(per);
}

EnergyBalance energy_balance(const std::vector<TrajectoryDiagnostics>& ens, const ModelConfig& cfg) {
    require_common_times(ens);
    const double cq = noise_constant(cfg.n);
    const size_t L = ens.front().times.size();
    const size_t n = ens.size();

    EnergyBalance out;
    out.times = ens.front().times;
    out.initial_l2_sq = ens.front().l2_sq.front();
    out.residual_mean.resize(L);
    out.residual_ci.resize(L);
    out.lhs_mean.resize(L);
    out.lhs_ci.resize(L);

    std::vector<double> res(n), lhs(n);
    for (size_t k = 0; k < L; ++k) {
        for (size_t r = 0; r < n; ++r) {
            const auto& d = ens[r];
            const double l = d.l2_sq[k] - 2.0 * d.drift_work[k] + cq * d.corr_diss[k];
            lhs[r] = l;
            res[r] = l - d.l2_sq.front() - d.diff_sum[k];
        }
        const ValueWithCI rm = mean_from(res);
        const ValueWithCI lm = mean_from(lhs);
        out.residual_mean[k] = rm.value;
        out.residual_ci[k] = rm.ci_half;
        out.lhs_mean[k] = lm.value;
        out.lhs_ci[k] = lm.ci_half;
    }
    return out;
}

MartingaleStats mean_martingale(const std::vector<TrajectoryDiagnostics>& ens) {
    require_common_times(ens);
    const size_t L = ens.front().times.size();
    const size_t n = ens.size();

    MartingaleStats st;
    st.M.times = ens.front().times;
    st.M.mean.resize(L);
    st.M.ci_half.resize(L);
    st.M0 = ens.front().mean.front();

    std::vector<double> xs(n);
    for (size_t k = 0; k < L; ++k) {
        for (size_t r = 0; r < n; ++r) xs[r] = ens[r].mean[k];
        const ValueWithCI m = mean_from(xs);
        st.M.mean[k] = m.value;
        st.M.ci_half[k] = m.ci_half;
        // the floor absorbs summation roundoff when the ensemble is
        // (near-)deterministic and the CI collapses
        const double slack =
            std::max(3.0 * m.ci_half, 1e-10 * (1.0 + std::abs(st.M0)));
        if (std::abs(m.value - st.M0) > slack) st.mean_conserved_3ci = false;
    }

    // 5x5 grid of (s, t) indices: s in the first half of the horizon,
    // t in the second, so every pair has s < t
    const auto frac_index = [L](int num, int den) {
        const long long idx = std::llround(static_cast<double>(num) / den * static_cast<double>(L - 1));
        return static_cast<size_t>(std::clamp<long long>(idx, 0, static_cast<long long>(L - 1)));
    };
    std::vector<double> ms(n), inc(n);
    for (int a = 1; a <= 5; ++a) {
        const size_t si = frac_index(a, 12);
        for (int b = 6; b <= 10; ++b) {
            const size_t ti = frac_index(b, 12);
            if (ti <= si) continue;
            for (size_t r = 0; r < n; ++r) {
                ms[r] = ens[r].mean[si];
                inc[r] = ens[r].mean[ti] - ens[r].mean[si];
            }
            st.max_abs_increment_corr =
                std::max(st.max_abs_increment_corr, std::abs(pearson(ms, inc)));
            ++st.pairs_tested;
        }
    }
    return st;
}

ScalingFit scaling_fit(const std::vector<double>& eps, const std::vector<ValueWithCI>& I,
                       double expected_slope) {
    if (eps.size() != I.size()) throw degenerate_fit_error("eps and I length mismatch");
    if (eps.size() < 3) throw degenerate_fit_error("need at least three eps values");
    for (size_t j = 0; j < eps.size(); ++j) {
        if (!(eps[j] > 0.0)) throw degenerate_fit_error("eps values must be positive");
        if (j > 0 && !(eps[j] < eps[j - 1]))
            throw degenerate_fit_error("eps grid must be strictly decreasing");
        if (!(I[j].value > 0.0)) throw degenerate_fit_error("nonpositive functional value");
    }

    ScalingFit fit;
    fit.eps = eps;
    fit.narrow_span = eps.front() / eps.back() < 4.0 - 1e-12;

    const size_t n = eps.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> x(n), y(n);
    for (size_t j = 0; j < n; ++j) {
        x[j] = std::log(eps[j]);
        y[j] = std::log(I[j].value);
        mx += x[j];
        my += y[j];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t j = 0; j < n; ++j) {
        sxy += (x[j] - mx) * (y[j] - my);
        sxx += (x[j] - mx) * (x[j] - mx);
        syy += (y[j] - my) * (y[j] - my);
    }
    if (sxx <= 0.0) throw degenerate_fit_error("degenerate eps grid");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy <= 0.0) {
        fit.r2 = 1.0;
    } else {
        double ssres = 0.0;
        for (size_t j = 0; j < n; ++j) {
            const double e = y[j] - (fit.intercept + fit.slope * x[j]);
            ssres += e * e;
        }
        fit.r2 = 1.0 - ssres / syy;
    }

    for (size_t j = 1; j < n; ++j) {
        // eps decreases along the grid, so I must not increase
        if (I[j].value > I[j - 1].value + I[j].ci_half + I[j - 1].ci_half) {
            fit.monotone = false;
            break;
        }
    }
    fit.pass = fit.monotone && fit.slope >= 0.7 * expected_slope;
    return fit;
}

} // namespace gradnoise
