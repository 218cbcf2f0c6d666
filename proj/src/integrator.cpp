#include "gradnoise/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gradnoise {

namespace {

constexpr double kHalvingFloor = 1e-9;

/// Columns needed in the transform table: the state (widened by one so
/// psi_x keeps its top pair when m is even) and all noise modes.
int table_dim_for(const ModelConfig& cfg) {
    const int mt = (cfg.m > 1 && cfg.m % 2 == 0) ? cfg.m + 1 : cfg.m;
    return std::max(mt, cfg.noise_dim());
}

struct CflModel {
    double nu_eff = 0.0;
    double kmax_sq = 0.0;
    double half_cq_inv_eps_sq = 0.0; // c_Q / (2 eps^2)
    double safety = 0.25;

    static CflModel from(const ModelConfig& cfg) {
        CflModel c;
        c.safety = cfg.stepper.safety;
        const int kmax = cfg.m / 2;
        c.kmax_sq = static_cast<double>(kmax) * kmax;
        for (int k = 1; k <= kmax; ++k)
            c.nu_eff = std::max(c.nu_eff, std::abs(cfg.op.at(k)) / (static_cast<double>(k) * k));
        c.half_cq_inv_eps_sq = noise_constant(cfg.n) / (2.0 * cfg.eps * cfg.eps);
        return c;
    }

    double bound(double gprime_sup) const {
        const double denom = (nu_eff + half_cq_inv_eps_sq * gprime_sup * gprime_sup) * kmax_sq;
        if (denom <= 0.0) return std::numeric_limits<double>::infinity();
        return safety * 2.0 / denom;
    }
};

double initial_zcap(const ModelConfig& cfg) {
    const GridField dx = synthesize(derivative(cfg.psi0), cfg.N);
    double zc = 0.0;
    for (double v : dx.v) zc = std::max(zc, std::abs(v));
    return zc / cfg.eps;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Workspace for repeated steps of one trajectory: transform tables,
/// grid buffers and cached exponential factors. Not thread-safe; use
/// one Stepper per trajectory.
class Stepper {
public:
    explicit Stepper(const ModelConfig& cfg)
        : cfg_(cfg),
          m_(cfg.m),
          N_(cfg.N),
          nd_(cfg.noise_dim()),
          td_(table_dim_for(cfg)),
          table_(cfg.N, table_dim_for(cfg)),
          cfl_(CflModel::from(cfg)),
          inv_eps_(1.0 / cfg.eps),
          cq_(noise_constant(cfg.n)),
          lp_(cfg.shape.regime == ShapeRegime::power ? 2.0 * cfg.shape.gamma : 2.0) {
        if (N_ < 2 * (td_ / 2 + 1))
            throw std::invalid_argument("Stepper: grid too coarse for the top synthesized mode");
        kmul_.resize(m_);
        ak_.resize(m_);
        for (int i = 1; i <= m_; ++i) {
            kmul_[i - 1] = wavenumber(i);
            ak_[i - 1] = cfg.op.at(kmul_[i - 1]);
        }
        bounded_bound_ = (cfg.shape.regime == ShapeRegime::power)
                             ? 0.0
                             : cfl_.bound(cfg.shape.sup_gprime);
        coefw_.assign(td_, 0.0);
        projw_.assign(td_, 0.0);
        corrc_.assign(td_, 0.0);
        noisec_.assign(td_, 0.0);
        dx_grid_.assign(N_, 0.0);
        aux_grid_.assign(N_, 0.0);
        q_grid_.assign(N_, 0.0);
        q2_grid_.assign(N_, 0.0);
        w_grid_.assign(N_, 0.0);
        prod_grid_.assign(N_, 0.0);
        drift1_.assign(m_, 0.0);
        pred_.assign(m_, 0.0);
        expak_.assign(m_, 0.0);
        if (cfg.stepper.scheme == Scheme::stratonovich_heun) {
            full_table_.emplace(N_, N_ - 1);
            fullc_.assign(N_ - 1, 0.0);
            fulld_.assign(N_ - 1, 0.0);
            dnoise_grid_.assign(N_, 0.0);
        }
    }

    /// Synthesizes psi_x and g(psi_x/eps) on the grid and refreshes the
    /// slope cap. Must be called whenever the state changes.
    void assemble(const std::vector<double>& psi) {
        slope_coeffs(psi, coefw_);
        table_.synthesize(coefw_, dx_grid_);
        double zc = 0.0;
        for (int j = 0; j < N_; ++j) {
            const double z = dx_grid_[j] * inv_eps_;
            q_grid_[j] = cfg_.shape.g(z);
            zc = std::max(zc, std::abs(z));
        }
        zcap_ = zc;
    }

    double cfl_bound_now() const {
        if (cfg_.shape.regime == ShapeRegime::power)
            return cfl_.bound(std::abs(cfg_.shape.gprime(zcap_)));
        return bounded_bound_;
    }

    void substep(std::vector<double>& psi, double h, const double* dW) {
        if (cfg_.stepper.scheme == Scheme::ito_euler_if)
            substep_ito(psi, h, dW);
        else
            substep_heun(psi, h, dW);
    }

    double grad_l1_rate() const {
        double s = 0.0;
        for (int j = 0; j < N_; ++j) s += std::abs(dx_grid_[j]);
        return s * kTwoPi / N_;
    }

    double grad_lp_rate() const {
        double s = 0.0;
        if (lp_ == 2.0) {
            for (int j = 0; j < N_; ++j) s += dx_grid_[j] * dx_grid_[j];
        } else if (lp_ == 4.0) {
            for (int j = 0; j < N_; ++j) {
                const double v = dx_grid_[j] * dx_grid_[j];
                s += v * v;
            }
        } else {
            for (int j = 0; j < N_; ++j) s += std::pow(std::abs(dx_grid_[j]), lp_);
        }
        return s * kTwoPi / N_;
    }

    struct Snapshot {
        double l2_sq = 0.0;
        double h1_sq = 0.0;
        double grad_l1 = 0.0;
        double grad_lp = 0.0;
        double mean = 0.0;
        double dw_rate = 0.0; // (A psi, psi)
        double cd_rate = 0.0; // int (psi_x/eps) G(psi_x/eps)
        double ds_rate = 0.0; // sum_i |pi_m(g e_i)|^2
    };

    /// Full functional snapshot; requires assemble(psi) to be current.
    Snapshot snapshot(const std::vector<double>& psi) {
        Snapshot s;
        for (int i = 0; i < m_; ++i) {
            const double c = psi[i];
            s.l2_sq += c * c;
            const double kc = kmul_[i] * c;
            s.h1_sq += kc * kc;
            s.dw_rate += ak_[i] * c * c;
        }
        s.grad_l1 = grad_l1_rate();
        s.grad_lp = grad_lp_rate();
        s.mean = psi[0] / std::sqrt(kTwoPi);
        double cd = 0.0;
        for (int j = 0; j < N_; ++j) {
            const double z = dx_grid_[j] * inv_eps_;
            cd += z * cfg_.shape.G(z);
        }
        s.cd_rate = cd * kTwoPi / N_;
        double ds = 0.0;
        for (int i = 1; i <= nd_; ++i) {
            const auto col = table_.mode(i);
            for (int j = 0; j < N_; ++j) prod_grid_[j] = q_grid_[j] * col[j];
            table_.project(prod_grid_, projw_);
            for (int idx = 0; idx < m_; ++idx) ds += projw_[idx] * projw_[idx];
        }
        s.ds_rate = ds;
        return s;
    }

    int noise_dim() const { return nd_; }

private:
    void slope_coeffs(const std::vector<double>& psi, std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        for (int i = 2; i <= m_; ++i) {
            const int k = kmul_[i - 1];
            if (i % 2 == 0)
                out[i] = k * psi[i - 1];
            else
                out[i - 2] = -k * psi[i - 1];
        }
    }

    void make_noise_field(const double* dW) {
        std::fill(w_grid_.begin(), w_grid_.end(), 0.0);
        for (int i = 1; i <= nd_; ++i) {
            const double a = dW[i - 1];
            const auto col = table_.mode(i);
            for (int j = 0; j < N_; ++j) w_grid_[j] += a * col[j];
        }
    }

    void substep_ito(std::vector<double>& psi, double h, const double* dW) {
        std::fill(coefw_.begin(), coefw_.end(), 0.0);
        for (int i = 0; i < m_; ++i) {
            const double k = kmul_[i];
            coefw_[i] = -k * k * psi[i];
        }
        table_.synthesize(coefw_, aux_grid_); // psi_xx
        const double scale = 0.5 * cq_ * inv_eps_ * inv_eps_;
        for (int j = 0; j < N_; ++j) {
            const double d = cfg_.shape.gprime(dx_grid_[j] * inv_eps_);
            prod_grid_[j] = scale * d * d * aux_grid_[j];
        }
        table_.project(prod_grid_, corrc_);

        make_noise_field(dW);
        for (int j = 0; j < N_; ++j) prod_grid_[j] = q_grid_[j] * w_grid_[j];
        table_.project(prod_grid_, noisec_);

        if (h != exp_h_) {
            for (int i = 0; i < m_; ++i) expak_[i] = std::exp(ak_[i] * h);
            exp_h_ = h;
        }
        for (int i = 0; i < m_; ++i)
            psi[i] = expak_[i] * psi[i] + h * corrc_[i] + noisec_[i];
    }

    /// Midpoint (Heun) step. The predictor's noise term stays at grid
    /// resolution: its slope is the full trigonometric-interpolant
    /// derivative, not the band-limited one, so the midpoint rule sees
    /// the diffusion coefficient before projection. The state itself is
    /// projected once, when the corrector writes it back.
    void substep_heun(std::vector<double>& psi, double h, const double* dW) {
        make_noise_field(dW);
        for (int j = 0; j < N_; ++j) prod_grid_[j] = q_grid_[j] * w_grid_[j];
        table_.project(prod_grid_, projw_);
        full_table_->project(prod_grid_, fullc_);
        const int F = N_ - 1;
        std::fill(fulld_.begin(), fulld_.end(), 0.0);
        for (int i = 2; i <= F; ++i) {
            const int k = wavenumber(i);
            if (i % 2 == 0)
                fulld_[i] = k * fullc_[i - 1];
            else
                fulld_[i - 2] = -k * fullc_[i - 1];
        }
        full_table_->synthesize(fulld_, dnoise_grid_);
        for (int i = 0; i < m_; ++i) {
            drift1_[i] = ak_[i] * psi[i];
            pred_[i] = psi[i] + h * drift1_[i];
        }
        slope_coeffs(pred_, coefw_);
        table_.synthesize(coefw_, aux_grid_); // predictor slope, drift part
        for (int j = 0; j < N_; ++j)
            q2_grid_[j] = cfg_.shape.g((aux_grid_[j] + dnoise_grid_[j]) * inv_eps_);
        for (int j = 0; j < N_; ++j)
            prod_grid_[j] = 0.5 * (q_grid_[j] + q2_grid_[j]) * w_grid_[j];
        table_.project(prod_grid_, noisec_);
        for (int i = 0; i < m_; ++i)
            psi[i] += 0.5 * h * (drift1_[i] + ak_[i] * (pred_[i] + projw_[i])) + noisec_[i];
    }

    const ModelConfig& cfg_;
    int m_;
    int N_;
    int nd_;
    int td_;
    BasisTable table_;
    CflModel cfl_;
    double inv_eps_;
    double cq_;
    double lp_;
    double bounded_bound_ = 0.0;
    double zcap_ = 0.0;
    double exp_h_ = -1.0;

    std::vector<int> kmul_;
    std::vector<double> ak_;
    std::vector<double> coefw_, projw_, corrc_, noisec_;
    std::vector<double> dx_grid_, aux_grid_, q_grid_, q2_grid_, w_grid_, prod_grid_;
    std::vector<double> drift1_, pred_, expak_;
    std::optional<BasisTable> full_table_;
    std::vector<double> fullc_, fulld_, dnoise_grid_;
};

double resolve_dt(const ModelConfig& cfg) {
    if (cfg.stepper.dt > 0.0) return cfg.stepper.dt;
    if (cfg.shape.regime == ShapeRegime::power) {
        // The initial-slope bound can be orders of magnitude below what
        // the (rapidly collapsing) trajectory needs later, so the
        // nominal step only respects the linear CFL plus a resolution
        // cap; the per-step halving in run_trajectory handles the
        // transient where slopes are still large.
        const double lin = CflModel::from(cfg).bound(0.0);
        return std::min({lin, cfg.T / 1000.0, cfg.T});
    }
    return std::min(stability_dt(cfg), cfg.T);
}

} // namespace

double nominal_dt(const ModelConfig& cfg) { return resolve_dt(cfg); }

double stability_dt(const ModelConfig& cfg) {
    const CflModel cfl = CflModel::from(cfg);
    const double gp_sup = (cfg.shape.regime == ShapeRegime::power)
                              ? std::abs(cfg.shape.gprime(initial_zcap(cfg)))
                              : cfg.shape.sup_gprime;
    return cfl.bound(gp_sup);
}

struct StepSession::Impl {
    ModelConfig cfg;
    Stepper st;

    explicit Impl(const ModelConfig& c) : cfg(c), st(cfg) {}
};

StepSession::StepSession(const ModelConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
StepSession::~StepSession() = default;
StepSession::StepSession(StepSession&&) noexcept = default;
StepSession& StepSession::operator=(StepSession&&) noexcept = default;

void StepSession::step(SpectralField& psi, double h, std::span<const double> dW) {
    if (psi.dim() != impl_->cfg.m)
        throw std::invalid_argument("step_with_noise: state dimension differs from cfg.m");
    if (static_cast<int>(dW.size()) != impl_->cfg.noise_dim())
        throw std::invalid_argument("step_with_noise: expected one increment per noise mode");
    if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("step_with_noise: step size must be positive and finite");
    impl_->st.assemble(psi.c);
    impl_->st.substep(psi.c, h, dW.data());
    if (!all_finite(psi.c))
        throw blow_up_error("state left R within a single step", 0, TrajectoryDiagnostics{});
}

SpectralField step_with_noise(const SpectralField& psi, const ModelConfig& cfg, double h,
                              std::span<const double> dW) {
    StepSession session(cfg);
    SpectralField p = psi;
    session.step(p, h, dW);
    return p;
}

SpectralField step(const SpectralField& psi, const ModelConfig& cfg, const TrajectorySeed& seed,
                   std::uint64_t step_index) {
    double h = cfg.stepper.dt > 0.0 ? cfg.stepper.dt : stability_dt(cfg);
    if (!std::isfinite(h)) h = cfg.T; // unconstrained scheme: horizon as the natural step
    if (!(h > 0.0)) throw std::invalid_argument("step: cannot resolve a positive step size");
    std::vector<double> dw(static_cast<size_t>(cfg.noise_dim()));
    noise_increment(seed, step_index, h, cfg.noise_dim(), dw.data());
    return step_with_noise(psi, cfg, h, dw);
}

TrajectoryResult run_trajectory(const ModelConfig& cfg, const TrajectorySeed& seed) {
    TrajectoryResult res;
    TrajectoryDiagnostics& d = res.diag;
    Stepper st(cfg);

    std::vector<double> psi(static_cast<size_t>(cfg.m), 0.0);
    const int shared = std::min(cfg.m, cfg.psi0.dim());
    for (int i = 0; i < shared; ++i) psi[i] = cfg.psi0.c[i]; // pi_m of the initial state

    const double T = cfg.T;
    const double dt_nom = resolve_dt(cfg);
    long long K = 0;
    if (T > 0.0) K = std::max<long long>(1, static_cast<long long>(std::ceil(T / dt_nom - 1e-9)));
    // stride <= 0 requests automatic recording density (~128 records)
    const int stride = cfg.stepper.diag_stride >= 1
                           ? cfg.stepper.diag_stride
                           : static_cast<int>(std::max<long long>(1, (K + 127) / 128));
    const int nd = cfg.noise_dim();
    std::vector<double> dw(static_cast<size_t>(nd));
    std::uint64_t draw_key = 0;

    double led_dw = 0.0, led_cd = 0.0, led_ds = 0.0;
    double prev_dw = 0.0, prev_cd = 0.0, prev_ds = 0.0;

    st.assemble(psi);
    const auto record = [&](double t) {
        const Stepper::Snapshot s = st.snapshot(psi);
        if (!d.times.empty()) {
            const double dtr = t - d.times.back();
            led_dw += 0.5 * (prev_dw + s.dw_rate) * dtr;
            led_cd += 0.5 * (prev_cd + s.cd_rate) * dtr;
            led_ds += 0.5 * (prev_ds + s.ds_rate) * dtr;
        }
        prev_dw = s.dw_rate;
        prev_cd = s.cd_rate;
        prev_ds = s.ds_rate;
        d.times.push_back(t);
        d.l2_sq.push_back(s.l2_sq);
        d.h1_sq.push_back(s.h1_sq);
        d.grad_l1.push_back(s.grad_l1);
        d.grad_l2g.push_back(s.grad_lp);
        d.mean.push_back(s.mean);
        d.drift_work.push_back(led_dw);
        d.corr_diss.push_back(led_cd);
        d.diff_sum.push_back(led_ds);
    };
    record(0.0);

    double pend_h = 0.0, pend_r1 = 0.0, pend_r2 = 0.0;
    const auto close_pending = [&](double r1_now, double r2_now) {
        if (pend_h > 0.0) {
            d.grad_l1_integral += 0.5 * (pend_r1 + r1_now) * pend_h;
            d.grad_l2g_integral += 0.5 * (pend_r2 + r2_now) * pend_h;
            pend_h = 0.0;
        }
    };

    bool alive = true;
    for (long long k = 0; k < K && alive; ++k) {
        const double t1 = (k + 1 < K) ? (k + 1) * dt_nom : T;
        // Interior steps take exactly dt_nom; deriving the span as
        // t1 - k*dt_nom wobbles by 1 ulp and can trip the halving below.
        double remaining = (k + 1 < K) ? dt_nom : T - k * dt_nom;
        while (remaining > 0.0) {
            const double r1 = st.grad_l1_rate();
            const double r2 = st.grad_lp_rate();
            close_pending(r1, r2);
            const double bound = st.cfl_bound_now() * (1.0 + 1e-9);
            double h = remaining;
            while (h > bound) {
                h *= 0.5;
                if (h < kHalvingFloor) {
                    alive = false;
                    res.blow_up_step = static_cast<long long>(draw_key);
                    break;
                }
            }
            if (!alive) break;
            noise_increment(seed, draw_key, h, nd, dw.data());
            ++draw_key;
            st.substep(psi, h, dw.data());
            if (!all_finite(psi)) {
                alive = false;
                res.blow_up_step = static_cast<long long>(draw_key) - 1;
                break;
            }
            pend_r1 = r1;
            pend_r2 = r2;
            pend_h = h;
            remaining -= h;
            st.assemble(psi);
        }
        if (alive && ((k + 1) % stride == 0 || k + 1 == K)) record(t1);
    }

    if (alive) {
        close_pending(st.grad_l1_rate(), st.grad_lp_rate());
        res.completed = true;
    }
    d.terminal = SpectralField(std::move(psi));
    return res;
}

TrajectoryDiagnostics simulate(const ModelConfig& cfg, const TrajectorySeed& seed) {
    TrajectoryResult r = run_trajectory(cfg, seed);
    if (!r.completed)
        throw blow_up_error("trajectory blew up at substep " + std::to_string(r.blow_up_step),
                            r.blow_up_step, std::move(r.diag));
    return std::move(r.diag);
}

} // namespace gradnoise
