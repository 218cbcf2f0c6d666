#pragma once

#include "gradnoise/diagnostics.hpp"
#include "gradnoise/model.hpp"

#include <stdexcept>
#include <vector>

namespace gradnoise {

class alignment_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class degenerate_fit_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scalar estimate with a 95% normal-approximation half width.
struct ValueWithCI {
    double value = 0.0;
    double ci_half = 0.0;
};

struct MeanSeries {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> ci_half;
};

/// Ensemble mean +- 1.96 s/sqrt(n) of per-trajectory scalars.
ValueWithCI ensemble_mean(const std::vector<double>& values);

/// Unbiased sample variance with its own normal-approximation interval
/// (half width 1.96 s^2 sqrt(2/(n-1))).
ValueWithCI sample_variance(const std::vector<double>& values);

/// int_0^T E|psi_x|_L1 dt by per-trajectory trapezoid on the recorded
/// series, then ensemble mean (integrating each trajectory first keeps
/// the CI honest about temporal correlation). Throws alignment_error on
/// mismatched time axes.
ValueWithCI gradient_l1_integral(const std::vector<TrajectoryDiagnostics>& ens);

/// Same integrals taken from the integrator's substep-resolution
/// accumulators instead of the recorded series; preferred whenever a
/// fast transient is coarser than the recording stride.
ValueWithCI gradient_l1_integral_full(const std::vector<TrajectoryDiagnostics>& ens);
ValueWithCI gradient_l2g_integral_full(const std::vector<TrajectoryDiagnostics>& ens);

/// The L2 energy balance: at each recorded t,
///   lhs(t) = |psi|^2(t) - 2 int (A psi, psi) + c_Q int int (psi_x/eps) G(psi_x/eps)
///   rhs(t) = |psi(0)|^2 + int sum_i |pi_m(g e_i)|^2
/// residual = lhs - rhs must vanish in expectation (discrete-time Ito
/// isometry); lhs itself is sandwiched by the a-priori energy bounds.
struct EnergyBalance {
    std::vector<double> times;
    std::vector<double> residual_mean;
    std::vector<double> residual_ci;
    std::vector<double> lhs_mean;
    std::vector<double> lhs_ci;
    double initial_l2_sq = 0.0;
};

EnergyBalance energy_balance(const std::vector<TrajectoryDiagnostics>& ens, const ModelConfig& cfg);

/// Statistics of the spatial-mean process M(t) = (1/2pi) int psi:
/// its ensemble mean with CI, whether the mean stays within 3 CI of
/// M(0) everywhere, and the largest Pearson correlation between
/// increments M(t)-M(s) and M(s) over a fixed 5x5 grid of s<t pairs
/// (all near zero for a martingale).
struct MartingaleStats {
    MeanSeries M;
    double M0 = 0.0;
    bool mean_conserved_3ci = true;
    double max_abs_increment_corr = 0.0;
    int pairs_tested = 0;
};

MartingaleStats mean_martingale(const std::vector<TrajectoryDiagnostics>& ens);

/// Least-squares fit of log I against log eps. pass requires slope >=
/// 0.7 * expected_slope and I nonincreasing along the (decreasing) eps
/// grid within the summed CI slack. narrow_span flags grids spanning
/// less than a 4x ratio (the fit is reported but less trustworthy).
struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool monotone = true;
    bool narrow_span = false;
    bool pass = false;
    std::vector<double> eps;
};

ScalingFit scaling_fit(const std::vector<double>& eps, const std::vector<ValueWithCI>& I,
                       double expected_slope);

} // namespace gradnoise
