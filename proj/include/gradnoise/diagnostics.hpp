#pragma once

#include "gradnoise/spectral.hpp"

#include <vector>

namespace gradnoise {

/// Functional time series along one trajectory, sampled every
/// diag_stride steps plus the initial and terminal times. All series
/// share the times axis.
///
/// The ledger series are cumulative time integrals (trapezoid on the
/// recorded grid, matching the recording stride) of the terms entering
/// the L2 energy balance: residual(t) = l2_sq(t) - 2 drift_work(t)
/// + c_Q corr_diss(t) - l2_sq(0) - diff_sum(t) has zero expectation.
///
/// The two *_integral scalars are accumulated at full substep
/// resolution, so they stay accurate when the recording stride is
/// coarse or when step halving resolves a fast transient.
struct TrajectoryDiagnostics {
    std::vector<double> times;
    std::vector<double> l2_sq;    // |psi|^2 in L2
    std::vector<double> h1_sq;    // |psi_x|^2 in L2
    std::vector<double> grad_l1;  // |psi_x| in L1
    std::vector<double> grad_l2g; // int |psi_x|^p, p = 2*gamma (power) or 2
    std::vector<double> mean;     // M(t) = (1/2pi) int psi

    std::vector<double> drift_work; // int_0^t (A psi, psi) ds
    std::vector<double> corr_diss;  // int_0^t int (psi_x/eps) G(psi_x/eps) dx ds
    std::vector<double> diff_sum;   // int_0^t sum_i |pi_m(g(psi_x/eps) e_i)|^2 ds

    double grad_l1_integral = 0.0;  // int_0^T |psi_x|_L1 ds, substep exact
    double grad_l2g_integral = 0.0; // int_0^T int |psi_x|^p ds, substep exact

    SpectralField terminal{1};
};

struct TrajectoryResult {
    TrajectoryDiagnostics diag;
    bool completed = false;
    long long blow_up_step = -1; // substep index at which the state left R
};

} // namespace gradnoise
