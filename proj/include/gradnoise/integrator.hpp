#pragma once

#include "gradnoise/diagnostics.hpp"
#include "gradnoise/model.hpp"
#include "gradnoise/rng.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>

namespace gradnoise {

/// Thrown when the state leaves R (or the power-case step halving hits
/// its floor). Carries the substep index and whatever diagnostics were
/// recorded before the failure.
class blow_up_error : public std::runtime_error {
public:
    blow_up_error(const std::string& what, long long step_index, TrajectoryDiagnostics partial_diag)
        : std::runtime_error(what), step(step_index), partial(std::move(partial_diag)) {}

    long long step;
    TrajectoryDiagnostics partial;
};

/// Largest stable explicit step: safety * 2 / (D_max * k_max^2) with
/// D_max = nu_eff + c_Q sup|g'|^2 / (2 eps^2), nu_eff = max_k |a_k|/k^2
/// and k_max = floor(m/2). In the power regime sup|g'| is taken over
/// the slope range |z| <= max|psi0_x|/eps of the initial state; during
/// integration the bound is re-evaluated against the current state and
/// the step halved as needed (see simulate).
double stability_dt(const ModelConfig& cfg);

/// The nominal step simulate() will take for this configuration: the
/// configured dt if positive, otherwise the automatic policy (bounded
/// regime: stability_dt capped by T; power regime: linear CFL capped by
/// T/1000, relying on per-step halving through slope transients).
double nominal_dt(const ModelConfig& cfg);

/// One step of the configured scheme at step size h with caller
/// supplied Brownian increments (cfg.noise_dim() entries). No stability
/// re-check: the caller owns h.
SpectralField step_with_noise(const SpectralField& psi, const ModelConfig& cfg, double h,
                              std::span<const double> dW);

/// Reusable stepping workspace for driving trajectories with caller
/// supplied noise; amortizes the transform-table setup that
/// step_with_noise would otherwise repeat every call. Not thread-safe.
class StepSession {
public:
    explicit StepSession(const ModelConfig& cfg);
    ~StepSession();
    StepSession(StepSession&&) noexcept;
    StepSession& operator=(StepSession&&) noexcept;

    /// Semantics of step_with_noise, applied in place.
    void step(SpectralField& psi, double h, std::span<const double> dW);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One step drawing its own increments from (seed, step_index). The
/// step size is cfg.stepper.dt, or stability_dt(cfg) when automatic.
SpectralField step(const SpectralField& psi, const ModelConfig& cfg, const TrajectorySeed& seed,
                   std::uint64_t step_index);

/// Integrates psi0 to time T, recording diagnostics every diag_stride
/// nominal steps plus the initial and terminal records. Deterministic
/// given (cfg, seed). Returns completed=false with partial diagnostics
/// if the trajectory blows up.
TrajectoryResult run_trajectory(const ModelConfig& cfg, const TrajectorySeed& seed);

/// As run_trajectory, but a blow-up raises blow_up_error.
TrajectoryDiagnostics simulate(const ModelConfig& cfg, const TrajectorySeed& seed);

} // namespace gradnoise
