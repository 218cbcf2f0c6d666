#pragma once

#include <cstdint>
#include <vector>

namespace gradnoise {

/// Identifies one Brownian trajectory. The whole noise stream of a
/// trajectory is a pure function of (master_seed, trajectory_index), so
/// ensembles can be dispatched in any order and remain reproducible.
struct TrajectorySeed {
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
};

/// Counter-style uniform generator: a stateless 64-bit hash of
/// (master_seed, trajectory_index, step, mode). No sequential state, so
/// any increment can be regenerated in isolation.
std::uint64_t counter_hash(const TrajectorySeed& seed, std::uint64_t step, std::uint64_t mode);

/// Standard normal quantile function (Wichura's PPND16 rational
/// approximation, accurate to ~1e-15 for p in (0,1)).
double inverse_normal_cdf(double p);

/// One standard Gaussian draw for (seed, step, mode).
double normal_draw(const TrajectorySeed& seed, std::uint64_t step, std::uint64_t mode);

/// Brownian increments for one time step: count independent N(0, dt)
/// values, keyed on (seed, step, mode). Identical inputs give identical
/// outputs for a given build.
std::vector<double> noise_increment(const TrajectorySeed& seed, std::uint64_t step, double dt, int count);

/// In-place variant used by the integrator's hot loop.
void noise_increment(const TrajectorySeed& seed, std::uint64_t step, double dt, int count, double* out);

} // namespace gradnoise
