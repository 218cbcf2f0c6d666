#pragma once

namespace gradnoise {

/// ito_euler_if: integrating factor for the linear part, explicit
/// Euler-Maruyama for correction drift and noise (default).
/// stratonovich_heun: predictor-corrector midpoint scheme on the
/// Stratonovich form, kept as an independent consistency oracle.
enum class Scheme { ito_euler_if, stratonovich_heun };

struct StepperConfig {
    Scheme scheme = Scheme::ito_euler_if;
    double dt = 0.0;      // <= 0 selects the automatic stability step
    double safety = 0.25; // CFL safety factor in (0, 1]
    int diag_stride = 0;  // record every this many steps; <= 0 = auto (~128 records)
};

} // namespace gradnoise
