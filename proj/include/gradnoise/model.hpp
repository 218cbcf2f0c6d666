#pragma once

#include "gradnoise/shapes.hpp"
#include "gradnoise/spectral.hpp"
#include "gradnoise/stepper_config.hpp"

#include <vector>

namespace gradnoise {

/// Fourier multiplier operator: the wavenumber-k pair of coordinates is
/// scaled by a[k]. alpha and beta record the dissipativity constants
/// the multipliers are supposed to satisfy (a_k <= -alpha k^2 + beta
/// for k >= 1), checked by validate_config.
struct OperatorSpec {
    std::vector<double> a; // index = wavenumber; a[0] acts on the constant mode
    double alpha = 0.0;
    double beta = 0.0;

    double at(int k) const;
    int max_wavenumber() const { return static_cast<int>(a.size()) - 1; }
};

/// a_k = -nu k^2 for k = 0..k_max (so a_0 = 0 and the spatial mean is
/// untouched by the drift).
OperatorSpec laplacian_operator(double nu, int k_max);

struct ModelConfig {
    int n = 2;      // noise truncation: modes e_1..e_{2n+1}
    double eps = 0.1;
    int m = 33;     // Galerkin dimension
    int N = 128;    // collocation grid for nonlinear terms
    OperatorSpec op = laplacian_operator(0.1, 16);
    NoiseShape shape = make_canonical();
    SpectralField psi0{1};
    double T = 0.5;
    StepperConfig stepper{};

    int noise_dim() const { return 2 * n + 1; }
};

/// Sum_{i=1}^{2n+1} e_i(x)^2 evaluated from the basis. Independent of x
/// and equal to (2n+1)/(2 pi); computed rather than hard-coded so the
/// Stratonovich-to-Ito constant stays consistent with the basis
/// normalization in use.
double noise_constant(int n);

/// Applies the Fourier multipliers; exact, no quadrature.
SpectralField apply_A(const SpectralField& f, const OperatorSpec& op);

/// Correction drift c_Q g'(psi_x/eps)^2 / (2 eps^2) * psi_xx on the
/// cfg.N grid, with c_Q = noise_constant(cfg.n). This is the drift that
/// turns the midpoint-rule model into an equivalent Ito one; the
/// scheme-consistency acceptance check validates c_Q end to end.
GridField ito_correction(const SpectralField& psi, const ModelConfig& cfg);

/// pi_m( g(psi_x/eps) e_i ): the diffusion row against noise mode i.
/// Evaluated on the oversampled grid, then projected.
SpectralField diffusion_row(const SpectralField& psi, int i, const ModelConfig& cfg);

/// Weak-form drift (psi, A* phi) - (c_Q/2) (phi_x/eps, G(psi_x/eps)).
/// A* = A for the diagonal operators used here. Equals
/// (apply_A(psi) + ito_correction(psi), phi) up to aliasing error.
double weak_drift(const SpectralField& psi, const SpectralField& phi, const ModelConfig& cfg);

} // namespace gradnoise
