#include <doctest.h>

#include "gradnoise/integrator.hpp"

#include <cmath>
#include <vector>

using namespace gradnoise;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.n = 1;
    cfg.m = 9;
    cfg.N = 32;
    cfg.eps = 0.3;
    cfg.op = laplacian_operator(0.1, 4);
    cfg.T = 0.05;
    cfg.psi0 = SpectralField(9);
    cfg.psi0.c[1] = std::sqrt(kPi); // sin x
    return cfg;
}

} // namespace

TEST_SUITE_BEGIN("integrator");

TEST_CASE("stability step for the default configuration, frozen value") {
    const ModelConfig cfg; // n=2, eps=0.1, m=33, nu=0.1, canonical shape
    // D = 0.1 + (5/(2 pi)) / (2 * 0.01), k_max = 16, safety 0.25
    CHECK(stability_dt(cfg) == doctest::Approx(4.8964324442774593e-5).epsilon(1e-13));
    CHECK(nominal_dt(cfg) == doctest::Approx(stability_dt(cfg)).epsilon(1e-15));
}

TEST_CASE("stability step scales as eps^2 for a pure gradient-noise balance") {
    ModelConfig cfg = tiny_config();
    cfg.op = laplacian_operator(0.0, 4); // removes the additive nu term
    cfg.eps = 0.2;
    const double coarse = stability_dt(cfg);
    cfg.eps = 0.1;
    CHECK(stability_dt(cfg) == doctest::Approx(0.25 * coarse).epsilon(1e-13));
}

TEST_CASE("power-regime stability step reflects the initial slope range") {
    ModelConfig cfg = tiny_config();
    cfg.shape = make_power(2.0);
    cfg.eps = 0.5;
    // psi0 = sin x: max |psi0_x| = 1 on the grid, so the slope cap is
    // 1/eps and sup g' over the cap is 2/eps
    const double gp = 2.0 / cfg.eps;
    const double cq = noise_constant(cfg.n);
    const double D = 0.1 + cq * gp * gp / (2.0 * cfg.eps * cfg.eps);
    const double kmax = 4.0;
    CHECK(stability_dt(cfg) ==
          doctest::Approx(cfg.stepper.safety * 2.0 / (D * kmax * kmax)).epsilon(1e-12));
}

TEST_CASE("integrating factor is exact on the linear part") {
    ModelConfig cfg = tiny_config();
    cfg.shape = make_constant(0.5);
    cfg.op = laplacian_operator(0.2, 4);
    SpectralField psi(9);
    psi.c[1] = 1.0;  // sin x
    psi.c[8] = -0.4; // cos 4x
    const std::vector<double> no_noise(static_cast<size_t>(cfg.noise_dim()), 0.0);

    const double h = 0.01;
    SpectralField cur = psi;
    for (int k = 0; k < 10; ++k) cur = step_with_noise(cur, cfg, h, no_noise);
    CHECK(cur.c[1] == doctest::Approx(std::exp(-0.2 * 1.0 * 0.1) * psi.c[1]).epsilon(1e-14));
    CHECK(cur.c[8] == doctest::Approx(std::exp(-0.2 * 16.0 * 0.1) * psi.c[8]).epsilon(1e-14));
    CHECK(cur.c[0] == 0.0);
}

TEST_CASE("both schemes leave a flat profile fixed under arbitrary noise") {
    // canonical amplitude vanishes at zero slope, so a constant state
    // receives neither noise nor drift
    ModelConfig cfg = tiny_config();
    cfg.psi0 = SpectralField(std::vector<double>{3.0});
    for (const Scheme sc : {Scheme::ito_euler_if, Scheme::stratonovich_heun}) {
        cfg.stepper.scheme = sc;
        const TrajectoryDiagnostics d = simulate(cfg, TrajectorySeed{5, 0});
        CHECK(d.terminal.c[0] == 3.0);
        for (int i = 1; i < d.terminal.dim(); ++i) CHECK(d.terminal.c[i] == 0.0);
        CHECK(d.l2_sq.back() == doctest::Approx(9.0).epsilon(1e-14));
    }
}

TEST_CASE("trajectories are a pure function of (config, seed)") {
    const ModelConfig cfg = tiny_config();
    const TrajectorySeed seed{123, 4};
    const TrajectoryDiagnostics a = simulate(cfg, seed);
    const TrajectoryDiagnostics b = simulate(cfg, seed);
    REQUIRE(a.times.size() == b.times.size());
    for (size_t k = 0; k < a.times.size(); ++k) {
        CHECK(a.times[k] == b.times[k]);
        CHECK(a.l2_sq[k] == b.l2_sq[k]);
        CHECK(a.grad_l1[k] == b.grad_l1[k]);
        CHECK(a.mean[k] == b.mean[k]);
    }
    for (int i = 0; i < a.terminal.dim(); ++i) CHECK(a.terminal.c[i] == b.terminal.c[i]);
    CHECK(a.grad_l1_integral == b.grad_l1_integral);

    const TrajectoryDiagnostics c = simulate(cfg, TrajectorySeed{123, 5});
    CHECK(c.terminal.c[1] != a.terminal.c[1]);
}

TEST_CASE("manual stepping matches the trajectory loop's first step") {
    ModelConfig cfg = tiny_config();
    cfg.stepper.dt = 0.005;
    const TrajectorySeed seed{77, 0};
    const auto dw = noise_increment(seed, 0, cfg.stepper.dt, cfg.noise_dim());
    const SpectralField manual = step_with_noise(cfg.psi0, cfg, cfg.stepper.dt, dw);
    const SpectralField auto_step = step(cfg.psi0, cfg, seed, 0);
    for (int i = 0; i < manual.dim(); ++i) CHECK(manual.c[i] == auto_step.c[i]);
}

TEST_CASE("recording geometry") {
    ModelConfig cfg = tiny_config();
    cfg.stepper.dt = 0.01;
    cfg.stepper.diag_stride = 1;
    cfg.T = 0.05;
    const TrajectoryDiagnostics d = simulate(cfg, TrajectorySeed{1, 0});
    REQUIRE(d.times.size() == 6);
    CHECK(d.times.front() == 0.0);
    CHECK(d.times[1] == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(d.times.back() == doctest::Approx(0.05).epsilon(1e-15));

    cfg.T = 0.0;
    const TrajectoryDiagnostics d0 = simulate(cfg, TrajectorySeed{1, 0});
    REQUIRE(d0.times.size() == 1);
    CHECK(d0.times[0] == 0.0);
    CHECK(d0.l2_sq[0] == doctest::Approx(kPi).epsilon(1e-13)); // |sin|_2^2
    for (int i = 0; i < d0.terminal.dim(); ++i)
        CHECK(d0.terminal.c[i] == (i == 1 ? std::sqrt(kPi) : 0.0));
}

TEST_CASE("step size collapse is reported as a blow-up with partial diagnostics") {
    ModelConfig cfg = tiny_config();
    cfg.shape = make_power(2.0);
    cfg.eps = 1e-6; // slope/eps ~ 1e6, the stable step is far below the floor
    cfg.stepper.dt = 1e-3;
    cfg.T = 0.01;

    const TrajectoryResult r = run_trajectory(cfg, TrajectorySeed{9, 2});
    CHECK_FALSE(r.completed);
    CHECK(r.blow_up_step == 0);
    REQUIRE(r.diag.times.size() >= 1);
    CHECK(r.diag.times.front() == 0.0);

    CHECK_THROWS_AS(simulate(cfg, TrajectorySeed{9, 2}), blow_up_error);
    try {
        simulate(cfg, TrajectorySeed{9, 2});
    } catch (const blow_up_error& e) {
        CHECK(e.step == 0);
        CHECK(e.partial.times.size() >= 1);
    }
}

TEST_CASE("invalid stepping inputs are rejected") {
    const ModelConfig cfg = tiny_config();
    const std::vector<double> dw(static_cast<size_t>(cfg.noise_dim()), 0.0);
    SpectralField wrong(5);
    CHECK_THROWS_AS(step_with_noise(wrong, cfg, 0.01, dw), std::invalid_argument);
    CHECK_THROWS_AS(step_with_noise(cfg.psi0, cfg, 0.0, dw), std::invalid_argument);
    const std::vector<double> short_dw(2, 0.0);
    CHECK_THROWS_AS(step_with_noise(cfg.psi0, cfg, 0.01, short_dw), std::invalid_argument);
}

TEST_SUITE_END();
