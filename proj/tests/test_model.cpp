#include <doctest.h>

#include "gradnoise/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace gradnoise;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.n = 0;
    cfg.m = 5;
    cfg.N = 64;
    cfg.eps = 1.0;
    cfg.op = laplacian_operator(1.0, 2);
    return cfg;
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("noise constant equals (2n+1)/(2 pi)") {
    for (const int n : {0, 1, 2, 4})
        CHECK(noise_constant(n) == doctest::Approx((2.0 * n + 1.0) / kTwoPi).epsilon(1e-13));
}

TEST_CASE("multiplier operator acts diagonally") {
    const OperatorSpec op = laplacian_operator(1.0, 2);
    CHECK(op.at(0) == 0.0);
    CHECK(op.at(2) == -4.0);
    CHECK_THROWS_AS(op.at(3), std::out_of_range);

    SpectralField f(5);
    f.c[3] = 1.0; // sin(2x) coordinate
    const SpectralField Af = apply_A(f, op);
    CHECK(Af.c[3] == doctest::Approx(-4.0).epsilon(1e-15)); // eigenvalue -k^2

    SpectralField c(std::vector<double>{2.5});
    const SpectralField Ac = apply_A(c, op);
    CHECK(Ac.c[0] == 0.0); // mean mode untouched

    OperatorSpec flat;
    flat.a = {1.0, 1.0, 1.0};
    const SpectralField g(std::vector<double>{1.0, 1.0, 1.0, 1.0, 1.0});
    const SpectralField Ag = apply_A(g, flat);
    for (int i = 0; i < 5; ++i) CHECK(Ag.c[i] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("correction drift matches the pointwise formula") {
    // psi = eps sin x, n = 0: psi_x/eps = cos x and the correction is
    // (1/(2 pi)) g'(cos x)^2 (-eps sin x) / (2 eps^2)
    ModelConfig cfg = small_config();
    cfg.eps = 0.5;
    SpectralField psi(5);
    psi.c[1] = cfg.eps * std::sqrt(kPi);
    const GridField corr = ito_correction(psi, cfg);
    REQUIRE(corr.size() == cfg.N);
    const double cq = noise_constant(0);
    for (int j = 0; j < cfg.N; ++j) {
        const double x = grid_point(cfg.N, j);
        const double z = std::cos(x);
        const double gp = cfg.shape.gprime(z);
        const double want = cq * gp * gp * (-cfg.eps * std::sin(x)) / (2.0 * cfg.eps * cfg.eps);
        CHECK(corr.v[j] == doctest::Approx(want).epsilon(1e-11).scale(1.0));
    }
}

TEST_CASE("correction scales as 1/eps^2 when g' is constant where sampled") {
    // custom shape with g' == 1 on the sampled range: correction =
    // c_Q psi_xx / (2 eps^2), so quartering eps multiplies it by 16
    ModelConfig cfg = small_config();
    cfg.shape = make_custom({-100.0, 100.0}, {-100.0, 100.0});
    SpectralField psi(5);
    psi.c[1] = std::sqrt(kPi);
    cfg.eps = 1.0;
    const GridField c1 = ito_correction(psi, cfg);
    cfg.eps = 0.25;
    const GridField c2 = ito_correction(psi, cfg);
    for (int j = 0; j < cfg.N; ++j)
        CHECK(c2.v[j] == doctest::Approx(16.0 * c1.v[j]).epsilon(1e-11).scale(1e-12));
}

TEST_CASE("diffusion rows") {
    ModelConfig cfg = small_config();
    cfg.n = 1;

    SpectralField flat(std::vector<double>{3.0, 0.0, 0.0, 0.0, 0.0});
    // constant state: g(0) = 0 for the canonical shape, rows vanish
    for (int i = 1; i <= 3; ++i) {
        const SpectralField row = diffusion_row(flat, i, cfg);
        for (int q = 0; q < row.dim(); ++q) CHECK(std::abs(row.c[q]) < 1e-14);
    }

    // constant amplitude: row i is c e_i exactly
    cfg.shape = make_constant(0.8);
    SpectralField psi(5);
    psi.c[1] = 1.3;
    psi.c[4] = -0.2;
    for (int i = 1; i <= 3; ++i) {
        const SpectralField row = diffusion_row(psi, i, cfg);
        for (int q = 0; q < row.dim(); ++q) {
            if (i == q + 1)
                CHECK(row.c[q] == doctest::Approx(0.8).epsilon(1e-13));
            else
                CHECK(std::abs(row.c[q]) < 1e-13);
        }
    }

    // steep profile, tiny eps: g saturates at sup g = 1 except right at
    // the two grid points where cos x = 0, so the constant-mode weight
    // of row 1 is a bit under 1 and the L2 norm stays below sup g
    cfg.shape = make_canonical();
    cfg.eps = 1e-4;
    SpectralField steep(5);
    steep.c[1] = std::sqrt(kPi);
    const SpectralField row1 = diffusion_row(steep, 1, cfg);
    CHECK(row1.c[0] > 0.95);
    CHECK(row1.c[0] < 1.0 + 1e-9);
    CHECK(norm_l2(row1) <= cfg.shape.sup_g * std::sqrt(kTwoPi) + 1e-9);

    CHECK_THROWS_AS(diffusion_row(psi, 0, cfg), std::invalid_argument);
    CHECK_THROWS_AS(diffusion_row(psi, 4, cfg), std::invalid_argument);
}

TEST_CASE("weak drift agrees with the strong form against random test fields") {
    // the two forms differ only by quadrature aliasing of g'^2 vs G
    // compositions, so the gap must shrink spectrally with the grid
    const auto worst_gap = [](int N) {
        ModelConfig cfg;
        cfg.n = 2;
        cfg.m = 9;
        cfg.N = N;
        cfg.eps = 0.7;
        cfg.op = laplacian_operator(0.4, 4);

        std::mt19937 gen(17);
        std::uniform_real_distribution<double> u(-0.8, 0.8);
        double worst = 0.0;
        for (int trial = 0; trial < 32; ++trial) {
            SpectralField psi(9), phi(9);
            for (double& x : psi.c) x = u(gen);
            for (double& x : phi.c) x = u(gen);

            const double weak = weak_drift(psi, phi, cfg);

            const SpectralField lin = apply_A(psi, cfg.op);
            double strong = 0.0;
            for (int i = 0; i < 9; ++i) strong += lin.c[i] * phi.c[i];
            const GridField corr = ito_correction(psi, cfg);
            const GridField phig = synthesize(phi, cfg.N);
            GridField prod(cfg.N);
            for (int j = 0; j < cfg.N; ++j) prod.v[j] = corr.v[j] * phig.v[j];
            strong += quadrature(prod);

            worst = std::max(worst, std::abs(weak - strong) / (1.0 + std::abs(strong)));
        }
        return worst;
    };
    CHECK(worst_gap(256) < 5e-5);
    CHECK(worst_gap(1024) < 1e-12);
}

TEST_SUITE_END();
