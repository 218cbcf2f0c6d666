#include <doctest.h>

#include "gradnoise/spectral.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

using namespace gradnoise;

TEST_SUITE_BEGIN("spectral");

TEST_CASE("projecting sin x onto three modes") {
    const int N = 16;
    GridField f(N);
    for (int j = 0; j < N; ++j) f.v[j] = std::sin(grid_point(N, j));
    const SpectralField c = project(f, 3);
    CHECK(std::abs(c.c[0]) < 1e-14);
    CHECK(c.c[1] == doctest::Approx(1.7724538509055160273).epsilon(1e-14)); // sqrt(pi)
    CHECK(std::abs(c.c[2]) < 1e-14);
}

TEST_CASE("synthesize-project round trip is exact for band-limited fields") {
    std::mt19937 gen(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SpectralField f(9);
    for (double& x : f.c) x = u(gen);
    for (const int N : {16, 64}) {
        const SpectralField back = project(synthesize(f, N), 9);
        for (int i = 0; i < 9; ++i) CHECK(back.c[i] == doctest::Approx(f.c[i]).epsilon(1e-12));
    }
}

TEST_CASE("Parseval ties the two L2 norms together") {
    SpectralField f(std::vector<double>{0.3, -1.2, 0.5, 0.0, 2.0});
    double sq = 0.0;
    for (const double x : f.c) sq += x * x;
    CHECK(norm_l2(f) == doctest::Approx(std::sqrt(sq)).epsilon(1e-14));
    CHECK(norm_l2(synthesize(f, 64)) == doctest::Approx(norm_l2(f)).epsilon(1e-13));
}

TEST_CASE("derivative matches the analytic derivative pointwise") {
    // f = 2/sqrt(2pi) + sin x - 0.5 cos 2x, f' = cos x + sin 2x... checked on a grid
    SpectralField f(std::vector<double>{2.0, std::sqrt(kPi), 0.0, 0.0, -0.5 * std::sqrt(kPi)});
    const SpectralField d = derivative(f);
    const int N = 32;
    const GridField g = synthesize(d, N);
    for (int j = 0; j < N; ++j) {
        const double x = grid_point(N, j);
        CHECK(g.v[j] == doctest::Approx(std::cos(x) + std::sin(2.0 * x)).epsilon(1e-13));
    }
    CHECK(h1_seminorm(f) == doctest::Approx(norm_l2(d)).epsilon(1e-14));
}

TEST_CASE("derivative of a truncated pair widens by one mode") {
    // dimension 4 ends with a lone sin(2) mode; its derivative needs cos(2)
    SpectralField f(4);
    f.c[3] = 1.0; // sin(2x)/sqrt(pi)
    const SpectralField d = derivative(f);
    REQUIRE(d.dim() == 5);
    CHECK(d.c[4] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("second derivative is diagonal with eigenvalue -k^2") {
    SpectralField f(7);
    f.c[5] = 0.7; // sin(3x) component
    const SpectralField d2 = derivative(derivative(f));
    CHECK(d2.c[5] == doctest::Approx(-9.0 * 0.7).epsilon(1e-14));
}

TEST_CASE("quadrature and integral norms on known fields") {
    const int N = 128;
    GridField s(N), s4(N);
    for (int j = 0; j < N; ++j) {
        const double x = grid_point(N, j);
        s.v[j] = std::sin(x);
        s4.v[j] = std::sin(x);
    }
    CHECK(std::abs(quadrature(s)) < 1e-13);
    CHECK(norm_l1(s) == doctest::Approx(4.0).epsilon(1e-3)); // |sin| has kinks, trapezoid is O(N^-2) here
    CHECK(lp_power(s4, 4.0) == doctest::Approx(2.3561944901923449288).epsilon(1e-12)); // 3*pi/4
    CHECK(lp_power(s4, 2.0) == doctest::Approx(kPi).epsilon(1e-12));
}

TEST_CASE("preconditions are enforced") {
    CHECK_THROWS_AS(SpectralField(0), std::invalid_argument);
    CHECK_THROWS_AS(SpectralField(-3), std::invalid_argument);
    CHECK_THROWS_AS(GridField(12), std::invalid_argument); // not a power of two
    CHECK_THROWS_AS(basis_eval(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(wavenumber(0), std::invalid_argument);
    GridField g(8);
    CHECK_THROWS_AS(project(g, 8), std::invalid_argument);   // needs m <= N-1
    SpectralField f(9);
    CHECK_THROWS_AS(synthesize(f, 8), std::invalid_argument); // needs N >= 2*(m/2+1)
    CHECK_NOTHROW(synthesize(f, 16));
}

TEST_CASE("wavenumber bookkeeping") {
    CHECK(wavenumber(1) == 0);
    CHECK(wavenumber(2) == 1);
    CHECK(wavenumber(3) == 1);
    CHECK(wavenumber(8) == 4);
    CHECK(wavenumber(9) == 4);
    CHECK(max_wavenumber(33) == 16);
}

TEST_CASE("basis table agrees with the scalar basis functions") {
    const int N = 32, m = 9;
    const BasisTable tab(N, m);
    for (int i = 1; i <= m; ++i) {
        const auto col = tab.mode(i);
        for (int j = 0; j < N; ++j)
            CHECK(col[static_cast<size_t>(j)] ==
                  doctest::Approx(basis_eval(i, grid_point(N, j))).epsilon(1e-15));
    }
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> coef(m), vals(N), back(m);
    for (double& x : coef) x = u(gen);
    tab.synthesize(coef, vals);
    const GridField direct = synthesize(SpectralField(coef), N);
    for (int j = 0; j < N; ++j)
        CHECK(vals[static_cast<size_t>(j)] == doctest::Approx(direct.v[j]).epsilon(1e-13));
    tab.project(vals, back);
    for (int i = 0; i < m; ++i)
        CHECK(back[static_cast<size_t>(i)] == doctest::Approx(coef[static_cast<size_t>(i)]).epsilon(1e-12));
}

TEST_SUITE_END();
