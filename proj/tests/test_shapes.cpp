#include <doctest.h>

#include "gradnoise/shapes.hpp"
#include "gradnoise/quad.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

using namespace gradnoise;

namespace {

// central difference oracle for G' = g'^2
double fd_deriv(const std::function<double(double)>& F, double x, double h) {
    return (F(x + h) - F(x - h)) / (2.0 * h);
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_SUITE_BEGIN("shapes");

TEST_CASE("canonical shape: values, kappa, dissipation integral") {
    const NoiseShape s = make_canonical();
    CHECK(s.regime == ShapeRegime::bounded);
    CHECK(s.g(0.0) == 0.0);
    CHECK(s.g(1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(s.g(-1.0) == s.g(1.0));
    CHECK(s.g(1e12) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.gprime(0.0) == 0.0);
    CHECK(s.gprime(2.0) == doctest::Approx(1.0 / std::pow(5.0, 1.5)).epsilon(1e-14));
    CHECK(s.gprime(-2.0) == doctest::Approx(-s.gprime(2.0)).epsilon(1e-15));
    CHECK(s.sup_g == 1.0);
    CHECK(s.sup_gprime == 1.0);

    CHECK(s.kappa == doctest::Approx(0.58904862254808623221).epsilon(1e-15)); // 3*pi/16
    CHECK(kappa_of(s) == doctest::Approx(s.kappa).epsilon(1e-11));

    // frozen values of G(x) = int_0^x (1+y^2)^-3 dy
    CHECK(s.G(0.5) == doctest::Approx(0.40386785337530229358).epsilon(1e-14));
    CHECK(s.G(1.0) == doctest::Approx(0.54452431127404311611).epsilon(1e-14));
    CHECK(s.G(2.0) == doctest::Approx(0.58518076917278393863).epsilon(1e-14));
    CHECK(s.G(-1.0) == doctest::Approx(-s.G(1.0)).epsilon(1e-15));
    CHECK(s.G(std::numeric_limits<double>::infinity()) ==
          doctest::Approx(0.58904862254808623221).epsilon(1e-15));

    // closed form against direct quadrature of g'^2 (starting just off
    // the removable gprime(0) := 0 point)
    for (const double x : {0.25, 0.8, 1.7, 3.0, 10.0}) {
        const double q = integrate([&](double y) { return s.gprime(y) * s.gprime(y); }, 1e-14, x);
        CHECK(s.G(x) == doctest::Approx(q).epsilon(1e-11));
    }
}

TEST_CASE("power shape: algebra and unboundedness") {
    CHECK_THROWS_AS(make_power(1.0), std::domain_error);
    CHECK_THROWS_AS(make_power(0.5), std::domain_error);
    for (const double gamma : {1.5, 2.0, 3.0}) {
        const NoiseShape s = make_power(gamma);
        CHECK(s.regime == ShapeRegime::power);
        CHECK(s.gamma == gamma);
        CHECK(std::isinf(s.sup_g));
        CHECK(s.g(2.0) == doctest::Approx(std::pow(2.0, gamma)).epsilon(1e-15));
        CHECK(s.g(-2.0) == s.g(2.0));
        CHECK(s.gprime(1.5) == doctest::Approx(gamma * std::pow(1.5, gamma - 1.0)).epsilon(1e-14));
        // x G(x) - g(x)^2 = ((gamma-1)^2/(2 gamma - 1)) |x|^(2 gamma)
        const double coef = (gamma - 1.0) * (gamma - 1.0) / (2.0 * gamma - 1.0);
        for (const double x : {0.5, 1.0, 2.0}) {
            const double lhs = x * s.G(x) - s.g(x) * s.g(x);
            CHECK(lhs == doctest::Approx(coef * std::pow(x, 2.0 * gamma)).epsilon(1e-12));
        }
        const double q = integrate([&](double y) { return s.gprime(y) * s.gprime(y); }, 0.0, 1.5);
        CHECK(s.G(1.5) == doctest::Approx(q).epsilon(1e-11));
        CHECK(s.G(-1.5) == doctest::Approx(-s.G(1.5)).epsilon(1e-15));
        CHECK_THROWS_AS(certify_tail(s, {1.0, 2.0}), std::invalid_argument);
        CHECK_THROWS_AS(kappa_of(s), std::invalid_argument);
    }
    CHECK(make_power(2.0).g(1e-3) == doctest::Approx(1e-6).epsilon(1e-14));
}

TEST_CASE("constant shape is inert") {
    const NoiseShape s = make_constant(0.7);
    CHECK(s.g(-3.0) == 0.7);
    CHECK(s.g(12.0) == 0.7);
    CHECK(s.gprime(5.0) == 0.0);
    CHECK(s.G(9.0) == 0.0);
    CHECK(s.kappa == 0.0);
    CHECK(s.sup_g == 0.7);
    CHECK(s.sup_gprime == 0.0);
    const TailCertificate tc = certify_tail(s, {1.0, 4.0});
    CHECK(tc.pass);
    CHECK(tc.C_hat == doctest::Approx(0.0));
}

TEST_CASE("tail certificate of the canonical shape, frozen oracle values") {
    const NoiseShape s = make_canonical();
    // z * int_{|y|>z} g'^2 at z = 1, 2, 4, 8; the sup over the grid is C_hat
    const TailCertificate tc = certify_tail(s, {1.0, 2.0, 4.0, 8.0});
    CHECK(tc.pass);
    CHECK(tc.C_hat == doctest::Approx(0.089048622548086232).epsilon(1e-9));
    CHECK_THROWS_AS(certify_tail(s, {-1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(certify_tail(s, {}), std::invalid_argument);
}

TEST_CASE("custom shape reproduces its table and interpolates monotonically") {
    // tabulate the canonical shape coarsely; the interpolant must hit the
    // knots exactly and stay within the enclosing data range between them
    const NoiseShape ref = make_canonical();
    std::vector<double> z, gz;
    for (int i = -24; i <= 24; ++i) {
        z.push_back(0.25 * i);
        gz.push_back(ref.g(0.25 * i));
    }
    const NoiseShape s = make_custom(z, gz);
    CHECK(s.kind == ShapeKind::custom);
    CHECK(s.regime == ShapeRegime::bounded);
    for (size_t i = 0; i < z.size(); ++i) CHECK(s.g(z[i]) == doctest::Approx(gz[i]).epsilon(1e-14));
    CHECK(s.g(100.0) == doctest::Approx(gz.back()).epsilon(1e-15)); // clamped
    CHECK(s.gprime(100.0) == 0.0);
    CHECK(s.g(1.1) == doctest::Approx(ref.g(1.1)).epsilon(1e-3));
    CHECK(s.sup_g <= 1.0 + 1e-12);

    // G' == g'^2 wherever g' is smooth (away from knots)
    for (int i = 0; i < 64; ++i) {
        const double x = -10.0 + 20.0 * (i + 0.37) / 64.0;
        const double want = s.gprime(x) * s.gprime(x);
        const double got = fd_deriv(s.G, x, 1e-6);
        CHECK(got == doctest::Approx(want).epsilon(1e-6).scale(1.0));
    }
    CHECK(kappa_of(s) == doctest::Approx(s.kappa).epsilon(1e-8));
    CHECK(s.kappa == doctest::Approx(ref.kappa).epsilon(0.05)); // coarse table, loose match
    CHECK(certify_tail(s, {1.0, 2.0, 5.0}).pass);
}

TEST_CASE("two-point custom table degrades to a linear segment") {
    const NoiseShape s = make_custom({-1.0, 1.0}, {0.0, 2.0});
    CHECK(s.g(0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.gprime(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.G(0.5) == doctest::Approx(0.5).epsilon(1e-14)); // int_0^0.5 1 dy
    CHECK(s.G(3.0) == doctest::Approx(1.0).epsilon(1e-14)); // slope 0 past the table
}

TEST_CASE("custom table preconditions") {
    CHECK_THROWS(make_custom({0.0}, {1.0}));
    CHECK_THROWS(make_custom({0.0, 0.0}, {1.0, 2.0}));  // not strictly ascending
    CHECK_THROWS(make_custom({0.0, 1.0}, {1.0}));       // size mismatch
    CHECK_THROWS(make_custom({0.0, 1.0}, {1.0, std::nan("")}));
}

TEST_CASE("custom shape file loading") {
    const auto good = write_temp("gradnoise_shape_ok.txt",
                                 "# z g\n-2 0.9\n-1 0.7  # inline comment\n0 0\n1 0.7\n2 0.9\n\n");
    const NoiseShape s = load_custom_shape(good.string());
    CHECK(s.g(0.0) == doctest::Approx(0.0));
    CHECK(s.g(2.0) == doctest::Approx(0.9));

    const auto bad_cols = write_temp("gradnoise_shape_bad1.txt", "0 1 2\n1 2 3\n");
    CHECK_THROWS_AS(load_custom_shape(bad_cols.string()), std::runtime_error);
    const auto bad_num = write_temp("gradnoise_shape_bad2.txt", "0 1\nx 2\n");
    CHECK_THROWS_AS(load_custom_shape(bad_num.string()), std::runtime_error);
    CHECK_THROWS_AS(load_custom_shape("/nonexistent/gradnoise_shape.txt"), std::runtime_error);
    std::filesystem::remove(good);
    std::filesystem::remove(bad_cols);
    std::filesystem::remove(bad_num);
}

TEST_SUITE_END();
