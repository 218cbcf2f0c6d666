#include "gradnoise/spectral.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace gradnoise {

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(kTwoPi);
const double kInvSqrtPi = 1.0 / std::sqrt(kPi);

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

SpectralField::SpectralField(int m) : c(static_cast<size_t>(m > 0 ? m : 0), 0.0) {
    if (m < 1) throw std::invalid_argument("SpectralField: dimension must be >= 1");
}

SpectralField::SpectralField(std::vector<double> coeffs) : c(std::move(coeffs)) {
    if (c.empty()) throw std::invalid_argument("SpectralField: dimension must be >= 1");
}

GridField::GridField(int N) : v(static_cast<size_t>(N > 0 ? N : 0), 0.0) {
    if (!is_power_of_two(N)) throw std::invalid_argument("GridField: N must be a power of two");
}

GridField::GridField(std::vector<double> values) : v(std::move(values)) {
    if (!is_power_of_two(size())) throw std::invalid_argument("GridField: N must be a power of two");
}

int wavenumber(int i) {
    if (i < 1) throw std::invalid_argument("wavenumber: basis index starts at 1");
    return i == 1 ? 0 : i / 2;
}

double grid_point(int N, int j) { return kTwoPi * static_cast<double>(j) / static_cast<double>(N); }

double basis_eval(int i, double x) {
    if (i < 1) throw std::invalid_argument("basis_eval: basis index starts at 1");
    if (i == 1) return kInvSqrt2Pi;
    const int k = i / 2;
    return (i % 2 == 0 ? std::sin(k * x) : std::cos(k * x)) * kInvSqrtPi;
}

double basis_deriv(int i, double x) {
    if (i < 1) throw std::invalid_argument("basis_deriv: basis index starts at 1");
    if (i == 1) return 0.0;
    const int k = i / 2;
    return (i % 2 == 0 ? k * std::cos(k * x) : -k * std::sin(k * x)) * kInvSqrtPi;
}

double basis_square_sum(int count, double x) {
    double s = 0.0;
    for (int i = 1; i <= count; ++i) {
        const double e = basis_eval(i, x);
        s += e * e;
    }
    return s;
}

SpectralField project(const GridField& f, int m) {
    const int N = f.size();
    if (m < 1 || m > N - 1)
        throw std::invalid_argument("project: need 1 <= m <= N-1 for exact quadrature");
    SpectralField out(m);
    const double w = kTwoPi / N;
    for (int i = 1; i <= m; ++i) {
        double s = 0.0;
        for (int j = 0; j < N; ++j) s += f.v[j] * basis_eval(i, grid_point(N, j));
        out.c[i - 1] = w * s;
    }
    return out;
}

GridField synthesize(const SpectralField& f, int N) {
    const int m = f.dim();
    if (N < 2 * (m / 2 + 1))
        throw std::invalid_argument("synthesize: grid too coarse for the top mode");
    GridField out(N);
    for (int j = 0; j < N; ++j) {
        const double x = grid_point(N, j);
        double s = 0.0;
        for (int i = 1; i <= m; ++i) s += f.c[i - 1] * basis_eval(i, x);
        out.v[j] = s;
    }
    return out;
}

SpectralField derivative(const SpectralField& f) {
    const int m = f.dim();
    // d/dx maps the pair (sin k, cos k) to (k cos k, -k sin k); an input
    // ending on a bare sin mode therefore needs the matching cos slot.
    const int out_m = (m > 1 && m % 2 == 0) ? m + 1 : m;
    SpectralField out(out_m);
    out.c[0] = 0.0;
    for (int i = 2; i <= m; ++i) {
        const int k = i / 2;
        if (i % 2 == 0)
            out.c[i] = k * f.c[i - 1]; // sin k -> k cos k, lands at index i+1
        else
            out.c[i - 2] = -k * f.c[i - 1]; // cos k -> -k sin k, lands at index i-1
    }
    return out;
}

double quadrature(const GridField& f) {
    double s = 0.0;
    for (double v : f.v) s += v;
    return s * kTwoPi / f.size();
}

double norm_l2(const SpectralField& f) {
    double s = 0.0;
    for (double c : f.c) s += c * c;
    return std::sqrt(s);
}

double norm_l2(const GridField& f) {
    double s = 0.0;
    for (double v : f.v) s += v * v;
    return std::sqrt(s * kTwoPi / f.size());
}

double h1_seminorm(const SpectralField& f) {
    double s = 0.0;
    for (int i = 2; i <= f.dim(); ++i) {
        const double kc = wavenumber(i) * f.c[i - 1];
        s += kc * kc;
    }
    return std::sqrt(s);
}

double norm_l1(const GridField& f) {
    double s = 0.0;
    for (double v : f.v) s += std::abs(v);
    return s * kTwoPi / f.size();
}

double lp_power(const GridField& f, double p) {
    double s = 0.0;
    for (double v : f.v) s += std::pow(std::abs(v), p);
    return s * kTwoPi / f.size();
}

BasisTable::BasisTable(int N, int m) : N_(N), m_(m) {
    if (!is_power_of_two(N)) throw std::invalid_argument("BasisTable: N must be a power of two");
    if (m < 1 || m > N - 1) throw std::invalid_argument("BasisTable: need 1 <= m <= N-1");
    table_.resize(static_cast<size_t>(N) * m);
    for (int i = 1; i <= m; ++i)
        for (int j = 0; j < N; ++j)
            table_[static_cast<size_t>(i - 1) * N + j] = basis_eval(i, grid_point(N, j));
}

std::span<const double> BasisTable::mode(int i) const {
    if (i < 1 || i > m_) throw std::invalid_argument("BasisTable::mode: index out of range");
    return {table_.data() + static_cast<size_t>(i - 1) * N_, static_cast<size_t>(N_)};
}

void BasisTable::synthesize(std::span<const double> coeffs, std::span<double> values) const {
    if (static_cast<int>(coeffs.size()) != m_ || static_cast<int>(values.size()) != N_)
        throw std::invalid_argument("BasisTable::synthesize: size mismatch");
    for (int j = 0; j < N_; ++j) values[j] = 0.0;
    for (int i = 0; i < m_; ++i) {
        const double a = coeffs[i];
        if (a == 0.0) continue;
        const double* col = table_.data() + static_cast<size_t>(i) * N_;
        for (int j = 0; j < N_; ++j) values[j] += a * col[j];
    }
}

void BasisTable::project(std::span<const double> values, std::span<double> coeffs) const {
    if (static_cast<int>(coeffs.size()) != m_ || static_cast<int>(values.size()) != N_)
        throw std::invalid_argument("BasisTable::project: size mismatch");
    const double w = kTwoPi / N_;
    for (int i = 0; i < m_; ++i) {
        const double* col = table_.data() + static_cast<size_t>(i) * N_;
        double s = 0.0;
        for (int j = 0; j < N_; ++j) s += values[j] * col[j];
        coeffs[i] = w * s;
    }
}

} // namespace gradnoise
