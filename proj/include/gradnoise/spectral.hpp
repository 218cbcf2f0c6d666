#pragma once

#include <span>
#include <vector>

namespace gradnoise {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Real trigonometric polynomial on the circle, stored as coordinates
/// against the orthonormal basis
///   e_1 = 1/sqrt(2*pi),  e_{2k} = sin(kx)/sqrt(pi),  e_{2k+1} = cos(kx)/sqrt(pi).
/// Note the constant mode is normalized to unit L2 norm on [0, 2*pi);
/// all basis-sum constants used elsewhere are derived from this basis.
struct SpectralField {
    explicit SpectralField(int m);
    explicit SpectralField(std::vector<double> coeffs);

    int dim() const { return static_cast<int>(c.size()); }

    std::vector<double> c;
};

/// Collocation values on the uniform grid x_j = 2*pi*j/N. N must be a
/// power of two.
struct GridField {
    explicit GridField(int N);
    explicit GridField(std::vector<double> values);

    int size() const { return static_cast<int>(v.size()); }

    std::vector<double> v;
};

/// Wavenumber carried by basis index i >= 1 (0 for the constant mode).
int wavenumber(int i);

/// Degree of the highest resolved pair in an m-dimensional space.
inline int max_wavenumber(int m) { return m / 2; }

double grid_point(int N, int j);

/// e_i(x) for i >= 1; throws std::invalid_argument for i < 1.
double basis_eval(int i, double x);

/// (e_i)'(x).
double basis_deriv(int i, double x);

/// Sum_{i=1}^{count} e_i(x)^2 evaluated from the basis itself. For a full
/// set of 2n+1 modes this equals (2n+1)/(2*pi) independently of x.
double basis_square_sum(int count, double x);

/// L2 projection onto the first m modes by discrete quadrature.
/// Exact for band-limited inputs; requires m <= N-1.
SpectralField project(const GridField& f, int m);

/// Pointwise evaluation on an N-point grid; requires N >= 2*(m/2 + 1).
GridField synthesize(const SpectralField& f, int N);

/// Exact spectral differentiation. If the top sin/cos pair of the input
/// is incomplete the result is widened by one mode so it stays exact.
SpectralField derivative(const SpectralField& f);

/// (2*pi/N) * sum of values: the periodic trapezoid rule, exact for
/// trigonometric polynomials of degree < N/2.
double quadrature(const GridField& f);

double norm_l2(const SpectralField& f); // Parseval: Euclidean norm of coeffs
double norm_l2(const GridField& f);
double h1_seminorm(const SpectralField& f);
double norm_l1(const GridField& f);
/// Integral of |f|^p (the p-th power itself, not its p-th root).
double lp_power(const GridField& f, double p);

/// Precomputed e_i(x_j) table so the integrator's inner loop does no
/// trigonometry. Column i-1 holds e_i on the grid, contiguous in j.
class BasisTable {
public:
    BasisTable(int N, int m);

    int grid_size() const { return N_; }
    int dim() const { return m_; }

    std::span<const double> mode(int i) const; // e_i values, i in [1, m]

    void synthesize(std::span<const double> coeffs, std::span<double> values) const;
    void project(std::span<const double> values, std::span<double> coeffs) const;

private:
    int N_;
    int m_;
    std::vector<double> table_; // m columns of length N
};

} // namespace gradnoise
