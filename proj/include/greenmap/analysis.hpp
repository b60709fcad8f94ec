#pragma once

#include "greenmap/green.hpp"
#include "greenmap/point.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace greenmap {

using Matrix = Eigen::MatrixXd; // 2x2 or 3x3 throughout
using PointMap = std::function<Point(const Point&)>;
using ScalarField = std::function<double(const Point&)>;

/// Central-difference Jacobian, one column per coordinate. step <= 0 picks
/// max(1e-5 |x|, 1e-8). Map failures are rethrown as ProbeError at the probe.
Matrix numeric_jacobian(const PointMap& map, const Point& x, double step = 0.0);

/// C = J^T J.
Matrix metric_tensor(const Matrix& jacobian);

/// Eigenvalues of a symmetric 2x2 / 3x3 matrix in closed form, descending.
/// Small negative round-off (above -1e-12 * scale) is clamped to zero.
std::vector<double> symmetric_eigenvalues(const Matrix& c);

/// 2x2: |4 det - tr^2| / tr^2. 3x3: |27 det - tr^3| / tr^3. Zero iff all eigenvalues agree.
double conformal_residual(const Matrix& c);

struct WeakConformalResidual {
    double polynomial = 0.0;  // |(tr^2 - |C|^2)^3 - 8 det tr^3|, normalized
    double progression = 0.0; // |l1 l3 - l2^2| / l2^2 on sorted eigenvalues
};

/// Residual of the geometric-progression criterion (tr^2 - |C|^2)^3 = 8 det tr^3.
/// The difference is divided by the larger of the two sides. 2x2 inputs are
/// embedded first (see embed_planar_metric), which always yields 0.
WeakConformalResidual weak_conformal_residuals(const Matrix& c);
double weak_conformal_residual(const Matrix& c);

/// 3x3 block-diagonal embedding of a planar metric with the third
/// eigenvalue set to the geometric mean sqrt(det).
Matrix embed_planar_metric(const Matrix& c2);

/// sqrt(lambda_max / lambda_min); DegeneracyError when lambda_min <= 0.
double dilatation(const Matrix& c);

enum class MapClass : std::uint8_t { conformal, weak_conformal, quasi_conformal, general };
std::string_view to_string(MapClass kind);

struct Classification {
    MapClass kind = MapClass::general;
    double dilatation = 0.0; // K for quasi-conformal, otherwise informative
    std::string label() const; // "quasi-conformal(2)" style for quasi-conformal
};

/// conformal if conformal_residual < tol, else weak-conformal if the weak
/// residual < tol, else quasi-conformal with K = dilatation; general when C
/// is degenerate.
Classification classify(const Matrix& c, double tol);

struct MetricReport {
    Matrix jacobian;
    Matrix metric;
    std::vector<double> eigenvalues;
    double trace = 0.0;
    double determinant = 0.0;
    double frobenius_sq = 0.0;
    double conformal_residual = 0.0;
    double weak_conformal_residual = 0.0;
    double progression_residual = 0.0;
    double dilatation = 0.0; // infinity for a degenerate metric
    Classification classification;
};

MetricReport metric_report(const Matrix& jacobian, double tol);
MetricReport metric_report_at(const PointMap& map, const Point& x, double tol, double step = 0.0);

// Harmonic gradient bound at the minimizer x* of u over the closed ball B(x0, r):
//   |grad u(x*)| >= k (u(x0) - u(x*)),  k = 1/(2r) in the plane, 1/(4r) in space.
struct Lemma3Report {
    Point minimizer;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool passed = false;
};

double lemma3_constant(int dim, double r);

/// u must be harmonic on the closed ball. The minimizer is located among
/// n_probe boundary probes and refined locally; the gradient is taken by
/// central differences.
Lemma3Report lemma3_check(const ScalarField& u, const Point& x0, double r, int n_probe);

// Sum of Re(c_k (a_k . x)^{d_k}) plus a constant, with complex null vectors
// a_k (a_k . a_k = 0); every term is harmonic.
class HarmonicPolynomial {
public:
    struct Term {
        std::complex<double> coeff;
        std::array<std::complex<double>, 3> axis;
        int degree = 0;
    };

    HarmonicPolynomial(int dim, double constant = 0.0) : dim_(dim), constant_(constant) {}

    void add_term(std::complex<double> coeff, const std::array<std::complex<double>, 3>& axis, int degree);
    /// Re(c z^k) in the plane (z = x + i y).
    void add_power(std::complex<double> coeff, int degree);

    int dim() const { return dim_; }
    int degree() const;
    const std::vector<Term>& terms() const { return terms_; }

    double value(const Point& x) const;
    Point gradient(const Point& x) const;
    double laplacian(const Point& x, double h = 1e-4) const; // numeric check
    ScalarField as_field() const;

    static HarmonicPolynomial random(int dim, int max_degree, std::mt19937_64& rng);

private:
    int dim_;
    double constant_;
    std::vector<Term> terms_;
};

using GradientField = std::function<Point(const Point&)>;
using Predicate = std::function<bool(const Point&)>;

struct ScanResult {
    double min_grad = 0.0;
    Point argmin;
    std::size_t grid_size = 0;
    std::size_t evaluated = 0; // grid points outside the pole exclusion
    bool refined = false;      // argmin moved by the local Newton search
};

/// Minimum of |grad G| over the grid points outside the pole exclusion ball,
/// followed by a trust-region Newton search for a nearby zero of grad G. A
/// refined point is kept only if it stays inside, outside the exclusion and
/// lowers the minimum.
ScanResult critical_point_scan(const GreenField& field, const std::vector<Point>& grid, double pole_exclusion);
ScanResult critical_point_scan(const GradientField& gradient, const Predicate& inside, const Point& pole,
                               const std::vector<Point>& grid, double pole_exclusion, double length_scale);

// Green's function of the annulus {1 < |x| < 2} with pole (1.5, 0), fitted by
// two rings of exterior sources. This domain is not simply connected, and its
// Green's function has a saddle on the negative x axis.
class AnnulusFixture {
public:
    explicit AnnulusFixture(int collocation = 512);

    double inner_radius() const { return 1.0; }
    double outer_radius() const { return 2.0; }
    const Point& pole() const { return pole_; }
    double boundary_residual() const { return residual_; }

    bool contains(const Point& x) const;
    double value(const Point& x) const;
    Point gradient(const Point& x) const;
    /// Integral of dG/dn over both boundary circles.
    double boundary_flux_total(int n = 2048) const;
    /// Polar grid at radii 1 + (i + 1/2)/n_radial.
    std::vector<Point> grid(int n_radial, int n_angular) const;
    ScanResult scan(const std::vector<Point>& grid, double pole_exclusion) const;

private:
    Point pole_;
    std::vector<Point> sources_;
    Eigen::VectorXd charges_;
    double constant_ = 0.0;
    double residual_ = 0.0;
};

} // namespace greenmap
