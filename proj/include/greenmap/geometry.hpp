#pragma once

#include "greenmap/point.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace greenmap {

enum class DomainKind : std::uint8_t {
    circle,
    ellipse,
    fourier_curve,
    sphere,
    ellipsoid,
    spherical_harmonic,
};

std::string_view to_string(DomainKind kind);
DomainKind domain_kind_from_string(std::string_view name);

// One term c * Y_l^m of a real, orthonormal spherical-harmonic series.
// m > 0 selects the cos(m phi) harmonic, m < 0 the sin(|m| phi) one.
struct HarmonicTerm {
    int degree = 0;
    int order = 0;
    double coeff = 0.0;
};

// Boundary parameter: polar angle for curves; (polar, azimuth) for surfaces.
struct BoundaryParam {
    double theta = 0.0;
    double phi = 0.0;
};

struct BoundaryNode {
    Point position;
    Point outward_normal;
    double weight = 0.0; // arc-length / area share
};

// A simply connected, star-shaped domain with analytic boundary. Every kind
// is a radial graph over the unit circle/sphere around `center()`. Values are
// immutable after construction.
class DomainSpec {
public:
    static DomainSpec circle(Point center, double radius);
    static DomainSpec ellipse(Point center, double semi_x, double semi_y);
    // r(theta) = base + sum_k cos_coeffs[k-1] cos(k theta) + sin_coeffs[k-1] sin(k theta)
    static DomainSpec fourier_curve(Point center, double base_radius,
                                    std::vector<double> cos_coeffs,
                                    std::vector<double> sin_coeffs);
    static DomainSpec sphere(Point center, double radius);
    static DomainSpec ellipsoid(Point center, double semi_x, double semi_y, double semi_z);
    // r(theta, phi) = base + sum c_lm Y_lm(theta, phi)
    static DomainSpec spherical_harmonic(Point center, double base_radius,
                                         std::vector<HarmonicTerm> terms);

    int dim() const { return center_.dim(); }
    DomainKind kind() const { return kind_; }
    const Point& center() const { return center_; }
    double base_radius() const { return base_; }
    const std::vector<double>& semi_axes() const { return axes_; }
    const std::vector<double>& cos_coeffs() const { return cos_; }
    const std::vector<double>& sin_coeffs() const { return sin_; }
    const std::vector<HarmonicTerm>& harmonic_terms() const { return terms_; }

    // Upper bound on the diameter (twice the largest center-to-boundary radius).
    double diameter() const { return 2.0 * max_radius_; }
    double min_radius() const { return min_radius_; }

    // True when the boundary is exactly a circle/sphere (no perturbation).
    bool is_round() const;

    Point boundary_point(BoundaryParam param) const;
    Point outward_normal(BoundaryParam param) const;

    // Distance from the center to the boundary along the unit direction u.
    double radius_toward(const Point& u) const;
    Point boundary_point_toward(const Point& u) const { return center_ + radius_toward(u) * u; }
    Point normal_toward(const Point& u) const;

    // Strict interior test; points closer than 1e-12 to the boundary count as exterior.
    bool contains(const Point& p) const;

    // Distance from p to the boundary measured along the ray from the center,
    // projected on the normal (a first-order boundary distance). Negative outside.
    double boundary_clearance(const Point& p) const;

    // Quadrature nodes on the boundary. 2D: n nodes uniform in parameter with
    // trapezoid weights. 3D: Gauss-Legendre in cos(theta) times a uniform
    // longitude grid, with nlat = ceil(sqrt(n/2)) and nlon = 2 nlat (so at least n nodes).
    std::vector<BoundaryNode> sample_boundary(int n) const;

private:
    DomainSpec() = default;
    void finalize();

    struct RadialJet {
        double r = 0.0;
        double r_theta = 0.0;
        double r_phi_over_sin = 0.0; // (dr/dphi) / sin(theta), finite at the poles
    };
    RadialJet radial_jet(double theta, double phi) const;

    DomainKind kind_ = DomainKind::circle;
    Point center_;
    double base_ = 1.0;
    std::vector<double> axes_;
    std::vector<double> cos_;
    std::vector<double> sin_;
    std::vector<HarmonicTerm> terms_;
    double max_radius_ = 1.0;
    double min_radius_ = 1.0;
};

// Free-function spellings of the domain operations.
inline Point boundary_point(const DomainSpec& s, BoundaryParam p) { return s.boundary_point(p); }
inline Point outward_normal(const DomainSpec& s, BoundaryParam p) { return s.outward_normal(p); }
inline bool contains(const DomainSpec& s, const Point& p) { return s.contains(p); }
inline std::vector<BoundaryNode> sample_boundary(const DomainSpec& s, int n) { return s.sample_boundary(n); }

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

/// Near-uniform unit directions on the sphere (golden-angle spiral).
std::vector<Point> fibonacci_directions(int count, double twist = 0.0);

/// Polar grid c + s r(theta) u(theta), s = radius_max (i+1)/n_radial.
std::vector<Point> polar_grid(const DomainSpec& spec, int n_radial, int n_angular,
                              double radius_max = 0.99);
/// Spherical grid with polar angles at midpoints and uniform azimuths.
std::vector<Point> spherical_grid(const DomainSpec& spec, int n_radial, int n_polar,
                                  int n_azimuth, double radius_max = 0.99);

} // namespace greenmap
