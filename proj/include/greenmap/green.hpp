#pragma once

#include "greenmap/geometry.hpp"
#include "greenmap/point.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace greenmap {

enum class GreenBackend : std::uint8_t { analytic_disk, analytic_ball, mfs };

std::string_view to_string(GreenBackend backend);
GreenBackend green_backend_from_string(std::string_view name);

struct SolverSettings {
    int collocation = 0;          // boundary nodes; 0 picks 256 (2D) / 800 (3D)
    int max_collocation = 0;      // refinement cap; 0 picks 4096 (2D) / 3200 (3D)
    double dilation = 1.5;        // source curve = boundary scaled about the center
    double tolerance = 0.0;       // boundary residual target; 0 picks 1e-10 (2D) / 1e-8 (3D)
    double svd_cutoff = 1e-12;    // relative singular value truncation
    bool force_mfs = false;       // skip the closed forms on round domains

    int collocation_for(int dim) const { return collocation > 0 ? collocation : (dim == 2 ? 256 : 800); }
    int max_collocation_for(int dim) const
    {
        return max_collocation > 0 ? max_collocation : (dim == 2 ? 4096 : 3200);
    }
    double tolerance_for(int dim) const { return tolerance > 0.0 ? tolerance : (dim == 2 ? 1e-10 : 1e-8); }
};

struct FieldSample {
    double value = 0.0;
    Point gradient;
};

// Green's function G(., y) of a domain with pole y:
//   G(x) = fundamental(x - y) + h(x),
// fundamental = ln(1/r)/(2 pi) in the plane and 1/(4 pi r) in space, h harmonic.
// The closed forms cover discs and balls; otherwise h is a method-of-fundamental-
// solutions expansion sum_j q_j K(x, s_j) + c with exterior sources s_j.
class GreenField {
public:
    const DomainSpec& spec() const { return *spec_; }
    const Point& pole() const { return pole_; }
    int dim() const { return pole_.dim(); }
    GreenBackend backend() const { return backend_; }
    const std::vector<Point>& sources() const { return sources_; }
    const std::vector<double>& charges() const { return charges_; }
    double constant() const { return constant_; }
    // Max |G| over fresh (non-collocation) boundary points, measured at solve time.
    double boundary_residual() const { return residual_; }
    // Evaluations closer than this to the pole are rejected.
    double pole_collar() const { return 1e-9 * spec_->diameter(); }

    // Checked evaluation: x must be interior and outside the pole collar.
    double value(const Point& x) const;
    Point gradient(const Point& x) const;

    // Unchecked value and gradient of the representation (defined off the domain
    // too, away from the pole and the sources). Used by the flow integrator.
    FieldSample sample(const Point& x) const;

    double fundamental(const Point& x) const;
    double regular_part(const Point& x) const;
    Point regular_gradient(const Point& x) const;
    double regular_part_at_pole() const { return regular_part(pole_); }

    // Integral of dG/dn over the boundary; -1 for a unit pole charge.
    double boundary_flux_total() const;

    // Rebuild from persisted parts (see io.hpp).
    static GreenField from_parts(DomainSpec spec, Point pole, GreenBackend backend, std::vector<Point> sources,
                                 std::vector<double> charges, double constant, double residual);

private:
    friend GreenField solve(const DomainSpec& spec, const Point& pole, const SolverSettings& settings);

    std::shared_ptr<const DomainSpec> spec_;
    Point pole_;
    GreenBackend backend_ = GreenBackend::mfs;
    std::vector<Point> sources_;
    std::vector<double> charges_;
    double constant_ = 0.0;
    double residual_ = 0.0;
};

/// Build the Green's function of `spec` with pole `pole`. Round domains use
/// the closed forms unless settings.force_mfs is set. Throws DomainError when
/// the pole is not well inside, ConvergenceError when the boundary residual
/// stays above tolerance at the largest collocation count.
GreenField solve(const DomainSpec& spec, const Point& pole, const SolverSettings& settings = {});

double fundamental_solution(const Point& r);

} // namespace greenmap
