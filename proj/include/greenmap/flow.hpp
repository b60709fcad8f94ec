#pragma once

#include "greenmap/green.hpp"
#include "greenmap/point.hpp"

#include <iosfwd>
#include <vector>

namespace greenmap {

struct FlowSettings {
    double rtol = 1e-10;
    double atol = 1e-12;
    double eps_bdry = 1e-6;    // 2D forward traces stop at t = 1 - eps_bdry
    double eps_trunc = 1e-6;   // 3D forward traces stop once G <= eps_trunc
    double t_cut = 1e-4;       // pole cut level, in units of the domain diameter
    double level_tol_2d = 1e-9;
    double level_tol_3d = 1e-8;
    int max_steps = 200000;
};

struct TraceSample {
    double t = 0.0;
    Point x;
    double level_residual = 0.0;  // G(x) - target_level(t)
    double weighted_length = 0.0; // 3D: integral of sqrt(4 pi |grad G|) ds from the first sample
};

// A solution curve of the gradient-flow system, samples in increasing t.
struct FlowTrace {
    int dim = 2;
    std::vector<TraceSample> samples;
    Point direction;              // unit exit direction at the pole
    double weighted_length = 0.0; // accumulated over the samples (3D)
    bool truncated = false;       // 3D: stopped at G = truncation_level before the boundary
    double truncation_level = 0.0;
    int steps = 0;

    double max_level_residual() const;
};

// Cone of directions about `axis`: plane angle in 2D, solid angle in 3D.
struct ConePatch {
    Point axis;
    double angle = 0.0;
    double level_param = 0.0; // flow parameter t selecting the level set
};

/// Velocity of the flow at x (2D: -grad G e^{2 pi G} / (2 pi |grad G|^2),
/// 3D: -4 pi G^2 grad G / |grad G|^2). Throws CriticalPointError when |grad G| < 1e-14.
Point rhs(const GreenField& field, const Point& x);
/// Same velocity from an already evaluated field sample at `where`.
Point flow_velocity(int dim, const FieldSample& sample, const Point& where);

/// Exact Green's level carried by a trajectory at flow time t.
double target_level(int dim, double t);
/// Inverse of target_level: the flow time of a point where G = value.
double flow_parameter(int dim, double value);

/// Trace from x0 towards the boundary. The direction field is filled by a
/// separate pole trace from x0; 3D traces accumulate the weighted length.
FlowTrace trace_forward(const GreenField& field, const Point& x0, const FlowSettings& settings = {});

/// Trace from x0 down to the pole cut and extract the exit direction.
FlowTrace trace_to_pole(const GreenField& field, const Point& x0, const FlowSettings& settings = {});

/// Integrate the flow from x0 to the level of flow time t_end (either way).
/// The returned trace has no direction set.
FlowTrace trace_to_level(const GreenField& field, const Point& x0, double t_end, const FlowSettings& settings = {});

/// Point at flow time t on the trajectory leaving the pole in `direction`.
Point shoot_from_pole(const GreenField& field, const Point& direction, double t, const FlowSettings& settings = {});

/// Max angle (radians) between trace.direction and the directions re-extracted
/// from k points spread along the trace.
double direction_constancy_check(const GreenField& field, const FlowTrace& trace, int k,
                                 const FlowSettings& settings = {});

/// Magnitude of the flux of grad G through the part of the level set
/// {G = target_level(t)} whose exit directions lie in the cone. Equals the
/// cone angle over 2 pi (2D) or 4 pi (3D) for an exact Green's function.
double flux_through_patch(const GreenField& field, const ConePatch& patch, const FlowSettings& settings = {});

/// Weighted length of a 3D trace plus the truncation tail estimate.
double weighted_length(const GreenField& field, const FlowTrace& trace);

/// Estimated weighted length between a truncated end point and the boundary.
double truncation_tail(const GreenField& field, const Point& x);

/// CSV dump: header t,x0,x1[,x2],G,level_residual; one row per sample.
void write_trace_csv(std::ostream& out, const GreenField& field, const FlowTrace& trace);

} // namespace greenmap
