#include "greenmap/flow.hpp"

#include "greenmap/errors.hpp"
#include "greenmap/geometry.hpp"

#include <boost/numeric/odeint.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>

namespace greenmap {

namespace {

namespace odeint = boost::numeric::odeint;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

// Integration state: position (2 or 3 components, zero padded) and the
// accumulated weighted length. The independent variable is tau = ln t.
using State = std::array<double, 4>;

Point to_point(const State& s, int dim) { return dim == 2 ? Point(s[0], s[1]) : Point(s[0], s[1], s[2]); }

void store_point(State& s, const Point& x)
{
    s[0] = x[0];
    s[1] = x[1];
    s[2] = x.dim() == 3 ? x[2] : 0.0;
}

double weighted_length_rate(double t, const FieldSample& fs)
{
    // d/dtau of the weighted length, with ds/dt = 4 pi G^2 / |grad G|.
    return t * kFourPi * fs.value * fs.value * std::sqrt(kFourPi / fs.gradient.norm());
}

struct FlowSystem {
    const GreenField& field;
    int dim;
    bool accumulate_length;

    void operator()(const State& s, State& ds, double tau) const
    {
        const Point x = to_point(s, dim);
        const FieldSample fs = field.sample(x);
        const Point v = flow_velocity(dim, fs, x);
        const double t = std::exp(tau);
        const Point dx = v * t;
        ds[0] = dx[0];
        ds[1] = dx[1];
        ds[2] = dim == 3 ? dx[2] : 0.0;
        ds[3] = accumulate_length ? weighted_length_rate(t, fs) : 0.0;
    }
};

// Newton projection along grad G onto {G = target}; returns the final residual.
double project_to_level(const GreenField& field, Point& x, double target)
{
    double residual = 0.0;
    for (int it = 0; it < 12; ++it) {
        const FieldSample fs = field.sample(x);
        residual = fs.value - target;
        if (std::abs(residual) <= 1e-15 * std::max(1.0, std::abs(target))) return residual;
        const double g2 = fs.gradient.norm_sq();
        if (!(g2 > 1e-28)) throw CriticalPointError("vanishing gradient during level projection", x);
        x -= fs.gradient * (residual / g2);
    }
    return field.sample(x).value - target;
}

double level_tolerance(int dim, const FlowSettings& s) { return dim == 2 ? s.level_tol_2d : s.level_tol_3d; }

// Core driver: adaptive Dormand-Prince 5(4) in tau = ln t from (x0, t0) to
// t_end, with a level projection after every accepted step. Samples are
// appended in integration order.
void integrate(const GreenField& field, Point x0, double t0, double t_end, const FlowSettings& settings,
               bool accumulate_length, FlowTrace& trace)
{
    const int dim = field.dim();
    const double tau_end = std::log(t_end);
    double tau = std::log(t0);
    const double direction = tau_end >= tau ? 1.0 : -1.0;
    if (std::abs(tau_end - tau) == 0.0) return;

    FlowSystem system{field, dim, accumulate_length};
    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(settings.atol, settings.rtol);

    State s{};
    store_point(s, x0);
    s[3] = trace.samples.empty() ? 0.0 : trace.samples.back().weighted_length;

    const double tol = level_tolerance(dim, settings);
    double dt = direction * std::min(0.05, std::abs(tau_end - tau));
    while (direction * (tau_end - tau) > 0.0) {
        if (trace.steps >= settings.max_steps)
            throw StiffnessError(fmt::format("step budget of {} exhausted", settings.max_steps), to_point(s, dim));
        const bool last = direction * (tau + dt - tau_end) >= 0.0;
        if (last) dt = tau_end - tau;

        const auto result = stepper.try_step(system, s, tau, dt);
        if (result == odeint::fail) {
            if (std::abs(dt) < 1e-13 * std::max(1.0, std::abs(tau)))
                throw StiffnessError(fmt::format("step size underflow at tau={}", tau), to_point(s, dim));
            continue;
        }
        ++trace.steps;
        if (last || std::abs(tau_end - tau) <= 1e-14 * std::max(1.0, std::abs(tau_end))) tau = tau_end;

        Point x = to_point(s, dim);
        const double t = std::exp(tau);
        const double residual = project_to_level(field, x, target_level(dim, t));
        if (!(std::abs(residual) <= tol))
            throw StiffnessError(fmt::format("level projection left residual {:.3e}", residual), x);
        store_point(s, x);
        stepper.reset(); // the FSAL derivative is stale after projecting
        trace.samples.push_back({t, x, residual, s[3]});
    }
}

FlowTrace start_trace(const GreenField& field, const Point& x0, double& t0)
{
    const double g = field.value(x0); // checks interior and pole collar
    t0 = flow_parameter(field.dim(), g);
    FlowTrace trace;
    trace.dim = field.dim();
    trace.direction = Point::zero(field.dim());
    trace.samples.push_back({t0, x0, 0.0, 0.0});
    return trace;
}

double pole_cut(const GreenField& field, const FlowSettings& settings)
{
    return settings.t_cut * field.spec().diameter();
}

// Start point of the trajectory leaving the pole in `direction`, at flow time t
// (small), from the second-order pole expansion.
Point pole_expansion(const GreenField& field, const Point& a, double t)
{
    const Point& y = field.pole();
    const double h = field.regular_part_at_pole();
    if (field.dim() == 2) {
        const Point gh = field.regular_gradient(y);
        const std::complex<double> ac(a[0], a[1]);
        const std::complex<double> hprime(gh[0], -gh[1]);
        const double e = std::exp(kTwoPi * h);
        const std::complex<double> dz = t * ac * e + kTwoPi * hprime * t * t * ac * ac * e * e;
        return y + Point(dz.real(), dz.imag());
    }
    return y + a * (t * (1.0 + kFourPi * t * h));
}

void validate_settings(const FlowSettings& s)
{
    if (!(s.rtol > 0.0 && s.atol > 0.0 && s.eps_bdry > 0.0 && s.eps_trunc > 0.0 && s.t_cut > 0.0
          && s.level_tol_2d > 0.0 && s.level_tol_3d > 0.0 && s.max_steps > 0))
        throw ConfigError("flow tolerances must be positive");
    if (s.eps_bdry >= 1.0) throw ConfigError("eps_bdry must be below 1");
}

} // namespace

double FlowTrace::max_level_residual() const
{
    double worst = 0.0;
    for (const auto& s : samples) worst = std::max(worst, std::abs(s.level_residual));
    return worst;
}

Point flow_velocity(int dim, const FieldSample& sample, const Point& where)
{
    const double g2 = sample.gradient.norm_sq();
    if (!(std::sqrt(g2) >= 1e-14)) throw CriticalPointError("|grad G| vanished on the flow", where);
    if (dim == 2) return sample.gradient * (-std::exp(kTwoPi * sample.value) / (kTwoPi * g2));
    return sample.gradient * (-kFourPi * sample.value * sample.value / g2);
}

Point rhs(const GreenField& field, const Point& x)
{
    const double g = field.value(x);
    return flow_velocity(field.dim(), {g, field.gradient(x)}, x);
}

double target_level(int dim, double t)
{
    if (dim == 2) {
        if (!(t > 0.0 && t <= 1.0)) throw RangeError(fmt::format("2D flow time must lie in (0, 1], got {}", t));
        return -std::log(t) / kTwoPi;
    }
    if (!(t > 0.0) || !std::isfinite(t)) throw RangeError(fmt::format("3D flow time must be positive, got {}", t));
    return 1.0 / (kFourPi * t);
}

double flow_parameter(int dim, double value)
{
    if (!(value > 0.0)) throw RangeError("flow time is defined only where G > 0");
    return dim == 2 ? std::exp(-kTwoPi * value) : 1.0 / (kFourPi * value);
}

FlowTrace trace_to_level(const GreenField& field, const Point& x0, double t_end, const FlowSettings& settings)
{
    validate_settings(settings);
    target_level(field.dim(), t_end);
    double t0 = 0.0;
    FlowTrace trace = start_trace(field, x0, t0);
    const bool forward = t_end > t0;
    integrate(field, x0, t0, t_end, settings, forward && field.dim() == 3, trace);
    if (!forward) std::reverse(trace.samples.begin(), trace.samples.end());
    if (forward) trace.weighted_length = trace.samples.back().weighted_length;
    return trace;
}

FlowTrace trace_to_pole(const GreenField& field, const Point& x0, const FlowSettings& settings)
{
    validate_settings(settings);
    double t0 = 0.0;
    FlowTrace trace = start_trace(field, x0, t0);
    const double tc = std::min(pole_cut(field, settings), 0.5 * t0);

    integrate(field, x0, t0, tc, settings, false, trace);
    const Point x_cut = trace.samples.back().x;
    integrate(field, x_cut, tc, 0.5 * tc, settings, false, trace);
    const Point x_half = trace.samples.back().x;

    // (x(t) - y)/t = a e^{2 pi h} + O(t); Richardson over {tc, tc/2} removes the O(t) term.
    const Point& y = field.pole();
    const Point v1 = (x_cut - y) / tc;
    const Point v2 = (x_half - y) / (0.5 * tc);
    trace.direction = (2.0 * v2 - v1).normalized();
    std::reverse(trace.samples.begin(), trace.samples.end());
    return trace;
}

FlowTrace trace_forward(const GreenField& field, const Point& x0, const FlowSettings& settings)
{
    validate_settings(settings);
    const int dim = field.dim();
    double t0 = 0.0;
    FlowTrace trace = start_trace(field, x0, t0);
    double t_end = 0.0;
    if (dim == 2) {
        t_end = 1.0 - settings.eps_bdry;
    } else {
        t_end = flow_parameter(3, settings.eps_trunc);
        trace.truncated = true;
        trace.truncation_level = settings.eps_trunc;
    }
    if (t_end > t0) integrate(field, x0, t0, t_end, settings, dim == 3, trace);
    trace.weighted_length = trace.samples.back().weighted_length;
    trace.direction = trace_to_pole(field, x0, settings).direction;
    return trace;
}

Point shoot_from_pole(const GreenField& field, const Point& direction, double t, const FlowSettings& settings)
{
    validate_settings(settings);
    const int dim = field.dim();
    if (direction.dim() != dim) throw ConfigError("direction dimension does not match the field");
    if (!(direction.norm() > 0.0)) throw ConfigError("direction must be nonzero");
    target_level(dim, t);
    const Point a = direction.normalized();

    const double t_start = std::min(dim == 2 ? 1e-6 : pole_cut(field, settings), t);
    Point x = pole_expansion(field, a, t_start);
    const double residual = project_to_level(field, x, target_level(dim, t_start));
    if (!(std::abs(residual) <= level_tolerance(dim, settings)))
        throw StiffnessError("could not place the start point on its level", x);
    if (distance(x, field.pole()) <= field.pole_collar()) throw RangeError("level set lies inside the pole collar");
    if (t_start == t) return x;

    FlowTrace scratch;
    scratch.dim = dim;
    integrate(field, x, t_start, t, settings, false, scratch);
    return scratch.samples.back().x;
}

double direction_constancy_check(const GreenField& field, const FlowTrace& trace, int k,
                                 const FlowSettings& settings)
{
    if (trace.samples.empty()) return 0.0;
    const std::size_t n = trace.samples.size();
    const std::size_t count = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), 1, n);
    double worst = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t idx = count == 1 ? 0 : (j * (n - 1) + (count - 1) / 2) / (count - 1);
        const Point a = trace_to_pole(field, trace.samples[idx].x, settings).direction;
        worst = std::max(worst, angle_between(a, trace.direction));
    }
    return worst;
}

double flux_through_patch(const GreenField& field, const ConePatch& patch, const FlowSettings& settings)
{
    const int dim = field.dim();
    if (patch.axis.dim() != dim) throw ConfigError("patch axis dimension does not match the field");
    if (!(patch.axis.norm() > 0.0)) throw ConfigError("patch axis must be nonzero");
    const double full = dim == 2 ? kTwoPi : kFourPi;
    if (!(patch.angle > 0.0 && patch.angle <= full))
        throw RangeError(fmt::format("cone angle must lie in (0, {}]", full));
    if (dim == 2 && !(patch.level_param > 0.0 && patch.level_param < 1.0))
        throw RangeError("2D patch level must lie in (0, 1)");
    if (dim == 3 && !(patch.level_param > 0.0)) throw RangeError("3D patch level must be positive");

    const double t = patch.level_param;
    const Point axis = patch.axis.normalized();
    auto shoot = [&](const Point& a) {
        const Point x = shoot_from_pole(field, a, t, settings);
        if (distance(x, field.pole()) <= 10.0 * field.pole_collar())
            throw RangeError("patch level set intersects the pole collar");
        return x;
    };
    // Fourth-order central difference of the level-set parametrization.
    constexpr double h = 1e-3;
    auto derivative = [&](auto&& curve, double s) {
        return (shoot(curve(s - 2 * h)) - 8.0 * shoot(curve(s - h)) + 8.0 * shoot(curve(s + h))
                - shoot(curve(s + 2 * h)))
            / (12.0 * h);
    };

    if (dim == 2) {
        const double base = std::atan2(axis[1], axis[0]);
        const double half = 0.5 * patch.angle;
        const GaussRule rule = gauss_legendre(32);
        auto curve = [](double th) { return Point(std::cos(th), std::sin(th)); };
        double flux = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            const double th = base + half * rule.nodes[i];
            const Point x = shoot(curve(th));
            const Point dx = derivative(curve, th);
            flux += rule.weights[i] * half * field.sample(x).gradient.norm() * dx.norm();
        }
        return flux;
    }

    // Orthonormal frame (axis, e1, e2); the cap is psi in [0, beta], chi in [0, 2 pi).
    const Point helper = std::abs(axis[0]) < 0.9 ? Point(1.0, 0.0, 0.0) : Point(0.0, 1.0, 0.0);
    const Point e1 = cross(axis, helper).normalized();
    const Point e2 = cross(axis, e1);
    const double beta = std::acos(std::clamp(1.0 - patch.angle / kTwoPi, -1.0, 1.0));
    auto dir = [&](double psi, double chi) {
        return std::cos(psi) * axis + std::sin(psi) * (std::cos(chi) * e1 + std::sin(chi) * e2);
    };
    const GaussRule rule = gauss_legendre(16);
    constexpr int n_chi = 32;
    double flux = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double psi = 0.5 * beta * (rule.nodes[i] + 1.0);
        for (int k = 0; k < n_chi; ++k) {
            const double chi = kTwoPi * k / n_chi;
            const Point x = shoot(dir(psi, chi));
            const Point d_psi = derivative([&](double s) { return dir(s, chi); }, psi);
            const Point d_chi = derivative([&](double s) { return dir(psi, s); }, chi);
            const double area = cross(d_psi, d_chi).norm();
            flux += rule.weights[i] * 0.5 * beta * (kTwoPi / n_chi) * field.sample(x).gradient.norm() * area;
        }
    }
    return flux;
}

double truncation_tail(const GreenField& field, const Point& x)
{
    // Linearize G near the boundary: remaining path ~ G/|grad G| at rate sqrt(4 pi |grad G|).
    const FieldSample fs = field.sample(x);
    const double g = std::max(fs.value, 0.0);
    return g * std::sqrt(kFourPi / fs.gradient.norm());
}

double weighted_length(const GreenField& field, const FlowTrace& trace)
{
    if (trace.dim != 3) throw ConfigError("weighted_length is defined for 3D traces");
    if (trace.samples.size() <= 1) return 0.0;
    const TraceSample& first = trace.samples.front();
    const TraceSample& last = trace.samples.back();
    double total = last.weighted_length - first.weighted_length;
    if (!trace.truncated) return total;

    // Near a smooth boundary the integrand decays like e^{-tau}; a rate that
    // does not decay means the curve is not settling onto the boundary.
    const double tau_end = std::log(last.t);
    for (auto it = trace.samples.rbegin(); it != trace.samples.rend(); ++it) {
        if (std::log(it->t) <= tau_end - 1.0) {
            const double rate_then = weighted_length_rate(it->t, field.sample(it->x));
            const double rate_now = weighted_length_rate(last.t, field.sample(last.x));
            if (rate_now > 0.75 * rate_then)
                throw FiniteLengthError("weighted length integrand does not decay at the truncation level", last.x);
            break;
        }
    }
    return total + truncation_tail(field, last.x);
}

void write_trace_csv(std::ostream& out, const GreenField& field, const FlowTrace& trace)
{
    out << (trace.dim == 2 ? "t,x0,x1,G,level_residual\n" : "t,x0,x1,x2,G,level_residual\n");
    for (const auto& s : trace.samples) {
        out << fmt::format("{:.17g}", s.t);
        for (double c : s.x.coords()) out << fmt::format(",{:.17g}", c);
        out << fmt::format(",{:.17g},{:.17g}\n", field.sample(s.x).value, s.level_residual);
    }
}

} // namespace greenmap
