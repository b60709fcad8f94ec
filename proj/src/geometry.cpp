#include "greenmap/geometry.hpp"

#include "greenmap/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace greenmap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBoundaryCollar = 1e-12;

// P_l^m(cos theta) (no Condon-Shortley phase), its theta-derivative, and
// P_l^m / sin(theta) for m >= 1. The recurrence is differentiated alongside
// so the derivative is exact and the quotient is regular at the poles.
struct LegendreJet {
    double p = 0.0;
    double dp = 0.0;
    double p_over_sin = 0.0;
};

LegendreJet associated_legendre(int l, int m, double theta)
{
    const double x = std::cos(theta);
    const double s = std::sin(theta);

    double dfact = 1.0; // (2m-1)!!
    for (int k = 1; k <= 2 * m - 1; k += 2) dfact *= k;

    LegendreJet mm;
    mm.p = dfact * std::pow(s, m);
    mm.dp = m == 0 ? 0.0 : dfact * m * std::pow(s, m - 1) * x;
    mm.p_over_sin = m == 0 ? 0.0 : dfact * std::pow(s, m - 1);
    if (l == m) return mm;

    LegendreJet next;
    next.p = x * (2 * m + 1) * mm.p;
    next.dp = (2 * m + 1) * (-s * mm.p + x * mm.dp);
    next.p_over_sin = x * (2 * m + 1) * mm.p_over_sin;

    LegendreJet prev = mm;
    LegendreJet cur = next;
    for (int k = m + 2; k <= l; ++k) {
        LegendreJet nxt;
        const double a = 2.0 * k - 1.0;
        const double b = k + m - 1.0;
        const double c = k - m;
        nxt.p = (a * x * cur.p - b * prev.p) / c;
        nxt.dp = (a * (-s * cur.p + x * cur.dp) - b * prev.dp) / c;
        nxt.p_over_sin = (a * x * cur.p_over_sin - b * prev.p_over_sin) / c;
        prev = cur;
        cur = nxt;
    }
    return cur;
}

double harmonic_norm(int l, int m)
{
    // sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!), times sqrt(2) for the real m != 0 harmonics.
    double ratio = 1.0;
    for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
    double n = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
    return m == 0 ? n : n * std::numbers::sqrt2;
}

Point direction_2d(double theta) { return {std::cos(theta), std::sin(theta)}; }

Point direction_3d(double theta, double phi)
{
    const double s = std::sin(theta);
    return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

Point e_theta(double theta, double phi)
{
    const double c = std::cos(theta);
    return {c * std::cos(phi), c * std::sin(phi), -std::sin(theta)};
}

Point e_phi(double phi) { return {-std::sin(phi), std::cos(phi), 0.0}; }

void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(fmt::format("{} must be positive and finite", what));
}

void require_dim(const Point& c, int dim, const char* kind)
{
    if (c.dim() != dim) throw ConfigError(fmt::format("{} requires a {}D center", kind, dim));
    if (!c.is_finite()) throw ConfigError("domain center must be finite");
}

} // namespace

std::string_view to_string(DomainKind kind)
{
    switch (kind) {
    case DomainKind::circle: return "circle";
    case DomainKind::ellipse: return "ellipse";
    case DomainKind::fourier_curve: return "fourier-curve";
    case DomainKind::sphere: return "sphere";
    case DomainKind::ellipsoid: return "ellipsoid";
    case DomainKind::spherical_harmonic: return "spherical-harmonic-surface";
    }
    return "unknown";
}

DomainKind domain_kind_from_string(std::string_view name)
{
    for (auto k : {DomainKind::circle, DomainKind::ellipse, DomainKind::fourier_curve, DomainKind::sphere,
                   DomainKind::ellipsoid, DomainKind::spherical_harmonic}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError(fmt::format("unknown domain kind '{}'", name));
}

DomainSpec DomainSpec::circle(Point center, double radius)
{
    require_dim(center, 2, "circle");
    require_positive(radius, "circle radius");
    DomainSpec s;
    s.kind_ = DomainKind::circle;
    s.center_ = center;
    s.base_ = radius;
    s.finalize();
    return s;
}

DomainSpec DomainSpec::ellipse(Point center, double semi_x, double semi_y)
{
    require_dim(center, 2, "ellipse");
    require_positive(semi_x, "ellipse semi-axis");
    require_positive(semi_y, "ellipse semi-axis");
    DomainSpec s;
    s.kind_ = DomainKind::ellipse;
    s.center_ = center;
    s.axes_ = {semi_x, semi_y};
    s.base_ = std::min(semi_x, semi_y);
    s.finalize();
    return s;
}

DomainSpec DomainSpec::fourier_curve(Point center, double base_radius, std::vector<double> cos_coeffs,
                                     std::vector<double> sin_coeffs)
{
    require_dim(center, 2, "fourier-curve");
    require_positive(base_radius, "base radius");
    for (double c : cos_coeffs)
        if (!std::isfinite(c)) throw ConfigError("fourier coefficients must be finite");
    for (double c : sin_coeffs)
        if (!std::isfinite(c)) throw ConfigError("fourier coefficients must be finite");
    DomainSpec s;
    s.kind_ = DomainKind::fourier_curve;
    s.center_ = center;
    s.base_ = base_radius;
    s.cos_ = std::move(cos_coeffs);
    s.sin_ = std::move(sin_coeffs);
    s.finalize();
    return s;
}

DomainSpec DomainSpec::sphere(Point center, double radius)
{
    require_dim(center, 3, "sphere");
    require_positive(radius, "sphere radius");
    DomainSpec s;
    s.kind_ = DomainKind::sphere;
    s.center_ = center;
    s.base_ = radius;
    s.finalize();
    return s;
}

DomainSpec DomainSpec::ellipsoid(Point center, double semi_x, double semi_y, double semi_z)
{
    require_dim(center, 3, "ellipsoid");
    require_positive(semi_x, "ellipsoid semi-axis");
    require_positive(semi_y, "ellipsoid semi-axis");
    require_positive(semi_z, "ellipsoid semi-axis");
    DomainSpec s;
    s.kind_ = DomainKind::ellipsoid;
    s.center_ = center;
    s.axes_ = {semi_x, semi_y, semi_z};
    s.base_ = std::min({semi_x, semi_y, semi_z});
    s.finalize();
    return s;
}

DomainSpec DomainSpec::spherical_harmonic(Point center, double base_radius, std::vector<HarmonicTerm> terms)
{
    require_dim(center, 3, "spherical-harmonic-surface");
    require_positive(base_radius, "base radius");
    for (const auto& t : terms) {
        if (t.degree < 0 || std::abs(t.order) > t.degree)
            throw ConfigError(fmt::format("invalid harmonic index (l={}, m={})", t.degree, t.order));
        if (!std::isfinite(t.coeff)) throw ConfigError("harmonic coefficients must be finite");
    }
    DomainSpec s;
    s.kind_ = DomainKind::spherical_harmonic;
    s.center_ = center;
    s.base_ = base_radius;
    s.terms_ = std::move(terms);
    s.finalize();
    return s;
}

void DomainSpec::finalize()
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    auto visit = [&](double r) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    };
    switch (kind_) {
    case DomainKind::circle:
    case DomainKind::sphere: visit(base_); break;
    case DomainKind::ellipse:
    case DomainKind::ellipsoid:
        for (double a : axes_) visit(a);
        break;
    case DomainKind::fourier_curve:
        for (int i = 0; i < 4096; ++i) visit(radial_jet(2.0 * kPi * i / 4096.0, 0.0).r);
        break;
    case DomainKind::spherical_harmonic:
        for (int i = 0; i <= 96; ++i)
            for (int j = 0; j < 192; ++j) visit(radial_jet(kPi * i / 96.0, 2.0 * kPi * j / 192.0).r);
        break;
    }
    if (!(lo > 0.0)) throw ConfigError("radial boundary function must stay positive (domain not star-shaped)");
    min_radius_ = lo;
    max_radius_ = hi;
}

bool DomainSpec::is_round() const
{
    switch (kind_) {
    case DomainKind::circle:
    case DomainKind::sphere: return true;
    case DomainKind::ellipse:
    case DomainKind::ellipsoid:
        return std::all_of(axes_.begin(), axes_.end(), [&](double a) { return a == axes_.front(); });
    case DomainKind::fourier_curve:
        return std::all_of(cos_.begin(), cos_.end(), [](double c) { return c == 0.0; })
            && std::all_of(sin_.begin(), sin_.end(), [](double c) { return c == 0.0; });
    case DomainKind::spherical_harmonic:
        return std::all_of(terms_.begin(), terms_.end(), [](const HarmonicTerm& t) { return t.coeff == 0.0; });
    }
    return false;
}

DomainSpec::RadialJet DomainSpec::radial_jet(double theta, double phi) const
{
    RadialJet j;
    j.r = base_;
    if (kind_ == DomainKind::fourier_curve) {
        const std::size_t n = std::max(cos_.size(), sin_.size());
        for (std::size_t i = 0; i < n; ++i) {
            const double k = static_cast<double>(i + 1);
            const double a = i < cos_.size() ? cos_[i] : 0.0;
            const double b = i < sin_.size() ? sin_[i] : 0.0;
            const double c = std::cos(k * theta);
            const double s = std::sin(k * theta);
            j.r += a * c + b * s;
            j.r_theta += k * (-a * s + b * c);
        }
    } else if (kind_ == DomainKind::spherical_harmonic) {
        for (const auto& t : terms_) {
            const int m = std::abs(t.order);
            const LegendreJet lp = associated_legendre(t.degree, m, theta);
            const double n = harmonic_norm(t.degree, m) * t.coeff;
            double trig = 1.0;
            double dtrig = 0.0;
            if (t.order > 0) {
                trig = std::cos(m * phi);
                dtrig = -m * std::sin(m * phi);
            } else if (t.order < 0) {
                trig = std::sin(m * phi);
                dtrig = m * std::cos(m * phi);
            }
            j.r += n * lp.p * trig;
            j.r_theta += n * lp.dp * trig;
            if (m > 0) j.r_phi_over_sin += n * lp.p_over_sin * dtrig;
        }
    }
    return j;
}

Point DomainSpec::boundary_point(BoundaryParam param) const
{
    const double th = param.theta;
    const double ph = param.phi;
    switch (kind_) {
    case DomainKind::circle:
    case DomainKind::fourier_curve: return center_ + radial_jet(th, 0.0).r * direction_2d(th);
    case DomainKind::ellipse: return center_ + Point(axes_[0] * std::cos(th), axes_[1] * std::sin(th));
    case DomainKind::sphere:
    case DomainKind::spherical_harmonic: return center_ + radial_jet(th, ph).r * direction_3d(th, ph);
    case DomainKind::ellipsoid: {
        const Point u = direction_3d(th, ph);
        return center_ + Point(axes_[0] * u[0], axes_[1] * u[1], axes_[2] * u[2]);
    }
    }
    return center_;
}

Point DomainSpec::outward_normal(BoundaryParam param) const
{
    const double th = param.theta;
    const double ph = param.phi;
    Point n;
    switch (kind_) {
    case DomainKind::circle:
    case DomainKind::fourier_curve: {
        const RadialJet j = radial_jet(th, 0.0);
        const Point u = direction_2d(th);
        const Point tangent = j.r_theta * u + j.r * Point(-u[1], u[0]);
        n = Point(tangent[1], -tangent[0]);
        break;
    }
    case DomainKind::ellipse: {
        const Point tangent(-axes_[0] * std::sin(th), axes_[1] * std::cos(th));
        n = Point(tangent[1], -tangent[0]);
        break;
    }
    case DomainKind::sphere:
    case DomainKind::spherical_harmonic: {
        const RadialJet j = radial_jet(th, ph);
        n = j.r * direction_3d(th, ph) - j.r_theta * e_theta(th, ph) - j.r_phi_over_sin * e_phi(ph);
        break;
    }
    case DomainKind::ellipsoid: {
        const Point u = direction_3d(th, ph);
        n = Point(u[0] / axes_[0], u[1] / axes_[1], u[2] / axes_[2]);
        break;
    }
    }
    const double len = n.norm();
    if (!(len > 1e-14)) throw ParametrizationError(fmt::format("degenerate boundary tangent at theta={}", th));
    return n / len;
}

double DomainSpec::radius_toward(const Point& u) const
{
    switch (kind_) {
    case DomainKind::circle:
    case DomainKind::sphere: return base_;
    case DomainKind::ellipse: return 1.0 / std::hypot(u[0] / axes_[0], u[1] / axes_[1]);
    case DomainKind::ellipsoid:
        return 1.0 / std::sqrt(u[0] * u[0] / (axes_[0] * axes_[0]) + u[1] * u[1] / (axes_[1] * axes_[1])
                               + u[2] * u[2] / (axes_[2] * axes_[2]));
    case DomainKind::fourier_curve: return radial_jet(std::atan2(u[1], u[0]), 0.0).r;
    case DomainKind::spherical_harmonic:
        return radial_jet(std::acos(std::clamp(u[2], -1.0, 1.0)), std::atan2(u[1], u[0])).r;
    }
    return base_;
}

Point DomainSpec::normal_toward(const Point& u) const
{
    switch (kind_) {
    case DomainKind::circle:
    case DomainKind::sphere: return u;
    case DomainKind::ellipse: {
        const Point p = radius_toward(u) * u;
        return outward_normal({std::atan2(p[1] / axes_[1], p[0] / axes_[0]), 0.0});
    }
    case DomainKind::ellipsoid: {
        const Point p = radius_toward(u) * u;
        return Point(p[0] / (axes_[0] * axes_[0]), p[1] / (axes_[1] * axes_[1]), p[2] / (axes_[2] * axes_[2]))
            .normalized();
    }
    case DomainKind::fourier_curve: return outward_normal({std::atan2(u[1], u[0]), 0.0});
    case DomainKind::spherical_harmonic:
        return outward_normal({std::acos(std::clamp(u[2], -1.0, 1.0)), std::atan2(u[1], u[0])});
    }
    return u;
}

double DomainSpec::boundary_clearance(const Point& p) const
{
    if (p.dim() != dim()) throw ConfigError("point dimension does not match the domain");
    const Point d = p - center_;
    const double rho = d.norm();
    if (rho == 0.0) return min_radius_;
    const Point u = d / rho;
    const double gap = radius_toward(u) - rho;
    return gap * dot(normal_toward(u), u);
}

bool DomainSpec::contains(const Point& p) const
{
    if (!p.is_finite()) return false;
    return boundary_clearance(p) > kBoundaryCollar;
}

std::vector<BoundaryNode> DomainSpec::sample_boundary(int n) const
{
    std::vector<BoundaryNode> nodes;
    if (dim() == 2) {
        if (n < 16) throw ConfigError(fmt::format("sample_boundary needs n >= 16 in 2D (got {})", n));
        nodes.reserve(static_cast<std::size_t>(n));
        const double h = 2.0 * kPi / n;
        for (int k = 0; k < n; ++k) {
            const double th = h * k;
            double speed = 0.0;
            if (kind_ == DomainKind::ellipse) {
                speed = std::hypot(axes_[0] * std::sin(th), axes_[1] * std::cos(th));
            } else {
                const RadialJet j = radial_jet(th, 0.0);
                speed = std::hypot(j.r, j.r_theta);
            }
            nodes.push_back({boundary_point({th, 0.0}), outward_normal({th, 0.0}), speed * h});
        }
        return nodes;
    }

    if (n < 64) throw ConfigError(fmt::format("sample_boundary needs n >= 64 in 3D (got {})", n));
    const int nlat = static_cast<int>(std::ceil(std::sqrt(n / 2.0)));
    const int nlon = 2 * nlat;
    const GaussRule rule = gauss_legendre(nlat);
    nodes.reserve(static_cast<std::size_t>(nlat * nlon));
    const double dphi = 2.0 * kPi / nlon;
    for (int i = 0; i < nlat; ++i) {
        const double th = std::acos(rule.nodes[static_cast<std::size_t>(i)]);
        for (int k = 0; k < nlon; ++k) {
            const double ph = dphi * k;
            // |X_theta x X_phi| / sin(theta)
            double area = 0.0;
            if (kind_ == DomainKind::ellipsoid) {
                const Point xt(axes_[0] * std::cos(th) * std::cos(ph), axes_[1] * std::cos(th) * std::sin(ph),
                               -axes_[2] * std::sin(th));
                const Point xp_over_sin(-axes_[0] * std::sin(ph), axes_[1] * std::cos(ph), 0.0);
                area = cross(xt, xp_over_sin).norm();
            } else {
                const RadialJet j = radial_jet(th, ph);
                area = (j.r * j.r * direction_3d(th, ph) - j.r * j.r_theta * e_theta(th, ph)
                        - j.r * j.r_phi_over_sin * e_phi(ph))
                           .norm();
            }
            nodes.push_back({boundary_point({th, ph}), outward_normal({th, ph}),
                             rule.weights[static_cast<std::size_t>(i)] * dphi * area});
        }
    }
    return nodes;
}

GaussRule gauss_legendre(int n)
{
    if (n < 1) throw ConfigError("gauss_legendre needs n >= 1");
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = x;
        rule.nodes[hi] = -x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n % 2 == 1) {
        // Middle node is exactly zero; fix any Newton residue.
        const auto mid = static_cast<std::size_t>(n / 2);
        rule.nodes[mid] = 0.0;
    }
    return rule;
}

std::vector<Point> fibonacci_directions(int count, double twist)
{
    std::vector<Point> dirs;
    dirs.reserve(static_cast<std::size_t>(std::max(count, 0)));
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double ph = golden * i + twist;
        dirs.emplace_back(r * std::cos(ph), r * std::sin(ph), z);
    }
    return dirs;
}

std::vector<Point> polar_grid(const DomainSpec& spec, int n_radial, int n_angular, double radius_max)
{
    if (spec.dim() != 2) throw ConfigError("polar_grid requires a 2D domain");
    std::vector<Point> pts;
    if (n_radial <= 0 || n_angular <= 0) return pts;
    pts.reserve(static_cast<std::size_t>(n_radial * n_angular));
    for (int i = 0; i < n_radial; ++i) {
        const double s = radius_max * (i + 1.0) / n_radial;
        for (int j = 0; j < n_angular; ++j) {
            const Point u = direction_2d(2.0 * kPi * j / n_angular);
            pts.push_back(spec.center() + s * spec.radius_toward(u) * u);
        }
    }
    return pts;
}

std::vector<Point> spherical_grid(const DomainSpec& spec, int n_radial, int n_polar, int n_azimuth,
                                  double radius_max)
{
    if (spec.dim() != 3) throw ConfigError("spherical_grid requires a 3D domain");
    std::vector<Point> pts;
    if (n_radial <= 0 || n_polar <= 0 || n_azimuth <= 0) return pts;
    pts.reserve(static_cast<std::size_t>(n_radial * n_polar * n_azimuth));
    for (int i = 0; i < n_radial; ++i) {
        const double s = radius_max * (i + 1.0) / n_radial;
        for (int j = 0; j < n_polar; ++j) {
            const double th = kPi * (j + 0.5) / n_polar;
            for (int k = 0; k < n_azimuth; ++k) {
                const Point u = direction_3d(th, 2.0 * kPi * k / n_azimuth);
                pts.push_back(spec.center() + s * spec.radius_toward(u) * u);
            }
        }
    }
    return pts;
}

} // namespace greenmap
