#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "greenmap/errors.hpp"
#include "greenmap/geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace greenmap;
using std::numbers::pi;

namespace {

// Reference arc length of an ellipse by adaptive Gauss-Kronrod.
double ellipse_perimeter(double a, double b)
{
    auto speed = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, 0.0, 2.0 * pi, 15, 1e-14);
}

// Reference surface area of an ellipsoid by nested Gauss-Kronrod in (theta, phi).
double ellipsoid_area(double a, double b, double c)
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    auto inner = [&](double th) {
        auto f = [&](double ph) {
            const double st = std::sin(th), ct = std::cos(th), sp = std::sin(ph), cp = std::cos(ph);
            const double xt[3] = {a * ct * cp, b * ct * sp, -c * st};
            const double xp[3] = {-a * st * sp, b * st * cp, 0.0};
            const double n[3] = {xt[1] * xp[2] - xt[2] * xp[1], xt[2] * xp[0] - xt[0] * xp[2],
                                 xt[0] * xp[1] - xt[1] * xp[0]};
            return std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
        };
        return GK::integrate(f, 0.0, 2.0 * pi, 10, 1e-13);
    };
    return GK::integrate(inner, 0.0, pi, 10, 1e-13);
}

std::vector<DomainSpec> fixtures()
{
    return {
        DomainSpec::circle({0.2, -0.1}, 1.3),
        DomainSpec::ellipse({0, 0}, 2.0, 1.0),
        DomainSpec::fourier_curve({0, 0}, 1.0, {0.0, 0.05, 0.1}, {0.03}),
        DomainSpec::sphere({0, 0, 0}, 1.0),
        DomainSpec::ellipsoid({0.1, 0, 0}, 1.5, 1.0, 0.8),
        DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{2, 0, 0.05}, {3, 2, 0.04}, {1, -1, 0.03}}),
    };
}

BoundaryParam random_param(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> th(0.0, pi);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * pi);
    return {th(rng), ph(rng)};
}

} // namespace

TEST_CASE("point arithmetic and helpers")
{
    const Point a(1.0, 2.0);
    const Point b(3.0, -1.0);
    CHECK((a + b) == Point(4.0, 1.0));
    CHECK(dot(a, b) == doctest::Approx(1.0));
    CHECK(distance(a, b) == doctest::Approx(std::sqrt(13.0)));
    CHECK(cross(Point(1, 0, 0), Point(0, 1, 0)) == Point(0, 0, 1));
    CHECK(angle_between(Point(1, 0), Point(0, 1)) == doctest::Approx(pi / 2));
    CHECK(angle_between(Point(1, 0), Point(1, 1e-12)) == doctest::Approx(1e-12).epsilon(1e-6));
    CHECK(Point::unit(3, 2) == Point(0, 0, 1));
    CHECK(Point(3, 4).normalized() == Point(0.6, 0.8));
}

TEST_CASE("domain kind names round trip")
{
    for (auto k : {DomainKind::circle, DomainKind::ellipse, DomainKind::fourier_curve, DomainKind::sphere,
                   DomainKind::ellipsoid, DomainKind::spherical_harmonic})
        CHECK(domain_kind_from_string(to_string(k)) == k);
    CHECK(to_string(DomainKind::fourier_curve) == "fourier-curve");
    CHECK(to_string(DomainKind::spherical_harmonic) == "spherical-harmonic-surface");
    CHECK_THROWS_AS(domain_kind_from_string("torus"), ConfigError);
}

TEST_CASE("boundary_point parametrization conventions")
{
    const auto circle = DomainSpec::circle({0, 0}, 1.0);
    const Point p0 = circle.boundary_point({0.0, 0.0});
    CHECK(p0[0] == doctest::Approx(1.0));
    CHECK(p0[1] == doctest::Approx(0.0));
    const Point p1 = circle.boundary_point({pi / 2, 0.0});
    CHECK(p1[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p1[1] == doctest::Approx(1.0));
    const Point e = DomainSpec::ellipse({0, 0}, 2.0, 1.0).boundary_point({0.0, 0.0});
    CHECK(e[0] == doctest::Approx(2.0));
    CHECK(e[1] == doctest::Approx(0.0));
    // Parameters wrap modulo the period.
    const Point wrapped = circle.boundary_point({2.0 * pi + 0.3, 0.0});
    const Point base = circle.boundary_point({0.3, 0.0});
    CHECK(distance(wrapped, base) < 1e-14);
}

TEST_CASE("outward normals at axis points")
{
    const Point n1 = DomainSpec::circle({0, 0}, 1.0).outward_normal({0.0, 0.0});
    CHECK(distance(n1, Point(1, 0)) < 1e-15);
    const Point n2 = DomainSpec::sphere({0, 0, 0}, 1.0).outward_normal({0.0, 0.0});
    CHECK(distance(n2, Point(0, 0, 1)) < 1e-15);
    const Point n3 = DomainSpec::ellipse({0, 0}, 2.0, 1.0).outward_normal({0.0, 0.0});
    CHECK(distance(n3, Point(1, 0)) < 1e-15);
}

TEST_CASE("normals are unit and orthogonal to finite-difference tangents")
{
    std::mt19937_64 rng(7);
    for (const auto& spec : fixtures()) {
        for (int k = 0; k < 200; ++k) {
            BoundaryParam p = random_param(rng);
            if (spec.dim() == 2) p = {2.0 * p.theta, 0.0};
            const Point n = spec.outward_normal(p);
            CHECK(std::abs(n.norm() - 1.0) <= 1e-12);
            const double h = 1e-6;
            const Point tt = (spec.boundary_point({p.theta + h, p.phi}) - spec.boundary_point({p.theta - h, p.phi}))
                             / (2 * h);
            CHECK(std::abs(dot(n, tt)) <= 1e-8 * std::max(1.0, tt.norm()));
            if (spec.dim() == 3) {
                const Point tp =
                    (spec.boundary_point({p.theta, p.phi + h}) - spec.boundary_point({p.theta, p.phi - h})) / (2 * h);
                CHECK(std::abs(dot(n, tp)) <= 1e-8 * std::max(1.0, tp.norm()));
            }
            // Outward: moving along n leaves the domain.
            const double eps = 1e-6 * spec.diameter();
            const Point b = spec.boundary_point(p);
            CHECK(spec.contains(b - n * eps));
            CHECK_FALSE(spec.contains(b + n * eps));
        }
    }
}

TEST_CASE("normals stay regular at the poles of a perturbed sphere")
{
    const auto spec = DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{1, 1, 0.05}, {2, -1, 0.04}});
    for (double th : {0.0, 1e-9, pi - 1e-9, pi}) {
        const Point n = spec.outward_normal({th, 0.7});
        CHECK(n.is_finite());
        CHECK(std::abs(n.norm() - 1.0) <= 1e-12);
    }
}

TEST_CASE("contains with the conservative boundary collar")
{
    const auto circle = DomainSpec::circle({0, 0}, 1.0);
    CHECK(circle.contains(Point(0.5, 0)));
    CHECK_FALSE(circle.contains(Point(2, 0)));
    const auto sphere = DomainSpec::sphere({0, 0, 0}, 1.0);
    CHECK_FALSE(sphere.contains(Point(0, 0, 0.999999999999)));
    CHECK(sphere.contains(Point(0, 0, 0.99999999)));
    CHECK_FALSE(circle.contains(Point(std::nan(""), 0)));
    CHECK_THROWS_AS(circle.contains(Point(0, 0, 0)), ConfigError);
}

TEST_CASE("every boundary node separates interior from exterior")
{
    for (const auto& spec : fixtures()) {
        const double eps = 1e-6 * spec.diameter();
        for (const auto& b : spec.sample_boundary(spec.dim() == 2 ? 64 : 200)) {
            CHECK(spec.contains(b.position - b.outward_normal * eps));
            CHECK_FALSE(spec.contains(b.position + b.outward_normal * eps));
            CHECK(b.weight > 0.0);
        }
    }
}

TEST_CASE("sample_boundary counts and trapezoid nodes")
{
    const auto circle = DomainSpec::circle({0, 0}, 1.0);
    CHECK_THROWS_AS(circle.sample_boundary(4), ConfigError);
    CHECK_THROWS_AS(DomainSpec::sphere({0, 0, 0}, 1.0).sample_boundary(63), ConfigError);
    const auto nodes = circle.sample_boundary(16);
    REQUIRE(nodes.size() == 16);
    for (int k = 0; k < 16; ++k) {
        const double th = 2.0 * pi * k / 16;
        CHECK(distance(nodes[static_cast<std::size_t>(k)].position, Point(std::cos(th), std::sin(th))) < 1e-15);
        CHECK(nodes[static_cast<std::size_t>(k)].weight == doctest::Approx(pi / 8).epsilon(1e-14));
    }
    CHECK(DomainSpec::sphere({0, 0, 0}, 1.0).sample_boundary(500).size() >= 500);
}

TEST_CASE("boundary weights sum to length and area")
{
    auto total = [](const std::vector<BoundaryNode>& nodes) {
        double s = 0.0;
        for (const auto& b : nodes) s += b.weight;
        return s;
    };
    for (int n : {16, 37, 128, 1000})
        CHECK(std::abs(total(DomainSpec::circle({0, 0}, 1.0).sample_boundary(n)) - 2 * pi) <= 1e-12);
    CHECK(std::abs(total(DomainSpec::sphere({0, 0, 0}, 1.0).sample_boundary(500)) - 4 * pi) <= 0.01 * 4 * pi);
    CHECK(std::abs(total(DomainSpec::sphere({0, 0, 0}, 1.0).sample_boundary(500)) - 4 * pi) <= 1e-10);
    CHECK(total(DomainSpec::ellipse({0, 0}, 2.0, 1.0).sample_boundary(256))
          == doctest::Approx(ellipse_perimeter(2.0, 1.0)).epsilon(1e-12));
    CHECK(total(DomainSpec::ellipsoid({0, 0, 0}, 1.5, 1.0, 0.8).sample_boundary(4000))
          == doctest::Approx(ellipsoid_area(1.5, 1.0, 0.8)).epsilon(1e-8));
}

TEST_CASE("radial functions of perturbed domains")
{
    const auto blob = DomainSpec::fourier_curve({0.5, 0}, 1.0, {0.0, 0.0, 0.1}, {0.0, 0.02});
    for (double th : {0.0, 0.4, 2.0, 5.0}) {
        const double r = 1.0 + 0.1 * std::cos(3 * th) + 0.02 * std::sin(2 * th);
        const Point expected = Point(0.5, 0) + Point(std::cos(th), std::sin(th)) * r;
        CHECK(distance(blob.boundary_point({th, 0.0}), expected) < 1e-14);
    }
    // Real orthonormal Y_2^0 = sqrt(5/(16 pi)) (3 cos^2 - 1).
    const auto sh = DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{2, 0, 0.1}});
    for (double th : {0.3, 1.0, 2.5}) {
        const double y20 = std::sqrt(5.0 / (16.0 * pi)) * (3 * std::cos(th) * std::cos(th) - 1.0);
        CHECK(sh.boundary_point({th, 0.9}).norm() == doctest::Approx(1.0 + 0.1 * y20).epsilon(1e-14));
    }
    // Y_1^1 = sqrt(3/(4 pi)) sin(theta) cos(phi) and Y_1^-1 with sin(phi), no Condon-Shortley sign.
    const auto sh1 = DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{1, 1, 0.1}, {1, -1, 0.05}});
    const double th = 1.1, ph = 0.4;
    const double expect = 1.0 + std::sqrt(3.0 / (4.0 * pi)) * std::sin(th) * (0.1 * std::cos(ph) + 0.05 * std::sin(ph));
    CHECK(sh1.boundary_point({th, ph}).norm() == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("construction validates shapes")
{
    CHECK_THROWS_AS(DomainSpec::circle({0, 0}, -1.0), ConfigError);
    CHECK_THROWS_AS(DomainSpec::circle({0, 0, 0}, 1.0), ConfigError);
    CHECK_THROWS_AS(DomainSpec::fourier_curve({0, 0}, 1.0, {1.5}, {}), ConfigError);
    CHECK_THROWS_AS(DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{2, 3, 0.1}}), ConfigError);
    CHECK_THROWS_AS(DomainSpec::spherical_harmonic({0, 0, 0}, 0.1, {{2, 0, 1.0}}), ConfigError);
    CHECK(DomainSpec::ellipse({0, 0}, 1.0, 1.0).is_round());
    CHECK_FALSE(DomainSpec::fourier_curve({0, 0}, 1.0, {0.1}, {}).is_round());
    CHECK(DomainSpec::ellipse({0, 0}, 2.0, 1.0).diameter() == doctest::Approx(4.0));
}

TEST_CASE("gauss-legendre rule integrates polynomials exactly")
{
    const GaussRule r = gauss_legendre(8);
    for (int k = 0; k <= 15; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
        const double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-14));
    }
}

TEST_CASE("grids lie inside the domain")
{
    const auto blob = DomainSpec::fourier_curve({0, 0}, 1.0, {0.0, 0.0, 0.1}, {});
    const auto g2 = polar_grid(blob, 16, 16, 0.99);
    CHECK(g2.size() == 256);
    for (const auto& p : g2) CHECK(blob.contains(p));
    const auto sh = DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{2, 0, 0.05}});
    const auto g3 = spherical_grid(sh, 8, 8, 8, 0.99);
    CHECK(g3.size() == 512);
    for (const auto& p : g3) CHECK(sh.contains(p));
    const auto dirs = fibonacci_directions(100);
    CHECK(dirs.size() == 100);
    for (const auto& d : dirs) CHECK(std::abs(d.norm() - 1.0) < 1e-14);
}
