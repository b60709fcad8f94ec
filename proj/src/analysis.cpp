#include "greenmap/analysis.hpp"

#include "greenmap/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace greenmap {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFloor = 1e-300;

void require_metric_shape(const Matrix& c)
{
    const auto n = c.rows();
    if (c.cols() != n || (n != 2 && n != 3))
        throw ArgumentError(fmt::format("expected a 2x2 or 3x3 matrix, got {}x{}", c.rows(), c.cols()));
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(c(i, j) - c(j, i)) > 1e-10 * scale)
                throw ArgumentError("matrix is not symmetric");
    if (!c.allFinite()) throw ArgumentError("matrix has non-finite entries");
}

double det3(const Matrix& c)
{
    return c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) - c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0))
           + c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0));
}

double determinant(const Matrix& c)
{
    return c.rows() == 2 ? c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0) : det3(c);
}

// Sum of the principal 2x2 minors of a 3x3 matrix.
double second_invariant(const Matrix& c)
{
    return c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0) + c(0, 0) * c(2, 2) - c(0, 2) * c(2, 0) + c(1, 1) * c(2, 2)
           - c(1, 2) * c(2, 1);
}

std::vector<double> raw_eigenvalues2(const Matrix& c)
{
    const double m = 0.5 * (c(0, 0) + c(1, 1));
    const double r = std::hypot(0.5 * (c(0, 0) - c(1, 1)), 0.5 * (c(0, 1) + c(1, 0)));
    const double l1 = m + r;
    double l2 = m - r;
    // The small eigenvalue from the determinant keeps its relative accuracy.
    if (l1 > 0.0 && std::abs(l2) < 1e-2 * l1) l2 = determinant(c) / l1;
    return {l1, l2};
}

std::vector<double> raw_eigenvalues3(const Matrix& a)
{
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = a.trace() / 3.0;
    std::vector<double> l;
    if (p1 <= 1e-300 * std::max(1.0, q * q)) {
        l = {a(0, 0), a(1, 1), a(2, 2)};
        std::sort(l.begin(), l.end(), std::greater<>());
        return l;
    }
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q)
                      + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
    const double r = std::clamp(det3(b) / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double l1 = q + 2.0 * p * std::cos(phi);
    double l3 = q + 2.0 * p * std::cos(phi + kTwoPi / 3.0);
    double l2 = 3.0 * q - l1 - l3;
    if (l1 > 0.0 && l2 > 0.0 && std::abs(l3) < 1e-2 * l1) {
        l3 = det3(a) / (l1 * l2);
        l2 = 3.0 * q - l1 - l3;
    }
    return {l1, l2, l3};
}

} // namespace

Matrix numeric_jacobian(const PointMap& map, const Point& x, double step)
{
    const int n = x.dim();
    const double h = step > 0.0 ? step : std::max(1e-5 * x.norm(), 1e-8);
    Matrix j(n, n);
    auto probe = [&](const Point& p) {
        try {
            Point v = map(p);
            if (v.dim() != n) throw ArgumentError("map changes the dimension");
            return v;
        } catch (const ProbeError&) {
            throw;
        } catch (const std::exception& e) {
            throw ProbeError(fmt::format("map evaluation failed: {}", e.what()), p);
        }
    };
    for (int col = 0; col < n; ++col) {
        const Point e = Point::unit(n, col) * h;
        const Point d = (probe(x + e) - probe(x - e)) / (2.0 * h);
        for (int row = 0; row < n; ++row) j(row, col) = d[row];
    }
    return j;
}

Matrix metric_tensor(const Matrix& jacobian) { return jacobian.transpose() * jacobian; }

std::vector<double> symmetric_eigenvalues(const Matrix& c)
{
    require_metric_shape(c);
    std::vector<double> l = c.rows() == 2 ? raw_eigenvalues2(c) : raw_eigenvalues3(c);
    const double scale = std::max(std::abs(l.front()), kFloor);
    for (double& v : l) {
        if (v < 0.0) {
            if (v < -1e-12 * scale) throw ArgumentError("matrix is not positive semidefinite");
            v = 0.0;
        }
    }
    return l;
}

double conformal_residual(const Matrix& c)
{
    require_metric_shape(c);
    const double tr = c.trace();
    if (c.rows() == 2) return std::abs(4.0 * determinant(c) - tr * tr) / std::max(tr * tr, kFloor);
    const double tr3 = tr * tr * tr;
    return std::abs(27.0 * det3(c) - tr3) / std::max(tr3, kFloor);
}

Matrix embed_planar_metric(const Matrix& c2)
{
    require_metric_shape(c2);
    if (c2.rows() != 2) throw ArgumentError("embed_planar_metric expects a 2x2 matrix");
    Matrix c = Matrix::Zero(3, 3);
    c.topLeftCorner(2, 2) = c2;
    c(2, 2) = std::sqrt(std::max(determinant(c2), 0.0));
    return c;
}

WeakConformalResidual weak_conformal_residuals(const Matrix& c_in)
{
    require_metric_shape(c_in);
    const Matrix c = c_in.rows() == 2 ? embed_planar_metric(c_in) : c_in;
    const double e1 = c.trace();
    const double e2 = second_invariant(c);
    const double e3 = det3(c);
    const double lhs = 8.0 * e2 * e2 * e2; // (tr^2 - |C|^2)^3
    const double rhs = 8.0 * e3 * e1 * e1 * e1;
    WeakConformalResidual r;
    r.polynomial = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), kFloor});
    const auto l = symmetric_eigenvalues(c);
    r.progression = std::abs(l[0] * l[2] - l[1] * l[1]) / std::max(l[1] * l[1], kFloor);
    return r;
}

double weak_conformal_residual(const Matrix& c) { return weak_conformal_residuals(c).polynomial; }

double dilatation(const Matrix& c)
{
    const auto l = symmetric_eigenvalues(c);
    if (!(l.back() > 0.0)) throw DegeneracyError("metric has a zero eigenvalue");
    return std::sqrt(l.front() / l.back());
}

std::string_view to_string(MapClass kind)
{
    switch (kind) {
    case MapClass::conformal: return "conformal";
    case MapClass::weak_conformal: return "weak-conformal";
    case MapClass::quasi_conformal: return "quasi-conformal";
    case MapClass::general: return "general";
    }
    return "general";
}

std::string Classification::label() const
{
    if (kind == MapClass::quasi_conformal) return fmt::format("quasi-conformal({:.6g})", dilatation);
    return std::string(to_string(kind));
}

Classification classify(const Matrix& c, double tol)
{
    Classification out;
    const auto l = symmetric_eigenvalues(c);
    if (!(l.back() > 0.0)) {
        out.kind = MapClass::general;
        out.dilatation = std::numeric_limits<double>::infinity();
        return out;
    }
    out.dilatation = std::sqrt(l.front() / l.back());
    if (conformal_residual(c) < tol)
        out.kind = MapClass::conformal;
    else if (weak_conformal_residual(c) < tol)
        out.kind = MapClass::weak_conformal;
    else
        out.kind = MapClass::quasi_conformal;
    return out;
}

MetricReport metric_report(const Matrix& jacobian, double tol)
{
    MetricReport r;
    r.jacobian = jacobian;
    r.metric = metric_tensor(jacobian);
    r.eigenvalues = symmetric_eigenvalues(r.metric);
    r.trace = r.metric.trace();
    r.determinant = determinant(r.metric);
    r.frobenius_sq = r.metric.squaredNorm();
    r.conformal_residual = conformal_residual(r.metric);
    const auto weak = weak_conformal_residuals(r.metric);
    r.weak_conformal_residual = weak.polynomial;
    r.progression_residual = weak.progression;
    r.classification = classify(r.metric, tol);
    r.dilatation = r.classification.dilatation;
    return r;
}

MetricReport metric_report_at(const PointMap& map, const Point& x, double tol, double step)
{
    return metric_report(numeric_jacobian(map, x, step), tol);
}

double lemma3_constant(int dim, double r) { return dim == 2 ? 1.0 / (2.0 * r) : 1.0 / (4.0 * r); }

Lemma3Report lemma3_check(const ScalarField& u, const Point& x0, double r, int n_probe)
{
    const int dim = x0.dim();
    if (!(r > 0.0)) throw ConfigError("lemma3_check needs a positive radius");
    if (n_probe < 3) throw ConfigError("lemma3_check needs at least 3 probes");

    Point best;
    double best_value = std::numeric_limits<double>::infinity();
    if (dim == 2) {
        auto at = [&](double theta) { return x0 + Point(std::cos(theta), std::sin(theta)) * r; };
        int k_best = 0;
        for (int k = 0; k < n_probe; ++k) {
            const double v = u(at(kTwoPi * k / n_probe));
            if (v < best_value) {
                best_value = v;
                k_best = k;
            }
        }
        // Golden-section search around the best probe.
        const double width = kTwoPi / n_probe;
        double a = kTwoPi * k_best / n_probe - width;
        double b = kTwoPi * k_best / n_probe + width;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - g * (b - a);
        double d = a + g * (b - a);
        double fc = u(at(c));
        double fd = u(at(d));
        for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = u(at(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = u(at(d));
            }
        }
        best = at(kTwoPi * k_best / n_probe);
        const Point refined = at(0.5 * (a + b));
        const double v = u(refined);
        if (v < best_value) {
            best_value = v;
            best = refined;
        }
    } else {
        const auto dirs = fibonacci_directions(n_probe);
        Point dir = dirs.front();
        for (const auto& d : dirs) {
            const double v = u(x0 + d * r);
            if (v < best_value) {
                best_value = v;
                dir = d;
            }
        }
        // Pattern search on the sphere in a tangent frame.
        double step = std::sqrt(4.0 * std::numbers::pi / n_probe);
        while (step > 1e-11) {
            const Point helper = std::abs(dir[0]) < 0.9 ? Point::unit(3, 0) : Point::unit(3, 1);
            const Point e1 = cross(dir, helper).normalized();
            const Point e2 = cross(dir, e1);
            bool moved = false;
            for (const Point& e : {e1, e1 * -1.0, e2, e2 * -1.0}) {
                const Point cand = (dir + e * step).normalized();
                const double v = u(x0 + cand * r);
                if (v < best_value) {
                    best_value = v;
                    dir = cand;
                    moved = true;
                    break;
                }
            }
            if (!moved) step *= 0.5;
        }
        best = x0 + dir * r;
    }

    const double h = 1e-5 * r;
    Point grad = Point::zero(dim);
    for (int i = 0; i < dim; ++i) {
        const Point e = Point::unit(dim, i) * h;
        grad[i] = (u(best + e) - u(best - e)) / (2.0 * h);
    }
    Lemma3Report rep;
    rep.minimizer = best;
    rep.lhs = grad.norm();
    rep.rhs = lemma3_constant(dim, r) * (u(x0) - best_value);
    rep.margin = rep.lhs - rep.rhs;
    rep.passed = rep.margin >= -1e-6 * std::max(1.0, std::abs(rep.rhs));
    return rep;
}

void HarmonicPolynomial::add_term(std::complex<double> coeff, const std::array<std::complex<double>, 3>& axis,
                                  int degree)
{
    if (degree < 0) throw ConfigError("harmonic term degree must be nonnegative");
    std::complex<double> self{};
    for (int i = 0; i < dim_; ++i) self += axis[i] * axis[i];
    double size = 0.0;
    for (int i = 0; i < dim_; ++i) size += std::norm(axis[i]);
    if (degree >= 2 && std::abs(self) > 1e-12 * std::max(size, 1e-300))
        throw ConfigError("harmonic term axis must be a complex null vector");
    terms_.push_back({coeff, axis, degree});
}

void HarmonicPolynomial::add_power(std::complex<double> coeff, int degree)
{
    if (dim_ != 2) throw ConfigError("add_power is planar");
    add_term(coeff, {std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 1.0), 0.0}, degree);
}

int HarmonicPolynomial::degree() const
{
    int d = 0;
    for (const auto& t : terms_) d = std::max(d, t.degree);
    return d;
}

double HarmonicPolynomial::value(const Point& x) const
{
    double v = constant_;
    for (const auto& t : terms_) {
        std::complex<double> s{};
        for (int i = 0; i < dim_; ++i) s += t.axis[i] * x[i];
        v += std::real(t.coeff * std::pow(s, t.degree));
    }
    return v;
}

Point HarmonicPolynomial::gradient(const Point& x) const
{
    Point g = Point::zero(dim_);
    for (const auto& t : terms_) {
        if (t.degree == 0) continue;
        std::complex<double> s{};
        for (int i = 0; i < dim_; ++i) s += t.axis[i] * x[i];
        const std::complex<double> f = t.coeff * static_cast<double>(t.degree) * std::pow(s, t.degree - 1);
        for (int i = 0; i < dim_; ++i) g[i] += std::real(f * t.axis[i]);
    }
    return g;
}

double HarmonicPolynomial::laplacian(const Point& x, double h) const
{
    double lap = 0.0;
    const double v0 = value(x);
    for (int i = 0; i < dim_; ++i) {
        const Point e = Point::unit(dim_, i) * h;
        lap += (value(x + e) - 2.0 * v0 + value(x - e)) / (h * h);
    }
    return lap;
}

ScalarField HarmonicPolynomial::as_field() const
{
    return [p = *this](const Point& x) { return p.value(x); };
}

HarmonicPolynomial HarmonicPolynomial::random(int dim, int max_degree, std::mt19937_64& rng)
{
    if (dim != 2 && dim != 3) throw ConfigError("dimension must be 2 or 3");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick(std::min(1, std::max(max_degree, 0)), std::max(max_degree, 0));
    HarmonicPolynomial p(dim, normal(rng));
    const int degree = pick(rng);
    for (int k = 1; k <= degree; ++k) {
        const int copies = dim == 2 ? 1 : 2;
        for (int c = 0; c < copies; ++c) {
            const std::complex<double> coeff(normal(rng), normal(rng));
            if (dim == 2) {
                p.add_power(coeff, k);
                continue;
            }
            // a = u + i v with u, v orthonormal is a null vector.
            Point u(normal(rng), normal(rng), normal(rng));
            Point w(normal(rng), normal(rng), normal(rng));
            u = u.normalized();
            w = (w - u * dot(u, w)).normalized();
            p.add_term(coeff, {std::complex<double>(u[0], w[0]), std::complex<double>(u[1], w[1]),
                               std::complex<double>(u[2], w[2])}, k);
        }
    }
    return p;
}

ScanResult critical_point_scan(const GradientField& gradient, const Predicate& inside, const Point& pole,
                               const std::vector<Point>& grid, double pole_exclusion, double length_scale)
{
    ScanResult res;
    res.grid_size = grid.size();
    res.min_grad = std::numeric_limits<double>::infinity();
    res.argmin = pole;
    for (const auto& p : grid) {
        if (distance(p, pole) < pole_exclusion || !inside(p)) continue;
        ++res.evaluated;
        const double g = gradient(p).norm();
        if (g < res.min_grad) {
            res.min_grad = g;
            res.argmin = p;
        }
    }
    if (res.evaluated == 0) return res;

    // Trust-region Newton on grad G = 0 from the grid minimizer.
    const int dim = pole.dim();
    const Point start = res.argmin;
    Point x = start;
    Point g = gradient(x);
    double radius = 0.05 * length_scale;
    const double h = 1e-6 * length_scale;
    for (int it = 0; it < 100 && radius > 1e-13 * length_scale; ++it) {
        Eigen::MatrixXd hess(dim, dim);
        for (int i = 0; i < dim; ++i) {
            const Point e = Point::unit(dim, i) * h;
            const Point d = (gradient(x + e) - gradient(x - e)) / (2.0 * h);
            for (int j = 0; j < dim; ++j) hess(j, i) = d[j];
        }
        hess = 0.5 * (hess + hess.transpose()).eval();
        Eigen::VectorXd rhs(dim);
        for (int i = 0; i < dim; ++i) rhs(i) = -g[i];
        const Eigen::VectorXd s = hess.completeOrthogonalDecomposition().solve(rhs);
        Point step = Point::zero(dim);
        for (int i = 0; i < dim; ++i) step[i] = s(i);
        if (!step.is_finite()) break;
        if (step.norm() > radius) step = step * (radius / step.norm());
        const Point cand = x + step;
        if (!inside(cand) || distance(cand, pole) < pole_exclusion) {
            radius *= 0.5;
            continue;
        }
        const Point gc = gradient(cand);
        if (gc.norm() < g.norm()) {
            const double moved = step.norm();
            x = cand;
            g = gc;
            radius = std::min(2.0 * radius, 0.1 * length_scale);
            if (moved < 1e-14 * length_scale) break;
        } else {
            radius *= 0.5;
        }
    }
    // Only a converged zero of the gradient replaces the grid minimum.
    if (g.norm() <= 1e-3 * res.min_grad && distance(x, start) <= 0.25 * length_scale) {
        res.min_grad = g.norm();
        res.argmin = x;
        res.refined = true;
    }
    return res;
}

ScanResult critical_point_scan(const GreenField& field, const std::vector<Point>& grid, double pole_exclusion)
{
    const DomainSpec& spec = field.spec();
    return critical_point_scan([&](const Point& p) { return field.sample(p).gradient; },
                               [&](const Point& p) { return spec.contains(p); }, field.pole(), grid,
                               pole_exclusion, spec.diameter());
}

AnnulusFixture::AnnulusFixture(int collocation) : pole_(1.5, 0.0)
{
    if (collocation < 16) throw ConfigError("annulus fixture needs at least 16 collocation points per circle");
    const int n = collocation;
    const int m = n / 2;
    for (int j = 0; j < m; ++j) {
        const double th = kTwoPi * (j + 0.5) / m;
        sources_.emplace_back(0.8 * std::cos(th), 0.8 * std::sin(th));
    }
    for (int j = 0; j < m; ++j) {
        const double th = kTwoPi * (j + 0.5) / m;
        sources_.emplace_back(2.4 * std::cos(th), 2.4 * std::sin(th));
    }
    auto collocation_points = [](int count, double shift) {
        std::vector<Point> pts;
        for (double radius : {1.0, 2.0})
            for (int k = 0; k < count; ++k) {
                const double th = kTwoPi * (k + shift) / count;
                pts.emplace_back(radius * std::cos(th), radius * std::sin(th));
            }
        return pts;
    };
    const auto pts = collocation_points(n, 0.0);
    const Eigen::Index rows = static_cast<Eigen::Index>(pts.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(sources_.size()) + 1;
    Eigen::MatrixXd a(rows, cols);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j + 1 < cols; ++j) a(i, j) = fundamental_solution(pts[i] - sources_[j]);
        a(i, cols - 1) = 1.0;
        b(i) = -fundamental_solution(pts[i] - pole_);
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const Eigen::VectorXd sol = svd.solve(b);
    charges_ = sol.head(cols - 1);
    constant_ = sol(cols - 1);
    for (const auto& p : collocation_points(4 * n, 0.5)) residual_ = std::max(residual_, std::abs(value(p)));
}

bool AnnulusFixture::contains(const Point& x) const
{
    const double r = x.norm();
    return r > inner_radius() + 1e-12 && r < outer_radius() - 1e-12;
}

double AnnulusFixture::value(const Point& x) const
{
    double v = fundamental_solution(x - pole_) + constant_;
    for (std::size_t j = 0; j < sources_.size(); ++j)
        v += charges_(static_cast<Eigen::Index>(j)) * fundamental_solution(x - sources_[j]);
    return v;
}

Point AnnulusFixture::gradient(const Point& x) const
{
    auto kernel_grad = [](const Point& d) { return d * (-1.0 / (kTwoPi * d.norm_sq())); };
    Point g = kernel_grad(x - pole_);
    for (std::size_t j = 0; j < sources_.size(); ++j)
        g += kernel_grad(x - sources_[j]) * charges_(static_cast<Eigen::Index>(j));
    return g;
}

double AnnulusFixture::boundary_flux_total(int n) const
{
    double total = 0.0;
    for (double radius : {inner_radius(), outer_radius()}) {
        const double sign = radius == outer_radius() ? 1.0 : -1.0;
        for (int k = 0; k < n; ++k) {
            const double th = kTwoPi * k / n;
            const Point u(std::cos(th), std::sin(th));
            total += sign * dot(gradient(u * radius), u) * radius * kTwoPi / n;
        }
    }
    return total;
}

std::vector<Point> AnnulusFixture::grid(int n_radial, int n_angular) const
{
    std::vector<Point> pts;
    for (int i = 0; i < n_radial; ++i) {
        const double r = inner_radius() + (outer_radius() - inner_radius()) * (i + 0.5) / n_radial;
        for (int j = 0; j < n_angular; ++j) {
            const double th = kTwoPi * j / n_angular;
            pts.emplace_back(r * std::cos(th), r * std::sin(th));
        }
    }
    return pts;
}

ScanResult AnnulusFixture::scan(const std::vector<Point>& grid, double pole_exclusion) const
{
    return critical_point_scan([this](const Point& p) { return gradient(p); },
                               [this](const Point& p) { return contains(p); }, pole_, grid, pole_exclusion,
                               2.0 * outer_radius());
}

} // namespace greenmap
