#include "greenmap/green.hpp"

#include "greenmap/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <cmath>
#include <complex>
#include <numbers>

namespace greenmap {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

// Kernel of the regular-part expansion (same normalization as the fundamental solution).
double kernel(const Point& r)
{
    if (r.dim() == 2) return -std::log(r.norm_sq()) / (2.0 * kTwoPi);
    return 1.0 / (kFourPi * r.norm());
}

Point kernel_gradient(const Point& r)
{
    const double r2 = r.norm_sq();
    if (r.dim() == 2) return r * (-1.0 / (kTwoPi * r2));
    return r * (-1.0 / (kFourPi * r2 * std::sqrt(r2)));
}

std::complex<double> as_complex(const Point& p) { return {p[0], p[1]}; }

// Gradient of Re f for an analytic f is (Re f', -Im f').
Point grad_of_real_part(std::complex<double> fprime) { return {fprime.real(), -fprime.imag()}; }

struct RoundFrame {
    Point center;
    double radius;
};

RoundFrame round_frame(const DomainSpec& spec)
{
    return {spec.center(), spec.radius_toward(Point::unit(spec.dim(), 0))};
}

struct FitResult {
    std::vector<Point> sources;
    std::vector<double> charges;
    double constant = 0.0;
};

FitResult fit_regular_part(const DomainSpec& spec, const Point& pole, int n, const SolverSettings& settings)
{
    const int dim = spec.dim();
    const std::vector<BoundaryNode> nodes = spec.sample_boundary(n);
    const auto rows = static_cast<Eigen::Index>(nodes.size());

    FitResult fit;
    const Point& c = spec.center();
    if (dim == 2) {
        const int m = static_cast<int>(nodes.size()) / 2;
        for (int j = 0; j < m; ++j) {
            const double th = kTwoPi * (j + 0.5) / m;
            fit.sources.push_back(c + settings.dilation * (spec.boundary_point({th, 0.0}) - c));
        }
    } else {
        for (const Point& u : fibonacci_directions(static_cast<int>(nodes.size()) / 2))
            fit.sources.push_back(c + settings.dilation * (spec.boundary_point_toward(u) - c));
    }
    const auto cols = static_cast<Eigen::Index>(fit.sources.size());

    Eigen::MatrixXd a(rows, cols + 1);
    Eigen::VectorXd b(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Point& x = nodes[static_cast<std::size_t>(i)].position;
        for (Eigen::Index j = 0; j < cols; ++j) a(i, j) = kernel(x - fit.sources[static_cast<std::size_t>(j)]);
        a(i, cols) = 1.0;
        b(i) = -fundamental_solution(x - pole);
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(settings.svd_cutoff);
    const Eigen::VectorXd q = svd.solve(b);
    fit.charges.assign(q.data(), q.data() + cols);
    fit.constant = q(cols);
    return fit;
}

std::vector<Point> fresh_boundary_points(const DomainSpec& spec, int n)
{
    std::vector<Point> pts;
    if (spec.dim() == 2) {
        const int count = 4 * n;
        for (int k = 0; k < count; ++k) pts.push_back(spec.boundary_point({kTwoPi * (k + 0.5) / count, 0.0}));
    } else {
        for (const Point& u : fibonacci_directions(4 * n, 0.5)) pts.push_back(spec.boundary_point_toward(u));
    }
    return pts;
}

} // namespace

std::string_view to_string(GreenBackend backend)
{
    switch (backend) {
    case GreenBackend::analytic_disk: return "analytic-disk";
    case GreenBackend::analytic_ball: return "analytic-ball";
    case GreenBackend::mfs: return "mfs";
    }
    return "unknown";
}

GreenBackend green_backend_from_string(std::string_view name)
{
    for (auto b : {GreenBackend::analytic_disk, GreenBackend::analytic_ball, GreenBackend::mfs})
        if (to_string(b) == name) return b;
    throw ConfigError(fmt::format("unknown Green's function backend '{}'", name));
}

double fundamental_solution(const Point& r)
{
    if (r.dim() == 2) return -std::log(r.norm_sq()) / (2.0 * kTwoPi);
    return 1.0 / (kFourPi * r.norm());
}

double GreenField::fundamental(const Point& x) const { return fundamental_solution(x - pole_); }

double GreenField::regular_part(const Point& x) const
{
    switch (backend_) {
    case GreenBackend::analytic_disk: {
        const RoundFrame f = round_frame(*spec_);
        const auto z = as_complex((x - f.center) / f.radius);
        const auto w = as_complex((pole_ - f.center) / f.radius);
        return std::log(f.radius * std::abs(1.0 - std::conj(w) * z)) / kTwoPi;
    }
    case GreenBackend::analytic_ball: {
        const RoundFrame f = round_frame(*spec_);
        const Point z = (x - f.center) / f.radius;
        const Point w = (pole_ - f.center) / f.radius;
        const double rw = w.norm();
        if (rw < 1e-15) return -1.0 / (kFourPi * f.radius);
        const Point v = rw * z - w / rw;
        return -1.0 / (kFourPi * f.radius * v.norm());
    }
    case GreenBackend::mfs: {
        double h = constant_;
        for (std::size_t j = 0; j < sources_.size(); ++j) h += charges_[j] * kernel(x - sources_[j]);
        return h;
    }
    }
    return 0.0;
}

Point GreenField::regular_gradient(const Point& x) const
{
    switch (backend_) {
    case GreenBackend::analytic_disk: {
        const RoundFrame f = round_frame(*spec_);
        const auto z = as_complex((x - f.center) / f.radius);
        const auto w = as_complex((pole_ - f.center) / f.radius);
        return grad_of_real_part(-std::conj(w) / (1.0 - std::conj(w) * z)) / (kTwoPi * f.radius);
    }
    case GreenBackend::analytic_ball: {
        const RoundFrame f = round_frame(*spec_);
        const Point z = (x - f.center) / f.radius;
        const Point w = (pole_ - f.center) / f.radius;
        const double rw = w.norm();
        if (rw < 1e-15) return Point::zero(3);
        const Point v = rw * z - w / rw;
        const double vn = v.norm();
        return v * (rw / (kFourPi * f.radius * f.radius * vn * vn * vn));
    }
    case GreenBackend::mfs: {
        Point g = Point::zero(dim());
        for (std::size_t j = 0; j < sources_.size(); ++j) g += charges_[j] * kernel_gradient(x - sources_[j]);
        return g;
    }
    }
    return Point::zero(dim());
}

FieldSample GreenField::sample(const Point& x) const
{
    if (backend_ == GreenBackend::mfs) {
        // Fused loop over the sources; this is the integrator's hot path.
        const Point r = x - pole_;
        FieldSample s{fundamental_solution(r) + constant_, kernel_gradient(r)};
        if (dim() == 2) {
            for (std::size_t j = 0; j < sources_.size(); ++j) {
                const double dx = x[0] - sources_[j][0];
                const double dy = x[1] - sources_[j][1];
                const double r2 = dx * dx + dy * dy;
                const double q = charges_[j];
                s.value -= q * std::log(r2) / (2.0 * kTwoPi);
                const double f = -q / (kTwoPi * r2);
                s.gradient[0] += f * dx;
                s.gradient[1] += f * dy;
            }
        } else {
            for (std::size_t j = 0; j < sources_.size(); ++j) {
                const double dx = x[0] - sources_[j][0];
                const double dy = x[1] - sources_[j][1];
                const double dz = x[2] - sources_[j][2];
                const double r2 = dx * dx + dy * dy + dz * dz;
                const double inv = 1.0 / std::sqrt(r2);
                const double q = charges_[j] / kFourPi;
                s.value += q * inv;
                const double f = -q * inv * inv * inv;
                s.gradient[0] += f * dx;
                s.gradient[1] += f * dy;
                s.gradient[2] += f * dz;
            }
        }
        return s;
    }
    return {fundamental(x) + regular_part(x), kernel_gradient(x - pole_) + regular_gradient(x)};
}

double GreenField::value(const Point& x) const
{
    if (x.dim() != dim()) throw ConfigError("point dimension does not match the field");
    if (!spec_->contains(x)) throw DomainError(fmt::format("point ({}) is not interior", fmt::join(x.coords(), ", ")));
    if (distance(x, pole_) <= pole_collar()) throw SingularityError("evaluation inside the pole collar");
    return sample(x).value;
}

Point GreenField::gradient(const Point& x) const
{
    if (x.dim() != dim()) throw ConfigError("point dimension does not match the field");
    if (!spec_->contains(x)) throw DomainError(fmt::format("point ({}) is not interior", fmt::join(x.coords(), ", ")));
    if (distance(x, pole_) <= pole_collar()) throw SingularityError("evaluation inside the pole collar");
    return sample(x).gradient;
}

double GreenField::boundary_flux_total() const
{
    auto flux_at = [&](int n) {
        double total = 0.0;
        for (const auto& node : spec_->sample_boundary(n))
            total += node.weight * dot(sample(node.position).gradient, node.outward_normal);
        return total;
    };
    int n = dim() == 2 ? 512 : 2048;
    const int cap = dim() == 2 ? 65536 : 80000;
    double coarse = flux_at(n);
    double diff = 0.0;
    while (true) {
        const int finer = 2 * n;
        const double fine = flux_at(finer);
        diff = std::abs(fine - coarse);
        if (diff <= 1e-10) return fine;
        if (finer * 2 > cap) break;
        n = finer;
        coarse = fine;
    }
    throw ConvergenceError(fmt::format("boundary flux quadrature did not settle (change {:.3e})", diff), diff);
}

GreenField GreenField::from_parts(DomainSpec spec, Point pole, GreenBackend backend, std::vector<Point> sources,
                                  std::vector<double> charges, double constant, double residual)
{
    if (pole.dim() != spec.dim()) throw ConfigError("pole dimension does not match the domain");
    if (sources.size() != charges.size()) throw ConfigError("source and charge counts differ");
    for (const Point& s : sources)
        if (s.dim() != spec.dim()) throw ConfigError("source dimension does not match the domain");
    if (backend == GreenBackend::analytic_disk && (spec.dim() != 2 || !spec.is_round()))
        throw ConfigError("analytic-disk backend requires a round 2D domain");
    if (backend == GreenBackend::analytic_ball && (spec.dim() != 3 || !spec.is_round()))
        throw ConfigError("analytic-ball backend requires a round 3D domain");
    if (!spec.contains(pole)) throw DomainError("pole is not interior");
    GreenField f;
    f.spec_ = std::make_shared<const DomainSpec>(std::move(spec));
    f.pole_ = pole;
    f.backend_ = backend;
    f.sources_ = std::move(sources);
    f.charges_ = std::move(charges);
    f.constant_ = constant;
    f.residual_ = residual;
    return f;
}

GreenField solve(const DomainSpec& spec, const Point& pole, const SolverSettings& settings)
{
    const int dim = spec.dim();
    if (pole.dim() != dim) throw ConfigError("pole dimension does not match the domain");
    if (!(settings.dilation > 1.0)) throw ConfigError("source dilation must exceed 1");
    if (!(settings.svd_cutoff > 0.0)) throw ConfigError("svd cutoff must be positive");
    if (!spec.contains(pole) || spec.boundary_clearance(pole) < 1e-3 * spec.diameter())
        throw DomainError("pole must lie inside the domain, at least 1e-3 diameters from the boundary");

    GreenField f;
    f.spec_ = std::make_shared<const DomainSpec>(spec);
    f.pole_ = pole;

    if (spec.is_round() && !settings.force_mfs) {
        f.backend_ = dim == 2 ? GreenBackend::analytic_disk : GreenBackend::analytic_ball;
        double worst = 0.0;
        for (const Point& x : fresh_boundary_points(spec, 64)) worst = std::max(worst, std::abs(f.sample(x).value));
        f.residual_ = worst;
        return f;
    }

    f.backend_ = GreenBackend::mfs;
    const double tol = settings.tolerance_for(dim);
    const int cap = settings.max_collocation_for(dim);
    int n = settings.collocation_for(dim);
    if (n > cap) throw ConfigError("collocation count exceeds the refinement cap");
    double residual = 0.0;
    while (true) {
        FitResult fit = fit_regular_part(spec, pole, n, settings);
        f.sources_ = std::move(fit.sources);
        f.charges_ = std::move(fit.charges);
        f.constant_ = fit.constant;
        residual = 0.0;
        for (const Point& x : fresh_boundary_points(spec, n))
            residual = std::max(residual, std::abs(f.sample(x).value));
        f.residual_ = residual;
        if (residual <= tol) return f;
        if (2 * n > cap) break;
        n *= 2;
    }
    throw ConvergenceError(
        fmt::format("boundary residual {:.3e} above tolerance {:.3e} at {} collocation nodes", residual, tol, n),
        residual);
}

} // namespace greenmap
