#include "greenmap/mapping.hpp"

#include "greenmap/errors.hpp"
#include "parallel.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace greenmap {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;

void require_dim(const GreenField& field, const Point& x, int dim)
{
    if (field.dim() != dim) throw ConfigError(fmt::format("expected a {}D field, got {}D", dim, field.dim()));
    if (x.dim() != dim) throw ConfigError("point dimension does not match the field");
}

bool in_pole_collar(const GreenField& field, const Point& x)
{
    return distance(x, field.pole()) <= field.pole_collar();
}

MapResult pole_result(const GreenField& field, const Point& x, const FlowSettings& settings)
{
    MapResult r;
    r.source = x;
    r.image = Point::zero(field.dim());
    r.local_scale = pole_scale(field, settings);
    return r;
}

template <class Range, class Get>
InjectivityReport audit(const Range& items, Get get, double source_sep, double image_sep)
{
    InjectivityReport report;
    report.min_normalized_distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const MapResult* a = get(items[i]);
        if (!a) continue;
        for (std::size_t j = i + 1; j < items.size(); ++j) {
            const MapResult* b = get(items[j]);
            if (!b) continue;
            const double ds = distance(a->source, b->source);
            if (ds < source_sep) continue;
            const double di = distance(a->image, b->image);
            ++report.pairs_checked;
            report.min_normalized_distance = std::min(report.min_normalized_distance, di / ds);
            if (di < image_sep) report.flagged.emplace_back(i, j);
        }
    }
    if (report.pairs_checked == 0) report.min_normalized_distance = 0.0;
    return report;
}

} // namespace

MapResult map_point_2d(const GreenField& field, const Point& x, const FlowSettings& settings)
{
    require_dim(field, x, 2);
    if (in_pole_collar(field, x)) return pole_result(field, x, settings);
    const double g = field.value(x);
    const Point grad = field.gradient(x);
    const FlowTrace trace = trace_to_pole(field, x, settings);

    const double modulus = std::exp(-kTwoPi * g);
    MapResult r;
    r.source = x;
    r.image = trace.direction * modulus;
    r.local_scale = kTwoPi * grad.norm() * modulus;
    r.stats.steps = trace.steps;
    r.stats.invariant_residual = trace.max_level_residual();
    return r;
}

MapResult map_point_3d(const GreenField& field, const Point& x, const FlowSettings& settings)
{
    require_dim(field, x, 3);
    if (in_pole_collar(field, x)) return pole_result(field, x, settings);
    const Point grad = field.gradient(x);
    const FlowTrace trace = trace_forward(field, x, settings);
    const double length = weighted_length(field, trace);

    const double modulus = std::exp(-length);
    MapResult r;
    r.source = x;
    r.image = trace.direction * modulus;
    r.local_scale = std::sqrt(kFourPi * grad.norm()) * modulus;
    r.stats.steps = trace.steps;
    r.stats.invariant_residual = trace.max_level_residual();
    r.stats.truncated = trace.truncated;
    if (trace.truncated) r.stats.tail = truncation_tail(field, trace.samples.back().x);
    return r;
}

MapResult map_point(const GreenField& field, const Point& x, const FlowSettings& settings)
{
    return field.dim() == 2 ? map_point_2d(field, x, settings) : map_point_3d(field, x, settings);
}

double pole_scale(const GreenField& field, const FlowSettings& settings)
{
    if (field.dim() == 2) return std::exp(-kTwoPi * field.regular_part_at_pole());
    // The local scale tends to |phi'(y)| linearly in the distance to the pole.
    const double r0 = 1e-3 * field.spec().diameter();
    const Point e = Point::unit(3, 0);
    const double s1 = map_point_3d(field, field.pole() + e * r0, settings).local_scale;
    const double s2 = map_point_3d(field, field.pole() + e * (0.5 * r0), settings).local_scale;
    return 2.0 * s2 - s1;
}

std::vector<MapRecord> map_grid(const GreenField& field, const std::vector<Point>& points,
                                const FlowSettings& settings, int jobs)
{
    std::vector<MapRecord> records(points.size());
    detail::parallel_for(points.size(), jobs, [&](std::size_t i) {
        MapRecord& rec = records[i];
        rec.source = points[i];
        try {
            rec.result = map_point(field, points[i], settings);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });
    return records;
}

InjectivityReport injectivity_audit(const std::vector<MapResult>& results, double source_sep, double image_sep)
{
    return audit(results, [](const MapResult& r) { return &r; }, source_sep, image_sep);
}

InjectivityReport injectivity_audit(const std::vector<MapRecord>& records, double source_sep, double image_sep)
{
    return audit(
        records, [](const MapRecord& r) { return r.result ? &*r.result : nullptr; }, source_sep, image_sep);
}

Point inverse_map(const GreenField& field, const Point& w, const FlowSettings& settings)
{
    const int dim = field.dim();
    if (w.dim() != dim) throw ConfigError("point dimension does not match the field");
    const double rho = w.norm();
    if (!(rho < 1.0)) throw RangeError("inverse_map needs |w| < 1");
    if (rho == 0.0) return field.pole();
    const Point a = w / rho;
    if (dim == 2) return shoot_from_pole(field, a, rho, settings);

    // 3D: walk the trajectory of a until the remaining weighted length is -ln|w|.
    const double target = -std::log(rho);
    const double t_start = settings.t_cut * field.spec().diameter();
    const Point xs = shoot_from_pole(field, a, t_start, settings);
    const double t_stop = flow_parameter(3, settings.eps_trunc);
    const FlowTrace trace = trace_to_level(field, xs, t_stop, settings);
    const auto& s = trace.samples;
    const double total = s.back().weighted_length + truncation_tail(field, s.back().x);

    const double remaining0 = total - s.front().weighted_length;
    if (target >= remaining0) {
        // Inside the start radius the map is linear to leading order.
        return field.pole() + (xs - field.pole()) * std::exp(remaining0 - target);
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double r_hi = total - s[i].weighted_length;
        const double r_lo = total - s[i + 1].weighted_length;
        if (!(target <= r_hi && target >= r_lo)) continue;
        auto f = [&](double tau) {
            const double t = std::exp(tau);
            if (t <= s[i].t) return r_hi - target;
            return r_hi - trace_to_level(field, s[i].x, t, settings).weighted_length - target;
        };
        std::uintmax_t iters = 60;
        const auto [lo, hi] = boost::math::tools::toms748_solve(f, std::log(s[i].t), std::log(s[i + 1].t),
                                                                r_hi - target, r_lo - target,
                                                                boost::math::tools::eps_tolerance<double>(50), iters);
        const double t = std::exp(0.5 * (lo + hi));
        return t <= s[i].t ? s[i].x : trace_to_level(field, s[i].x, t, settings).samples.back().x;
    }
    return s.back().x;
}

} // namespace greenmap
