#pragma once

#include "greenmap/flow.hpp"
#include "greenmap/green.hpp"
#include "greenmap/point.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace greenmap {

struct TraceStats {
    int steps = 0;
    double invariant_residual = 0.0; // worst |G - target level| along the traces used
    bool truncated = false;
    double tail = 0.0;               // 3D: weighted-length tail added past the truncation level
};

struct MapResult {
    Point source;
    Point image;
    double local_scale = 0.0; // estimated |phi'| at the source
    TraceStats stats;
};

// One entry of a batch: either a result or the reason the point failed.
struct MapRecord {
    Point source;
    std::optional<MapResult> result;
    std::string error;

    bool ok() const { return result.has_value(); }
};

/// phi(x) = a(x) exp(-2 pi G(x)); local scale 2 pi |grad G| exp(-2 pi G).
MapResult map_point_2d(const GreenField& field, const Point& x, const FlowSettings& settings = {});
/// phi(x) = a(x) exp(-weighted length of the trace from x to the boundary).
MapResult map_point_3d(const GreenField& field, const Point& x, const FlowSettings& settings = {});
/// Dispatch on the field dimension.
MapResult map_point(const GreenField& field, const Point& x, const FlowSettings& settings = {});

/// |phi'| at the pole: exp(-2 pi h(y,y)) in 2D, a near-pole estimate in 3D.
double pole_scale(const GreenField& field, const FlowSettings& settings = {});

/// Maps every point; failures are recorded per point. Order is preserved
/// and results do not depend on `jobs`.
std::vector<MapRecord> map_grid(const GreenField& field, const std::vector<Point>& points,
                                const FlowSettings& settings = {}, int jobs = 1);

struct InjectivityReport {
    std::size_t pairs_checked = 0;
    double min_normalized_distance = 0.0; // min |phi(p) - phi(q)| / |p - q| over the pairs
    std::vector<std::pair<std::size_t, std::size_t>> flagged;

    bool passed() const { return flagged.empty(); }
};

/// Pairs with sources at least `source_sep` apart and images closer than
/// `image_sep` are flagged. Indices refer to `results`.
InjectivityReport injectivity_audit(const std::vector<MapResult>& results, double source_sep = 1e-6,
                                    double image_sep = 1e-9);
/// Same over the successful records of a batch (indices refer to `records`).
InjectivityReport injectivity_audit(const std::vector<MapRecord>& records, double source_sep = 1e-6,
                                    double image_sep = 1e-9);

/// Preimage of w (|w| < 1) by shooting from the pole along w/|w|.
Point inverse_map(const GreenField& field, const Point& w, const FlowSettings& settings = {});

} // namespace greenmap
