#pragma once

#include "greenmap/flow.hpp"
#include "greenmap/geometry.hpp"
#include "greenmap/green.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace greenmap {

using Json = nlohmann::json;

/// Domain file object, e.g.
///   {"dim": 2, "kind": "fourier-curve", "center": [0,0], "base_radius": 1.0,
///    "cos_coeffs": [...], "sin_coeffs": [...]}
/// Unknown fields are rejected and coordinate lengths must match "dim".
Json domain_to_json(const DomainSpec& spec);
DomainSpec domain_from_json(const Json& j);

/// Field file: domain, pole, backend, sources, charges, constant, residual.
/// Doubles are written in shortest round-trip form, so reloading is bit exact.
Json field_to_json(const GreenField& field);
GreenField field_from_json(const Json& j);

/// Parse a JSON file; ParseError carries "path:line:column" on syntax errors.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

DomainSpec load_domain(const std::filesystem::path& path);
GreenField load_field(const std::filesystem::path& path);
void save_field(const std::filesystem::path& path, const GreenField& field);

struct GridSettings {
    int radial = 0;       // 0 picks 16 (2D) / 8 (3D)
    int angular = 16;     // 2D
    int polar = 8;        // 3D
    int azimuth = 8;      // 3D
    double radius_max = 0.99;
    double pole_exclusion = 0.05;
    double boundary_clearance = 0.05;
    std::optional<std::vector<Point>> points; // explicit grid, replaces the generated one

    int radial_for(int dim) const { return radial > 0 ? radial : (dim == 2 ? 16 : 8); }
};

struct CheckSettings {
    double tolerance = 0.0;       // classification tolerance; 0 picks 1e-3 (2D) / 1e-2 (3D)
    double class_fraction = 0.99; // required share of grid points in the expected class
    double min_grad = 0.05;       // scan lower bound for |grad G|
    int lemma3_cases = 200;
    int lemma3_probes = 720;
    int max_degree = 5;
    double jacobian_step = 0.0;

    double tolerance_for(int dim) const { return tolerance > 0.0 ? tolerance : (dim == 2 ? 1e-3 : 1e-2); }
};

struct RunConfig {
    std::optional<DomainSpec> domain; // empty for the annulus fixture
    bool annulus = false;
    std::optional<Point> pole;
    std::optional<std::filesystem::path> field_file; // pre-solved field instead of solving
    SolverSettings solver;
    FlowSettings flow;
    GridSettings grid;
    std::optional<Point> trace_start;
    CheckSettings check;
    std::uint64_t seed = 20260101;
    int jobs = 1;
    std::filesystem::path output_dir = ".";

    int dim() const;
};

/// Strict config reader: relative paths resolve against the config file's directory.
RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Formats a double with 17 significant digits ("nan"/"inf" for non-finite values).
std::string format_double(double v);

} // namespace greenmap
