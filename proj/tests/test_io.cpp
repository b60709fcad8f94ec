#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "greenmap/errors.hpp"
#include "greenmap/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

using namespace greenmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("greenmap_io_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void check_same_shape(const DomainSpec& a, const DomainSpec& b)
{
    REQUIRE(a.dim() == b.dim());
    CHECK(a.kind() == b.kind());
    const auto dirs = a.dim() == 2 ? std::vector<Point>{{1, 0}, {0.6, 0.8}, {-0.28, -0.96}}
                                   : fibonacci_directions(20);
    for (const Point& u : dirs) CHECK(same_bits(a.radius_toward(u), b.radius_toward(u)));
}

} // namespace

TEST_CASE("domain round trips")
{
    const std::vector<DomainSpec> specs = {
        DomainSpec::circle({0.1, -0.2}, 1.3),
        DomainSpec::ellipse({0, 0}, 2.0, 0.7),
        DomainSpec::fourier_curve({0, 0}, 1.0, {0.05, 0, 0.1}, {0.0, 0.03}),
        DomainSpec::sphere({0, 0, 1}, 0.5),
        DomainSpec::ellipsoid({0, 0, 0}, 1.0, 1.5, 0.8),
        DomainSpec::spherical_harmonic({0, 0, 0}, 1.0, {{2, 0, 0.05}, {3, -2, 0.04}}),
    };
    for (const auto& s : specs) {
        const Json j = domain_to_json(s);
        check_same_shape(s, domain_from_json(j));
        check_same_shape(s, domain_from_json(Json::parse(j.dump())));
    }
}

TEST_CASE("domain parse errors")
{
    auto parse = [](const char* text) { return domain_from_json(Json::parse(text)); };
    CHECK_NOTHROW(parse(R"({"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1})"));
    CHECK_THROWS_AS(parse(R"({"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1, "colour": 3})"),
                    ParseError);
    CHECK_THROWS_AS(parse(R"({"dim": 3, "kind": "circle", "center": [0, 0], "radius": 1})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"dim": 2, "kind": "circle", "center": [0, 0, 0], "radius": 1})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"dim": 2, "kind": "hexagon", "center": [0, 0]})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"dim": 2, "kind": "circle", "center": [0, 0]})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"dim": 2, "kind": "circle", "center": [0, 0], "radius": "big"})"), ParseError);
    CHECK_THROWS_AS(parse(R"({"dim": 4, "kind": "circle", "center": [0, 0], "radius": 1})"), ParseError);
    CHECK_THROWS_AS(parse(R"([1, 2])"), ParseError);
    // geometry rejects a non-star-shaped radius function
    CHECK_THROWS(parse(R"({"dim": 2, "kind": "fourier-curve", "center": [0, 0], "base_radius": 1,
                           "cos_coeffs": [2.0], "sin_coeffs": []})"));

    try {
        parse(R"({"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1, "colour": 3})");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("colour") != std::string::npos);
    }
}

TEST_CASE("field round trip is bit exact")
{
    SolverSettings s;
    s.force_mfs = true;
    s.collocation = 64;
    s.tolerance = 1e-6;
    const GreenField f = solve(DomainSpec::fourier_curve({0, 0}, 1.0, {0, 0.08}, {0.02}), {0.1, 0.05}, s);
    TempDir tmp;
    save_field(tmp.path / "sub" / "field.json", f);
    const GreenField g = load_field(tmp.path / "sub" / "field.json");
    CHECK(g.backend() == f.backend());
    CHECK(g.pole() == f.pole());
    REQUIRE(g.charges().size() == f.charges().size());
    for (std::size_t i = 0; i < f.charges().size(); ++i) {
        CHECK(same_bits(g.charges()[i], f.charges()[i]));
        CHECK(g.sources()[i] == f.sources()[i]);
    }
    CHECK(same_bits(g.constant(), f.constant()));
    CHECK(same_bits(g.boundary_residual(), f.boundary_residual()));
    for (const Point& x : {Point(0.3, 0.2), Point(-0.5, -0.1)}) {
        CHECK(same_bits(g.value(x), f.value(x)));
    }

    const GreenField ball = solve(DomainSpec::sphere({0, 0, 0}, 1.0), {0.1, 0, 0});
    const GreenField b2 = field_from_json(Json::parse(field_to_json(ball).dump()));
    CHECK(b2.backend() == GreenBackend::analytic_ball);
    CHECK(same_bits(b2.value({0.2, 0.3, 0.1}), ball.value({0.2, 0.3, 0.1})));
}

TEST_CASE("field parse errors")
{
    const GreenField f = solve(DomainSpec::circle({0, 0}, 1.0), {0, 0});
    Json j = field_to_json(f);
    Json bad = j;
    bad["backend"] = "finite-elements";
    CHECK_THROWS_AS(field_from_json(bad), ParseError);
    bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_AS(field_from_json(bad), ParseError);
    bad = j;
    bad["pole"] = Json::array({0, 0, 0});
    CHECK_THROWS_AS(field_from_json(bad), ParseError);
}

TEST_CASE("syntax errors carry line and column")
{
    TempDir tmp;
    const fs::path p = tmp.write("bad.json", "{\n  \"dim\": 2,\n  \"kind\" \"circle\"\n}\n");
    try {
        read_json_file(p);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("bad.json:3:") != std::string::npos);
    }
    CHECK_THROWS_AS(read_json_file(tmp.path / "missing.json"), ParseError);
}

TEST_CASE("run config parsing")
{
    TempDir tmp;
    tmp.write("dom.json", R"({"dim": 3, "kind": "sphere", "center": [0, 0, 0], "radius": 1})");
    const fs::path cfgp = tmp.write("run.json", R"({
        "domain": "dom.json",
        "pole": [0.1, 0, 0],
        "solver": {"collocation": 300},
        "flow": {"rtol": 1e-9},
        "grid": {"radial": 4, "polar": 3, "azimuth": 5},
        "trace": {"start": [0.2, 0.2, 0]},
        "check": {"tolerance": 0.02, "lemma3_cases": 10},
        "seed": 7,
        "jobs": 3,
        "output": "out"
    })");
    const RunConfig c = load_run_config(cfgp);
    CHECK(c.dim() == 3);
    CHECK(c.domain->kind() == DomainKind::sphere);
    CHECK(*c.pole == Point(0.1, 0, 0));
    CHECK(c.solver.collocation == 300);
    CHECK(c.flow.rtol == 1e-9);
    CHECK(c.flow.atol == FlowSettings{}.atol);
    CHECK(c.grid.radial_for(3) == 4);
    CHECK(c.grid.azimuth == 5);
    CHECK(*c.trace_start == Point(0.2, 0.2, 0));
    CHECK(c.check.tolerance_for(3) == 0.02);
    CHECK(c.check.lemma3_cases == 10);
    CHECK(c.seed == 7);
    CHECK(c.jobs == 3);
    CHECK(c.output_dir == tmp.path / "out");

    const RunConfig d = run_config_from_json(Json::parse(
        R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0]})"));
    CHECK(d.seed == 20260101);
    CHECK(d.jobs == 1);
    CHECK(d.grid.radial_for(2) == 16);
    CHECK(d.check.tolerance_for(2) == 1e-3);

    const RunConfig a = run_config_from_json(Json::parse(R"({"fixture": "annulus"})"));
    CHECK(a.annulus);
    CHECK(a.dim() == 2);

    auto rejects = [](const char* text) { CHECK_THROWS_AS(run_config_from_json(Json::parse(text)), ParseError); };
    rejects(R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0, 0]})");
    rejects(R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0], "jobz": 2})");
    rejects(R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0],
                "grid": {"radius_max": 1.5}})");
    rejects(R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0], "jobs": 0})");
    rejects(R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0],
                "flow": {"eps_bdry": 2}})");
    rejects(R"({"fixture": "torus"})");
    rejects(R"({"fixture": "annulus", "pole": [0, 0]})");
    rejects(R"({"pole": [0, 0]})");
}

TEST_CASE("format_double")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_double(std::nan("")) == "nan");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}
