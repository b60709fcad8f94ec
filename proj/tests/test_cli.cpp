#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "greenmap/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace greenmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("greenmap_cli_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name) << text;
        return path / name;
    }
};

struct Run {
    int code = -1;
    std::string out, err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "greenmap");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::vector<double>> read_csv(const fs::path& p, std::string* header = nullptr)
{
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

const char* kDisk = R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0],
                        "check": {"lemma3_cases": 20}})";

} // namespace

TEST_CASE("green writes a field file")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", kDisk);
    const Run r = run({"green", "--config", cfg.string(), "--out", (tmp.path / "o").string()});
    CHECK(r.code == exit_ok);
    CHECK(r.out.find("backend: analytic-disk") != std::string::npos);
    CHECK(fs::exists(tmp.path / "o" / "field.json"));
    const auto at = r.out.find("total flux: ");
    REQUIRE(at != std::string::npos);
    CHECK(std::abs(std::stod(r.out.substr(at + 12)) + 1.0) <= 1e-10);

    // the saved field can be used in place of the domain
    tmp.write("f.json", R"({"field": "o/field.json", "grid": {"points": [[0.5, 0]]}})");
    const Run m = run({"map", "--config", (tmp.path / "f.json").string(), "--out", (tmp.path / "m").string()});
    CHECK_MESSAGE(m.code == exit_ok, m.err);
    const auto rows = read_csv(tmp.path / "m" / "map.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][2] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("exit codes")
{
    TempDir tmp;
    const std::string o = (tmp.path / "o").string();
    auto code = [&](const std::string& sub, const std::string& text) {
        const auto p = tmp.write("c.json", text);
        return run({sub, "--config", p.string(), "--out", o}).code;
    };
    CHECK(code("green", "{\"domain\": ") == exit_parse);
    CHECK(code("green", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0, 0]})")
          == exit_parse);
    CHECK(code("map", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0],
                          "grdi": {}})")
          == exit_parse);
    CHECK(code("green", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [2, 0]})")
          == exit_solver);
    CHECK(code("map", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1}, "pole": [0, 0],
                          "grid": {"points": [[0.1, 0], [1.5, 0], [0.2, 0.3]]}})")
          == exit_map_failures);
    CHECK(code("check", R"({"fixture": "annulus", "grid": {"radial": 10, "angular": 100},
                            "check": {"lemma3_cases": 10}})")
          == exit_check_failed);
    CHECK(code("map", R"({"fixture": "annulus"})") == exit_parse);
    CHECK(run({"green"}).code == exit_parse);
    CHECK(run({}).code == exit_parse);
    CHECK(run({"green", "--config", (tmp.path / "nope.json").string()}).code == exit_parse);

    const Run bad = run({"green", "--config", tmp.write("c.json", "{\n\"pole\" [0, 0]}").string()});
    CHECK(bad.err.find("c.json:2:") != std::string::npos);
}

TEST_CASE("failed map rows hold nan")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1},
        "pole": [0, 0], "grid": {"points": [[0.1, 0], [1.5, 0]]}})");
    const Run r = run({"map", "--config", cfg.string(), "--out", tmp.path.string()});
    CHECK(r.code == exit_map_failures);
    const auto rows = read_csv(tmp.path / "map.csv");
    REQUIRE(rows.size() == 2);
    CHECK(std::isnan(rows[1][2]));
    CHECK(std::isfinite(rows[0][2]));
}

TEST_CASE("empty grid gives a header-only csv")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1},
        "pole": [0, 0], "grid": {"points": []}})");
    CHECK(run({"map", "--config", cfg.string(), "--out", tmp.path.string()}).code == exit_ok);
    CHECK(slurp(tmp.path / "map.csv") == "sx,sy,ix,iy,scale,residual,truncated\n");
}

TEST_CASE("disk map is the identity")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", kDisk);
    const Run r = run({"map", "--config", cfg.string(), "--out", tmp.path.string(), "--jobs", "4"});
    CHECK_MESSAGE(r.code == exit_ok, r.err);
    const auto rows = read_csv(tmp.path / "map.csv");
    REQUIRE(rows.size() == 256);
    double worst = 0.0;
    for (const auto& row : rows) worst = std::max({worst, std::abs(row[2] - row[0]), std::abs(row[3] - row[1])});
    CHECK(worst < 1e-6);
    CHECK(r.out.find("0 flagged") != std::string::npos);
}

TEST_CASE("ball map is the identity")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", R"({"domain": {"dim": 3, "kind": "sphere", "center": [0, 0, 0], "radius": 1},
        "pole": [0, 0, 0], "grid": {"radial": 8, "polar": 8, "azimuth": 8}})");
    std::string header;
    CHECK(run({"map", "--config", cfg.string(), "--out", tmp.path.string(), "--jobs", "4"}).code == exit_ok);
    const auto rows = read_csv(tmp.path / "map.csv", &header);
    CHECK(header == "sx,sy,sz,ix,iy,iz,scale,residual,truncated");
    REQUIRE(rows.size() == 512);
    double worst = 0.0;
    for (const auto& row : rows)
        for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(row[3 + i] - row[i]));
    CHECK(worst < 1e-4);
}

TEST_CASE("trace writes samples on the level sets")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", R"({"domain": {"dim": 2, "kind": "circle", "center": [0, 0], "radius": 1},
        "pole": [0, 0], "trace": {"start": [0.3, 0.4]}})");
    const Run r = run({"trace", "--config", cfg.string(), "--out", tmp.path.string()});
    CHECK(r.code == exit_ok);
    std::string header;
    const auto rows = read_csv(tmp.path / "trace.csv", &header);
    CHECK(header == "t,x0,x1,G,level_residual");
    REQUIRE(rows.size() > 2);
    for (const auto& row : rows) {
        CHECK(std::abs(row[4]) <= 1e-9);
        CHECK(std::hypot(row[1], row[2]) == doctest::Approx(row[0]).epsilon(1e-8));
    }
    CHECK(rows.back()[0] >= 1 - 1e-6 - 1e-12);
}

TEST_CASE("check on the disk passes and is deterministic")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", kDisk);
    const Run a = run({"check", "--config", cfg.string(), "--out", (tmp.path / "a").string(), "--jobs", "1"});
    const Run b = run({"check", "--config", cfg.string(), "--out", (tmp.path / "b").string(), "--jobs", "4"});
    CHECK(a.code == exit_ok);
    CHECK(b.code == exit_ok);
    const std::string ra = slurp(tmp.path / "a" / "report.json");
    CHECK(ra == slurp(tmp.path / "b" / "report.json"));
    const Json rep = Json::parse(ra);
    CHECK(rep["passed"] == true);
    CHECK(rep["failed_checks"].empty());

    run({"check", "--config", cfg.string(), "--out", (tmp.path / "c").string(), "--seed", "99"});
    CHECK(slurp(tmp.path / "c" / "report.json") != ra);
}

TEST_CASE("map output does not depend on the worker count")
{
    TempDir tmp;
    const auto cfg = tmp.write("c.json", R"({"domain": {"dim": 2, "kind": "fourier-curve", "center": [0, 0],
        "base_radius": 1, "cos_coeffs": [0, 0, 0.1], "sin_coeffs": []}, "pole": [0, 0],
        "grid": {"radial": 6, "angular": 10}})");
    run({"map", "--config", cfg.string(), "--out", (tmp.path / "a").string(), "--jobs", "1"});
    run({"map", "--config", cfg.string(), "--out", (tmp.path / "b").string(), "--jobs", "5"});
    CHECK(slurp(tmp.path / "a" / "map.csv") == slurp(tmp.path / "b" / "map.csv"));
}

TEST_CASE("the installed tool runs the shipped configs")
{
    TempDir tmp;
    auto status = [&](const std::string& args) {
        const std::string cmd = std::string(GREENMAP_TOOL) + " " + args + " > " + (tmp.path / "log").string() + " 2>&1";
        const int s = std::system(cmd.c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    const fs::path configs = GREENMAP_CONFIG_DIR;
    CHECK(status("green --config " + (configs / "disk.json").string() + " --out " + tmp.path.string()) == 0);
    CHECK(status("map --config " + (configs / "ball.json").string() + " --out " + tmp.path.string()) == 0);
    CHECK(status("green --config " + (configs / "annulus.json").string() + " --out " + tmp.path.string()) == 0);
    CHECK(status("bogus") == 1);
    CHECK(status("--help") == 0);
}
