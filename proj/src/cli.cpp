#include "greenmap/cli.hpp"

#include "greenmap/analysis.hpp"
#include "greenmap/errors.hpp"
#include "greenmap/mapping.hpp"
#include "parallel.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace greenmap {
namespace {

Json point_json(const Point& p)
{
    Json a = Json::array();
    for (double c : p.coords()) a.push_back(c);
    return a;
}

std::string point_text(const Point& p)
{
    std::string s = "(";
    for (int i = 0; i < p.dim(); ++i) s += (i ? ", " : "") + format_double(p[i]);
    return s + ")";
}

// Solves or loads the configured field; prints the reason and returns nullopt on failure.
std::optional<GreenField> obtain_field(const RunConfig& cfg, std::ostream& err, int& code)
{
    if (cfg.field_file) {
        try {
            return load_field(*cfg.field_file);
        } catch (const ParseError& e) {
            err << "error: " << e.what() << "\n";
            code = exit_parse;
            return std::nullopt;
        }
    }
    if (!cfg.domain->contains(*cfg.pole)) {
        err << "error: pole " << point_text(*cfg.pole) << " is not inside the domain\n";
        code = exit_solver;
        return std::nullopt;
    }
    try {
        return solve(*cfg.domain, *cfg.pole, cfg.solver);
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << " (boundary residual " << format_double(e.residual()) << ")\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
    }
    code = exit_solver;
    return std::nullopt;
}

std::vector<Point> make_grid(const RunConfig& cfg, const DomainSpec& spec)
{
    const auto& g = cfg.grid;
    if (g.points) return *g.points;
    const int radial = g.radial_for(spec.dim());
    if (spec.dim() == 2) {
        if (radial == 0 || g.angular == 0) return {};
        return polar_grid(spec, radial, g.angular, g.radius_max);
    }
    if (radial == 0 || g.polar == 0 || g.azimuth == 0) return {};
    return spherical_grid(spec, radial, g.polar, g.azimuth, g.radius_max);
}

Json scan_json(const ScanResult& s)
{
    return {{"min_grad", std::isfinite(s.min_grad) ? Json(s.min_grad) : Json(nullptr)},
            {"argmin", point_json(s.argmin)},
            {"grid_size", s.grid_size},
            {"evaluated", s.evaluated},
            {"refined", s.refined}};
}

Json lemma3_suite(const RunConfig& cfg, int dim, std::mt19937_64& rng, bool& passed)
{
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> radius(0.1, 1.0);
    int failures = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    Json failing = Json::array();
    for (int k = 0; k < cfg.check.lemma3_cases; ++k) {
        const HarmonicPolynomial u = HarmonicPolynomial::random(dim, cfg.check.max_degree, rng);
        Point x0 = Point::zero(dim);
        for (int i = 0; i < dim; ++i) x0[i] = coord(rng);
        const double r = radius(rng);
        const Lemma3Report rep = lemma3_check(u.as_field(), x0, r, cfg.check.lemma3_probes);
        min_margin = std::min(min_margin, rep.margin);
        if (!rep.passed) {
            ++failures;
            failing.push_back({{"case", k}, {"margin", rep.margin}, {"lhs", rep.lhs}, {"rhs", rep.rhs}});
        }
    }
    passed = failures == 0;
    return {{"seed", cfg.seed},
            {"cases", cfg.check.lemma3_cases},
            {"failures", failures},
            {"min_margin", std::isfinite(min_margin) ? Json(min_margin) : Json(nullptr)},
            {"failing", failing},
            {"passed", passed}};
}

void write_report(const RunConfig& cfg, const Json& report)
{
    write_text_file(cfg.output_dir / "report.json", report.dump(2) + "\n");
}

int finish_check(const RunConfig& cfg, Json& report, const std::vector<std::string>& failed, std::ostream& out,
                 std::ostream& err)
{
    report["failed_checks"] = failed;
    report["passed"] = failed.empty();
    write_report(cfg, report);
    if (failed.empty()) {
        out << "all checks passed\n";
        return exit_ok;
    }
    err << "failed checks:";
    for (const auto& f : failed) err << " " << f;
    err << "\n";
    return exit_check_failed;
}

} // namespace

int cmd_green(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    if (cfg.annulus) {
        const AnnulusFixture fx;
        const double flux = fx.boundary_flux_total();
        out << "boundary residual: " << format_double(fx.boundary_residual()) << "\n";
        out << "total flux: " << format_double(flux) << "\n";
        return fx.boundary_residual() <= cfg.solver.tolerance_for(2) && std::abs(flux + 1.0) <= 1e-5 ? exit_ok
                                                                                                  : exit_solver;
    }
    int code = exit_ok;
    const auto field = obtain_field(cfg, err, code);
    if (!field) return code;
    double flux = std::nan("");
    try {
        flux = field->boundary_flux_total();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
    }
    save_field(cfg.output_dir / "field.json", *field);
    out << "backend: " << to_string(field->backend()) << "\n";
    out << "boundary residual: " << format_double(field->boundary_residual()) << "\n";
    out << "total flux: " << format_double(flux) << "\n";
    const bool ok = field->boundary_residual() <= cfg.solver.tolerance_for(field->dim()) && std::abs(flux + 1.0) <= 1e-5;
    if (!ok) err << "error: boundary residual or total flux out of tolerance\n";
    return ok ? exit_ok : exit_solver;
}

int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    if (cfg.annulus) {
        err << "error: the trace command needs a simply connected domain\n";
        return exit_parse;
    }
    int code = exit_ok;
    const auto field = obtain_field(cfg, err, code);
    if (!field) return code;
    const DomainSpec& spec = field->spec();
    Point start;
    if (cfg.trace_start) {
        start = *cfg.trace_start;
    } else {
        const Point& y = field->pole();
        start = y + (spec.boundary_point_toward(Point::unit(spec.dim(), 0)) - y) * 0.5;
    }
    try {
        const FlowTrace trace = trace_forward(*field, start, cfg.flow);
        std::ostringstream csv;
        write_trace_csv(csv, *field, trace);
        write_text_file(cfg.output_dir / "trace.csv", csv.str());
        out << "samples: " << trace.samples.size() << "\n";
        out << "steps: " << trace.steps << "\n";
        out << "direction: " << point_text(trace.direction) << "\n";
        out << "max level residual: " << format_double(trace.max_level_residual()) << "\n";
        if (trace.dim == 3) out << "weighted length: " << format_double(weighted_length(*field, trace)) << "\n";
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver;
    }
    return exit_ok;
}

int cmd_map(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    if (cfg.annulus) {
        err << "error: the map command needs a simply connected domain\n";
        return exit_parse;
    }
    int code = exit_ok;
    const auto field = obtain_field(cfg, err, code);
    if (!field) return code;
    const int dim = field->dim();
    const auto grid = make_grid(cfg, field->spec());
    const auto records = map_grid(*field, grid, cfg.flow, cfg.jobs);

    std::string csv = dim == 2 ? "sx,sy,ix,iy,scale,residual,truncated\n" : "sx,sy,sz,ix,iy,iz,scale,residual,truncated\n";
    std::size_t failures = 0;
    for (const auto& rec : records) {
        std::string row;
        for (double c : rec.source.coords()) row += format_double(c) + ",";
        if (rec.ok()) {
            const MapResult& r = *rec.result;
            for (double c : r.image.coords()) row += format_double(c) + ",";
            row += format_double(r.local_scale) + "," + format_double(r.stats.invariant_residual) + ","
                   + (r.stats.truncated ? "1" : "0");
        } else {
            ++failures;
            for (int i = 0; i < dim; ++i) row += "nan,";
            row += "nan,nan,0";
            err << "warning: point " << point_text(rec.source) << " failed: " << rec.error << "\n";
        }
        csv += row + "\n";
    }
    write_text_file(cfg.output_dir / "map.csv", csv);

    const InjectivityReport audit = injectivity_audit(records);
    out << "mapped " << records.size() - failures << " of " << records.size() << " points\n";
    out << "injectivity: " << audit.pairs_checked << " pairs, min normalized distance "
        << format_double(audit.min_normalized_distance) << ", " << audit.flagged.size() << " flagged\n";
    if (failures * 100 > records.size()) {
        err << "error: " << failures << " of " << records.size() << " points failed\n";
        return exit_map_failures;
    }
    return exit_ok;
}

int cmd_check(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    std::mt19937_64 rng(cfg.seed);
    Json report;
    std::vector<std::string> failed;

    if (cfg.annulus) {
        const AnnulusFixture fx;
        const auto grid = fx.grid(cfg.grid.radial_for(2), cfg.grid.angular);
        const ScanResult scan = fx.scan(grid, cfg.grid.pole_exclusion);
        report["fixture"] = "annulus";
        report["scan"] = scan_json(scan);
        out << "critical point scan: min |grad G| = " << format_double(scan.min_grad) << " at "
            << point_text(scan.argmin) << "\n";
        if (!(scan.min_grad >= cfg.check.min_grad)) failed.push_back("critical-point-scan");
        bool lemma_ok = true;
        report["lemma3"] = lemma3_suite(cfg, 2, rng, lemma_ok);
        if (!lemma_ok) failed.push_back("lemma3");
        return finish_check(cfg, report, failed, out, err);
    }

    int code = exit_ok;
    const auto field = obtain_field(cfg, err, code);
    if (!field) return code;
    const int dim = field->dim();
    const DomainSpec& spec = field->spec();
    const auto grid = make_grid(cfg, spec);
    report["domain"] = domain_to_json(spec);
    report["pole"] = point_json(field->pole());

    const ScanResult scan = critical_point_scan(*field, grid, cfg.grid.pole_exclusion);
    report["scan"] = scan_json(scan);
    out << "critical point scan: min |grad G| = " << format_double(scan.min_grad) << " at "
        << point_text(scan.argmin) << "\n";
    if (scan.evaluated > 0 && !(scan.min_grad >= cfg.check.min_grad)) failed.push_back("critical-point-scan");

    // Metric reports of the constructed map away from the pole and the boundary.
    std::vector<Point> probes;
    for (const auto& p : grid)
        if (distance(p, field->pole()) >= cfg.grid.pole_exclusion
            && spec.boundary_clearance(p) >= cfg.grid.boundary_clearance)
            probes.push_back(p);
    const double tol = cfg.check.tolerance_for(dim);
    const PointMap map = [&](const Point& x) { return map_point(*field, x, cfg.flow).image; };
    std::vector<Json> rows(probes.size());
    std::vector<char> in_class(probes.size(), 0);
    std::vector<double> dil(probes.size(), 0.0);
    detail::parallel_for(probes.size(), cfg.jobs, [&](std::size_t i) {
        try {
            const MetricReport m = metric_report_at(map, probes[i], tol, cfg.check.jacobian_step);
            const MapClass k = m.classification.kind;
            in_class[i] = k == MapClass::conformal || (dim == 3 && k == MapClass::weak_conformal);
            dil[i] = m.dilatation;
            rows[i] = {{"point", point_json(probes[i])},
                       {"eigenvalues", m.eigenvalues},
                       {"residuals",
                        {{"conformal", m.conformal_residual},
                         {"weak_conformal", m.weak_conformal_residual},
                         {"progression", m.progression_residual}}},
                       {"class", m.classification.label()},
                       {"dilatation", std::isfinite(m.dilatation) ? Json(m.dilatation) : Json(nullptr)}};
        } catch (const Error& e) {
            rows[i] = {{"point", point_json(probes[i])}, {"error", e.what()}};
        }
    });
    std::size_t hits = 0;
    double max_dil = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        hits += in_class[i] ? 1 : 0;
        if (std::isfinite(dil[i])) max_dil = std::max(max_dil, dil[i]);
    }
    const double fraction = probes.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(probes.size());
    const char* expected = dim == 2 ? "conformal" : "weak-conformal";
    report["metrics"] = {{"expected_class", expected},
                         {"tolerance", tol},
                         {"points_checked", probes.size()},
                         {"fraction_in_class", fraction},
                         {"max_dilatation", max_dil},
                         {"points", rows}};
    out << "metric class " << expected << ": " << hits << " of " << probes.size() << " points\n";
    if (fraction < cfg.check.class_fraction) failed.push_back("metric-classification");

    bool lemma_ok = true;
    report["lemma3"] = lemma3_suite(cfg, dim, rng, lemma_ok);
    out << "lemma3 suite: " << report["lemma3"]["failures"].get<int>() << " failures in "
        << cfg.check.lemma3_cases << " cases\n";
    if (!lemma_ok) failed.push_back("lemma3");
    return finish_check(cfg, report, failed, out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Riemann and weak-conformal maps from Green's function gradient flows", "greenmap"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, int (*)(const RunConfig&, std::ostream&, std::ostream&)>> commands = {
        {"green", cmd_green}, {"trace", cmd_trace}, {"map", cmd_map}, {"check", cmd_check}};
    const std::vector<std::string> help = {"solve the Green's function and write field.json",
                                           "trace one flow line and write trace.csv",
                                           "map the configured grid and write map.csv",
                                           "run the diagnostics and write report.json"};
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < commands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].first, help[i]);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "random seed");
        subs.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        std::ostringstream o;
        std::ostringstream e2;
        const int rc = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return rc == 0 ? exit_ok : exit_parse;
    }

    RunConfig cfg;
    try {
        cfg = load_run_config(config_path);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_parse;
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
        CLI::App* sub = subs[i];
        if (!sub->parsed()) continue;
        if (sub->count("--out")) cfg.output_dir = out_dir;
        if (sub->count("--jobs")) cfg.jobs = jobs;
        if (sub->count("--seed")) cfg.seed = seed;
        try {
            return commands[i].second(cfg, out, err);
        } catch (const ParseError& e) {
            err << "error: " << e.what() << "\n";
            return exit_parse;
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << "\n";
            return exit_parse;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return exit_solver;
        }
    }
    return exit_parse;
}

} // namespace greenmap
