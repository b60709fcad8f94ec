#include "greenmap/io.hpp"

#include "greenmap/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace greenmap {
namespace {

// Strict view of a JSON object: every key must be consumed by the reader.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object()) throw ParseError(fmt::format("{}: expected an object", where()));
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& at(const std::string& key)
    {
        used_.insert(key);
        if (!j_.contains(key)) throw ParseError(fmt::format("{}: missing field \"{}\"", where(), key));
        return j_.at(key);
    }

    std::string child(const std::string& key) const { return path_ + "/" + key; }

    double number(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_number()) throw ParseError(fmt::format("{}: expected a number", child(key)));
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    int integer(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_number_integer()) throw ParseError(fmt::format("{}: expected an integer", child(key)));
        return v.get<int>();
    }
    int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }

    bool boolean(const std::string& key, bool fallback)
    {
        if (!has(key)) return fallback;
        const Json& v = at(key);
        if (!v.is_boolean()) throw ParseError(fmt::format("{}: expected true or false", child(key)));
        return v.get<bool>();
    }

    std::string string(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_string()) throw ParseError(fmt::format("{}: expected a string", child(key)));
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key)
    {
        const Json& v = at(key);
        if (!v.is_array()) throw ParseError(fmt::format("{}: expected an array of numbers", child(key)));
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) throw ParseError(fmt::format("{}: expected an array of numbers", child(key)));
            out.push_back(e.get<double>());
        }
        return out;
    }

    Point point(const std::string& key, int dim)
    {
        const auto c = numbers(key);
        if (static_cast<int>(c.size()) != dim)
            throw ParseError(fmt::format("{}: expected {} coordinates, got {}", child(key), dim, c.size()));
        return dim == 2 ? Point(c[0], c[1]) : Point(c[0], c[1], c[2]);
    }

    void finish() const
    {
        for (const auto& item : j_.items())
            if (!used_.count(item.key()))
                throw ParseError(fmt::format("{}: unknown field \"{}\"", where(), item.key()));
    }

private:
    std::string where() const { return path_.empty() ? "/" : path_; }

    const Json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Json point_json(const Point& p)
{
    Json a = Json::array();
    for (double c : p.coords()) a.push_back(c);
    return a;
}

Point point_from_array(const Json& a, int dim, const std::string& path)
{
    if (!a.is_array() || static_cast<int>(a.size()) != dim)
        throw ParseError(fmt::format("{}: expected {} coordinates", path, dim));
    for (const auto& e : a)
        if (!e.is_number()) throw ParseError(fmt::format("{}: expected numbers", path));
    return dim == 2 ? Point(a[0].get<double>(), a[1].get<double>())
                    : Point(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

int kind_dim(DomainKind kind)
{
    switch (kind) {
    case DomainKind::circle:
    case DomainKind::ellipse:
    case DomainKind::fourier_curve: return 2;
    default: return 3;
    }
}

DomainSpec domain_from_reader(ObjectReader& r)
{
    const int dim = r.integer("dim");
    if (dim != 2 && dim != 3) throw ParseError(fmt::format("{}: dim must be 2 or 3", r.child("dim")));
    const std::string kind_name = r.string("kind");
    DomainKind kind{};
    try {
        kind = domain_kind_from_string(kind_name);
    } catch (const Error&) {
        throw ParseError(fmt::format("{}: unknown domain kind \"{}\"", r.child("kind"), kind_name));
    }
    if (kind_dim(kind) != dim)
        throw ParseError(fmt::format("{}: kind \"{}\" is {}D but dim is {}", r.child("kind"), kind_name,
                                     kind_dim(kind), dim));
    const Point center = r.point("center", dim);

    auto axes = [&](int n) {
        const auto a = r.numbers("semi_axes");
        if (static_cast<int>(a.size()) != n)
            throw ParseError(fmt::format("{}: expected {} semi-axes", r.child("semi_axes"), n));
        return a;
    };
    std::optional<DomainSpec> spec;
    try {
        switch (kind) {
        case DomainKind::circle: spec = DomainSpec::circle(center, r.number("radius")); break;
        case DomainKind::sphere: spec = DomainSpec::sphere(center, r.number("radius")); break;
        case DomainKind::ellipse: {
            const auto a = axes(2);
            spec = DomainSpec::ellipse(center, a[0], a[1]);
            break;
        }
        case DomainKind::ellipsoid: {
            const auto a = axes(3);
            spec = DomainSpec::ellipsoid(center, a[0], a[1], a[2]);
            break;
        }
        case DomainKind::fourier_curve: {
            const double base = r.number("base_radius");
            const auto c = r.has("cos_coeffs") ? r.numbers("cos_coeffs") : std::vector<double>{};
            const auto s = r.has("sin_coeffs") ? r.numbers("sin_coeffs") : std::vector<double>{};
            spec = DomainSpec::fourier_curve(center, base, c, s);
            break;
        }
        case DomainKind::spherical_harmonic: {
            const double base = r.number("base_radius");
            std::vector<HarmonicTerm> terms;
            if (r.has("terms")) {
                const Json& arr = r.at("terms");
                if (!arr.is_array()) throw ParseError(fmt::format("{}: expected an array", r.child("terms")));
                for (std::size_t i = 0; i < arr.size(); ++i) {
                    ObjectReader t(arr[i], fmt::format("{}/{}", r.child("terms"), i));
                    terms.push_back({t.integer("degree"), t.integer("order"), t.number("coeff")});
                    t.finish();
                }
            }
            spec = DomainSpec::spherical_harmonic(center, base, terms);
            break;
        }
        }
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(fmt::format("{}: {}", r.child("kind"), e.what()));
    }
    r.finish();
    return *spec;
}

Json read_json_text(const std::string& text, const std::string& label)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        // Byte offset to line:column.
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(fmt::format("{}:{}:{}: {}", label, line, col, e.what()));
    }
}

} // namespace

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", v);
}

Json domain_to_json(const DomainSpec& spec)
{
    Json j;
    j["dim"] = spec.dim();
    j["kind"] = std::string(to_string(spec.kind()));
    j["center"] = point_json(spec.center());
    switch (spec.kind()) {
    case DomainKind::circle:
    case DomainKind::sphere: j["radius"] = spec.base_radius(); break;
    case DomainKind::ellipse:
    case DomainKind::ellipsoid: j["semi_axes"] = spec.semi_axes(); break;
    case DomainKind::fourier_curve:
        j["base_radius"] = spec.base_radius();
        j["cos_coeffs"] = spec.cos_coeffs();
        j["sin_coeffs"] = spec.sin_coeffs();
        break;
    case DomainKind::spherical_harmonic: {
        j["base_radius"] = spec.base_radius();
        Json terms = Json::array();
        for (const auto& t : spec.harmonic_terms())
            terms.push_back({{"degree", t.degree}, {"order", t.order}, {"coeff", t.coeff}});
        j["terms"] = terms;
        break;
    }
    }
    return j;
}

DomainSpec domain_from_json(const Json& j)
{
    ObjectReader r(j, "");
    return domain_from_reader(r);
}

Json field_to_json(const GreenField& field)
{
    Json j;
    j["domain"] = domain_to_json(field.spec());
    j["pole"] = point_json(field.pole());
    j["backend"] = std::string(to_string(field.backend()));
    Json sources = Json::array();
    for (const auto& s : field.sources()) sources.push_back(point_json(s));
    j["sources"] = sources;
    j["charges"] = field.charges();
    j["constant"] = field.constant();
    j["boundary_residual"] = field.boundary_residual();
    return j;
}

GreenField field_from_json(const Json& j)
{
    ObjectReader r(j, "");
    ObjectReader d(r.at("domain"), "/domain");
    DomainSpec spec = domain_from_reader(d);
    const int dim = spec.dim();
    const Point pole = r.point("pole", dim);
    GreenBackend backend{};
    const std::string name = r.string("backend");
    try {
        backend = green_backend_from_string(name);
    } catch (const Error&) {
        throw ParseError(fmt::format("/backend: unknown backend \"{}\"", name));
    }
    const Json& src = r.at("sources");
    if (!src.is_array()) throw ParseError("/sources: expected an array");
    std::vector<Point> sources;
    for (std::size_t i = 0; i < src.size(); ++i)
        sources.push_back(point_from_array(src[i], dim, fmt::format("/sources/{}", i)));
    const std::vector<double> charges = r.numbers("charges");
    const double constant = r.number("constant");
    const double residual = r.number("boundary_residual");
    r.finish();
    try {
        return GreenField::from_parts(std::move(spec), pole, backend, std::move(sources), charges, constant,
                                      residual);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(fmt::format("field: {}", e.what()));
    }
}

Json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(fmt::format("{}: cannot open file", path.string()));
    std::stringstream buffer;
    buffer << in.rdbuf();
    return read_json_text(buffer.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("{}: cannot write file", path.string()));
    out << text;
}

DomainSpec load_domain(const std::filesystem::path& path)
{
    const Json j = read_json_file(path);
    try {
        return domain_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

GreenField load_field(const std::filesystem::path& path)
{
    const Json j = read_json_file(path);
    try {
        return field_from_json(j);
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void save_field(const std::filesystem::path& path, const GreenField& field)
{
    write_text_file(path, field_to_json(field).dump(2) + "\n");
}

int RunConfig::dim() const
{
    if (annulus) return 2;
    if (domain) return domain->dim();
    throw ConfigError("run configuration has no domain");
}

RunConfig run_config_from_json(const Json& j, const std::filesystem::path& base_dir)
{
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    RunConfig cfg;
    ObjectReader r(j, "");

    if (r.has("fixture")) {
        const std::string name = r.string("fixture");
        if (name != "annulus") throw ParseError(fmt::format("/fixture: unknown fixture \"{}\"", name));
        cfg.annulus = true;
        if (r.has("domain") || r.has("pole") || r.has("field"))
            throw ParseError("/fixture: the annulus fixture takes no domain, pole or field");
    } else if (r.has("field")) {
        cfg.field_file = resolve(r.string("field"));
        if (r.has("domain") || r.has("pole")) throw ParseError("/field: a field file already fixes domain and pole");
        const GreenField f = load_field(*cfg.field_file);
        cfg.domain = f.spec();
        cfg.pole = f.pole();
    } else {
        const Json& d = r.at("domain");
        if (d.is_string()) {
            cfg.domain = load_domain(resolve(d.get<std::string>()));
        } else {
            ObjectReader dr(d, "/domain");
            cfg.domain = domain_from_reader(dr);
        }
        cfg.pole = r.point("pole", cfg.domain->dim());
    }

    if (r.has("solver")) {
        ObjectReader s(r.at("solver"), "/solver");
        cfg.solver.collocation = s.integer("collocation", cfg.solver.collocation);
        cfg.solver.max_collocation = s.integer("max_collocation", cfg.solver.max_collocation);
        cfg.solver.dilation = s.number("dilation", cfg.solver.dilation);
        cfg.solver.tolerance = s.number("tolerance", cfg.solver.tolerance);
        cfg.solver.svd_cutoff = s.number("svd_cutoff", cfg.solver.svd_cutoff);
        cfg.solver.force_mfs = s.boolean("force_mfs", cfg.solver.force_mfs);
        s.finish();
        if (cfg.solver.collocation < 0 || cfg.solver.max_collocation < 0 || cfg.solver.tolerance < 0.0)
            throw ParseError("/solver: counts and tolerance must be nonnegative");
        if (!(cfg.solver.dilation > 1.0)) throw ParseError("/solver/dilation: must exceed 1");
        if (!(cfg.solver.svd_cutoff > 0.0)) throw ParseError("/solver/svd_cutoff: must be positive");
    }
    if (r.has("flow")) {
        ObjectReader f(r.at("flow"), "/flow");
        auto& fl = cfg.flow;
        fl.rtol = f.number("rtol", fl.rtol);
        fl.atol = f.number("atol", fl.atol);
        fl.eps_bdry = f.number("eps_bdry", fl.eps_bdry);
        fl.eps_trunc = f.number("eps_trunc", fl.eps_trunc);
        fl.t_cut = f.number("t_cut", fl.t_cut);
        fl.level_tol_2d = f.number("level_tol_2d", fl.level_tol_2d);
        fl.level_tol_3d = f.number("level_tol_3d", fl.level_tol_3d);
        fl.max_steps = f.integer("max_steps", fl.max_steps);
        f.finish();
        if (!(fl.rtol > 0 && fl.atol > 0 && fl.eps_bdry > 0 && fl.eps_bdry < 1 && fl.eps_trunc > 0 && fl.t_cut > 0
              && fl.level_tol_2d > 0 && fl.level_tol_3d > 0 && fl.max_steps > 0))
            throw ParseError("/flow: tolerances must be positive (eps_bdry below 1)");
    }
    if (r.has("grid")) {
        ObjectReader g(r.at("grid"), "/grid");
        auto& gs = cfg.grid;
        gs.radial = g.integer("radial", gs.radial);
        gs.angular = g.integer("angular", gs.angular);
        gs.polar = g.integer("polar", gs.polar);
        gs.azimuth = g.integer("azimuth", gs.azimuth);
        gs.radius_max = g.number("radius_max", gs.radius_max);
        gs.pole_exclusion = g.number("pole_exclusion", gs.pole_exclusion);
        gs.boundary_clearance = g.number("boundary_clearance", gs.boundary_clearance);
        if (g.has("points")) {
            const Json& pts = g.at("points");
            if (!pts.is_array()) throw ParseError("/grid/points: expected an array");
            const int dim = cfg.dim();
            std::vector<Point> list;
            for (std::size_t i = 0; i < pts.size(); ++i)
                list.push_back(point_from_array(pts[i], dim, fmt::format("/grid/points/{}", i)));
            gs.points = std::move(list);
        }
        g.finish();
        if (gs.radial < 0 || gs.angular < 0 || gs.polar < 0 || gs.azimuth < 0)
            throw ParseError("/grid: sizes must be nonnegative");
        if (!(gs.radius_max > 0.0 && gs.radius_max < 1.0)) throw ParseError("/grid/radius_max: must lie in (0, 1)");
        if (gs.pole_exclusion < 0.0 || gs.boundary_clearance < 0.0)
            throw ParseError("/grid: exclusions must be nonnegative");
    }
    if (r.has("trace")) {
        ObjectReader t(r.at("trace"), "/trace");
        cfg.trace_start = t.point("start", cfg.dim());
        t.finish();
    }
    if (r.has("check")) {
        ObjectReader c(r.at("check"), "/check");
        auto& cs = cfg.check;
        cs.tolerance = c.number("tolerance", cs.tolerance);
        cs.class_fraction = c.number("class_fraction", cs.class_fraction);
        cs.min_grad = c.number("min_grad", cs.min_grad);
        cs.lemma3_cases = c.integer("lemma3_cases", cs.lemma3_cases);
        cs.lemma3_probes = c.integer("lemma3_probes", cs.lemma3_probes);
        cs.max_degree = c.integer("max_degree", cs.max_degree);
        cs.jacobian_step = c.number("jacobian_step", cs.jacobian_step);
        c.finish();
        if (cs.tolerance < 0.0 || !(cs.class_fraction >= 0.0 && cs.class_fraction <= 1.0) || cs.min_grad < 0.0
            || cs.lemma3_cases < 0 || cs.lemma3_probes < 3 || cs.max_degree < 0 || cs.jacobian_step < 0.0)
            throw ParseError("/check: invalid tolerance, fraction or counts");
    }
    if (r.has("seed")) {
        const Json& s = r.at("seed");
        if (!s.is_number_unsigned()) throw ParseError("/seed: expected a nonnegative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    cfg.jobs = r.integer("jobs", cfg.jobs);
    if (cfg.jobs < 1) throw ParseError("/jobs: must be at least 1");
    if (r.has("output")) cfg.output_dir = resolve(r.string("output"));
    r.finish();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path)
{
    const Json j = read_json_file(path);
    try {
        return run_config_from_json(j, path.parent_path());
    } catch (const ParseError& e) {
        throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

} // namespace greenmap
