#include "greenmap/analysis.hpp"
#include "greenmap/cli.hpp"
#include "greenmap/errors.hpp"
#include "greenmap/flow.hpp"
#include "greenmap/geometry.hpp"
#include "greenmap/green.hpp"
#include "greenmap/io.hpp"
#include "greenmap/mapping.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace greenmap;

namespace {

using Coords = std::vector<double>;
using Rows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Point to_point(const Coords& c)
{
    if (c.size() == 2) return {c[0], c[1]};
    if (c.size() == 3) return {c[0], c[1], c[2]};
    throw ArgumentError("a point needs 2 or 3 coordinates");
}

Eigen::VectorXd from_point(const Point& p)
{
    Eigen::VectorXd v(p.dim());
    for (int i = 0; i < p.dim(); ++i) v(i) = p[i];
    return v;
}

std::vector<Point> to_points(const Rows& m)
{
    std::vector<Point> out;
    if (m.size() == 0) return out;
    if (m.cols() != 2 && m.cols() != 3) throw ArgumentError("points must have 2 or 3 columns");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out.push_back(m.cols() == 2 ? Point(m(i, 0), m(i, 1)) : Point(m(i, 0), m(i, 1), m(i, 2)));
    return out;
}

Rows from_points(const std::vector<Point>& pts, int dim)
{
    Rows m(static_cast<Eigen::Index>(pts.size()), dim);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), j) = pts[i][j];
    return m;
}

FlowSettings flow_settings(const py::kwargs& kw)
{
    FlowSettings s;
    for (auto item : kw) {
        const auto key = item.first.cast<std::string>();
        if (key == "rtol") s.rtol = item.second.cast<double>();
        else if (key == "atol") s.atol = item.second.cast<double>();
        else if (key == "eps_bdry") s.eps_bdry = item.second.cast<double>();
        else if (key == "eps_trunc") s.eps_trunc = item.second.cast<double>();
        else if (key == "t_cut") s.t_cut = item.second.cast<double>();
        else if (key == "max_steps") s.max_steps = item.second.cast<int>();
        else throw ArgumentError("unknown flow setting: " + key);
    }
    return s;
}

py::dict map_result_dict(const MapResult& r)
{
    py::dict d;
    d["source"] = from_point(r.source);
    d["image"] = from_point(r.image);
    d["local_scale"] = r.local_scale;
    d["steps"] = r.stats.steps;
    d["invariant_residual"] = r.stats.invariant_residual;
    d["truncated"] = r.stats.truncated;
    return d;
}

py::dict metric_dict(const MetricReport& m)
{
    py::dict d;
    d["jacobian"] = m.jacobian;
    d["metric"] = m.metric;
    d["eigenvalues"] = m.eigenvalues;
    d["trace"] = m.trace;
    d["determinant"] = m.determinant;
    d["frobenius_sq"] = m.frobenius_sq;
    d["conformal_residual"] = m.conformal_residual;
    d["weak_conformal_residual"] = m.weak_conformal_residual;
    d["progression_residual"] = m.progression_residual;
    d["dilatation"] = m.dilatation;
    d["classification"] = m.classification.label();
    return d;
}

py::dict scan_dict(const ScanResult& s)
{
    py::dict d;
    d["min_grad"] = s.min_grad;
    d["argmin"] = from_point(s.argmin);
    d["grid_size"] = s.grid_size;
    d["evaluated"] = s.evaluated;
    d["refined"] = s.refined;
    return d;
}

} // namespace

PYBIND11_MODULE(_greenmap, m)
{
    m.doc() = "Green's function gradient-flow maps onto the unit disk and ball";
    m.attr("__version__") = "0.1.0";

    static py::exception<Error> base(m, "GreenmapError", PyExc_RuntimeError);
    static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
    static py::exception<ParseError> parse_error(m, "ParseError", base.ptr());
    static py::exception<ArgumentError> argument_error(m, "ArgumentError", base.ptr());
    static py::exception<DomainError> domain_error(m, "DomainError", base.ptr());
    static py::exception<RangeError> range_error(m, "RangeError", base.ptr());
    static py::exception<DegeneracyError> degeneracy_error(m, "DegeneracyError", base.ptr());
    static py::exception<ConvergenceError> convergence_error(m, "ConvergenceError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            py::set_error(config_error, e.what());
        } catch (const ParseError& e) {
            py::set_error(parse_error, e.what());
        } catch (const ArgumentError& e) {
            py::set_error(argument_error, e.what());
        } catch (const DomainError& e) {
            py::set_error(domain_error, e.what());
        } catch (const RangeError& e) {
            py::set_error(range_error, e.what());
        } catch (const DegeneracyError& e) {
            py::set_error(degeneracy_error, e.what());
        } catch (const ConvergenceError& e) {
            py::set_error(convergence_error, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    py::class_<DomainSpec>(m, "Domain")
        .def_static("circle", [](const Coords& c, double r) { return DomainSpec::circle(to_point(c), r); },
                    py::arg("center"), py::arg("radius"))
        .def_static("ellipse",
                    [](const Coords& c, double a, double b) { return DomainSpec::ellipse(to_point(c), a, b); },
                    py::arg("center"), py::arg("semi_x"), py::arg("semi_y"))
        .def_static("fourier_curve",
                    [](const Coords& c, double base, std::vector<double> cs, std::vector<double> sn) {
                        return DomainSpec::fourier_curve(to_point(c), base, std::move(cs), std::move(sn));
                    },
                    py::arg("center"), py::arg("base_radius"), py::arg("cos_coeffs"),
                    py::arg("sin_coeffs") = std::vector<double>{})
        .def_static("sphere", [](const Coords& c, double r) { return DomainSpec::sphere(to_point(c), r); },
                    py::arg("center"), py::arg("radius"))
        .def_static("ellipsoid",
                    [](const Coords& c, double a, double b, double d) {
                        return DomainSpec::ellipsoid(to_point(c), a, b, d);
                    },
                    py::arg("center"), py::arg("semi_x"), py::arg("semi_y"), py::arg("semi_z"))
        .def_static("spherical_harmonic",
                    [](const Coords& c, double base, const std::vector<std::tuple<int, int, double>>& terms) {
                        std::vector<HarmonicTerm> t;
                        for (const auto& [l, mm, coeff] : terms) t.push_back({l, mm, coeff});
                        return DomainSpec::spherical_harmonic(to_point(c), base, std::move(t));
                    },
                    py::arg("center"), py::arg("base_radius"), py::arg("terms"))
        .def_static("from_json", [](const std::string& s) { return domain_from_json(Json::parse(s)); })
        .def("to_json", [](const DomainSpec& d) { return domain_to_json(d).dump(); })
        .def_property_readonly("dim", &DomainSpec::dim)
        .def_property_readonly("kind", [](const DomainSpec& d) { return std::string(to_string(d.kind())); })
        .def_property_readonly("diameter", &DomainSpec::diameter)
        .def("contains", [](const DomainSpec& d, const Coords& x) { return d.contains(to_point(x)); })
        .def("radius_toward", [](const DomainSpec& d, const Coords& u) { return d.radius_toward(to_point(u)); });

    py::class_<GreenField>(m, "GreenField")
        .def_property_readonly("dim", &GreenField::dim)
        .def_property_readonly("pole", [](const GreenField& f) { return from_point(f.pole()); })
        .def_property_readonly("backend", [](const GreenField& f) { return std::string(to_string(f.backend())); })
        .def_property_readonly("domain", &GreenField::spec)
        .def_property_readonly("boundary_residual", &GreenField::boundary_residual)
        .def("value", [](const GreenField& f, const Coords& x) { return f.value(to_point(x)); })
        .def("gradient", [](const GreenField& f, const Coords& x) { return from_point(f.gradient(to_point(x))); })
        .def("regular_part_at_pole", &GreenField::regular_part_at_pole)
        .def("boundary_flux_total", &GreenField::boundary_flux_total)
        .def("to_json", [](const GreenField& f) { return field_to_json(f).dump(); })
        .def_static("from_json", [](const std::string& s) { return field_from_json(Json::parse(s)); });

    m.def(
        "solve",
        [](const DomainSpec& d, const Coords& pole, int collocation, double tolerance, bool force_mfs) {
            SolverSettings s;
            s.collocation = collocation;
            s.tolerance = tolerance;
            s.force_mfs = force_mfs;
            py::gil_scoped_release release;
            return solve(d, to_point(pole), s);
        },
        py::arg("domain"), py::arg("pole"), py::arg("collocation") = 0, py::arg("tolerance") = 0.0,
        py::arg("force_mfs") = false, "Green's function of the domain with the given pole.");

    m.def(
        "map_point",
        [](const GreenField& f, const Coords& x, const py::kwargs& kw) {
            const FlowSettings s = flow_settings(kw);
            MapResult r;
            {
                py::gil_scoped_release release;
                r = map_point(f, to_point(x), s);
            }
            return map_result_dict(r);
        },
        py::arg("field"), py::arg("x"), "Image of x, local scale and trace statistics.");

    m.def(
        "map_grid",
        [](const GreenField& f, const Rows& points, int jobs, const py::kwargs& kw) {
            const FlowSettings s = flow_settings(kw);
            const auto pts = to_points(points);
            std::vector<MapRecord> recs;
            {
                py::gil_scoped_release release;
                recs = map_grid(f, pts, s, jobs);
            }
            const int dim = f.dim();
            Rows images = Rows::Constant(static_cast<Eigen::Index>(recs.size()), dim, std::nan(""));
            Eigen::VectorXd scales = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(recs.size()), std::nan(""));
            std::vector<bool> ok(recs.size(), false);
            std::vector<std::string> errors(recs.size());
            for (std::size_t i = 0; i < recs.size(); ++i) {
                const auto row = static_cast<Eigen::Index>(i);
                if (recs[i].ok()) {
                    for (int j = 0; j < dim; ++j) images(row, j) = recs[i].result->image[j];
                    scales(row) = recs[i].result->local_scale;
                    ok[i] = true;
                } else {
                    errors[i] = recs[i].error;
                }
            }
            py::dict d;
            d["images"] = images;
            d["local_scales"] = scales;
            d["ok"] = ok;
            d["errors"] = errors;
            return d;
        },
        py::arg("field"), py::arg("points"), py::arg("jobs") = 1,
        "Map an (n, dim) array of points; failed rows hold nan.");

    m.def(
        "inverse_map",
        [](const GreenField& f, const Coords& w) { return from_point(inverse_map(f, to_point(w))); },
        py::arg("field"), py::arg("w"));
    m.def("pole_scale", [](const GreenField& f) { return pole_scale(f); }, py::arg("field"));

    m.def(
        "trace",
        [](const GreenField& f, const Coords& x0, const py::kwargs& kw) {
            const FlowSettings s = flow_settings(kw);
            FlowTrace tr;
            {
                py::gil_scoped_release release;
                tr = trace_forward(f, to_point(x0), s);
            }
            std::vector<Point> xs;
            std::vector<double> ts, res;
            for (const auto& smp : tr.samples) {
                xs.push_back(smp.x);
                ts.push_back(smp.t);
                res.push_back(smp.level_residual);
            }
            py::dict d;
            d["t"] = ts;
            d["x"] = from_points(xs, f.dim());
            d["level_residual"] = res;
            d["direction"] = from_point(tr.direction);
            d["steps"] = tr.steps;
            d["truncated"] = tr.truncated;
            if (f.dim() == 3) d["weighted_length"] = weighted_length(f, tr);
            return d;
        },
        py::arg("field"), py::arg("x0"), "Flow line from x0 to the boundary.");

    m.def(
        "flux_through_patch",
        [](const GreenField& f, const Coords& axis, double angle, double t) {
            return flux_through_patch(f, ConePatch{to_point(axis), angle, t});
        },
        py::arg("field"), py::arg("axis"), py::arg("angle"), py::arg("t"));

    m.def("numeric_jacobian",
          [](const std::function<Coords(const Coords&)>& map, const Coords& x, double step) {
              const PointMap pm = [&](const Point& p) {
                  return to_point(map(Coords(p.coords().begin(), p.coords().end())));
              };
              return numeric_jacobian(pm, to_point(x), step);
          },
          py::arg("map"), py::arg("x"), py::arg("step") = 0.0);
    m.def("metric_report", [](const Matrix& j, double tol) { return metric_dict(metric_report(j, tol)); },
          py::arg("jacobian"), py::arg("tol") = 1e-3);
    m.def(
        "metric_report_at",
        [](const GreenField& f, const Coords& x, double tol) {
            const PointMap pm = [&](const Point& p) { return map_point(f, p).image; };
            MetricReport r;
            {
                py::gil_scoped_release release;
                r = metric_report_at(pm, to_point(x), tol);
            }
            return metric_dict(r);
        },
        py::arg("field"), py::arg("x"), py::arg("tol") = 1e-3, "Metric report of the constructed map at x.");
    m.def("symmetric_eigenvalues", &symmetric_eigenvalues, py::arg("c"));
    m.def("conformal_residual", &conformal_residual, py::arg("c"));
    m.def("weak_conformal_residual", &weak_conformal_residual, py::arg("c"));
    m.def("dilatation", &dilatation, py::arg("c"));
    m.def("classify", [](const Matrix& c, double tol) { return classify(c, tol).label(); }, py::arg("c"),
          py::arg("tol") = 1e-3);

    m.def(
        "lemma3_check",
        [](const std::function<double(const Coords&)>& u, const Coords& x0, double r, int n_probe) {
            const ScalarField f = [&](const Point& p) { return u(Coords(p.coords().begin(), p.coords().end())); };
            const Lemma3Report rep = lemma3_check(f, to_point(x0), r, n_probe);
            py::dict d;
            d["minimizer"] = from_point(rep.minimizer);
            d["lhs"] = rep.lhs;
            d["rhs"] = rep.rhs;
            d["margin"] = rep.margin;
            d["passed"] = rep.passed;
            return d;
        },
        py::arg("u"), py::arg("x0"), py::arg("r"), py::arg("n_probe") = 720);

    m.def(
        "critical_point_scan",
        [](const GreenField& f, const Rows& grid, double exclusion) {
            return scan_dict(critical_point_scan(f, to_points(grid), exclusion));
        },
        py::arg("field"), py::arg("grid"), py::arg("pole_exclusion") = 0.05);
    m.def(
        "annulus_scan",
        [](int n_radial, int n_angular, double exclusion) {
            const AnnulusFixture fx;
            return scan_dict(fx.scan(fx.grid(n_radial, n_angular), exclusion));
        },
        py::arg("n_radial") = 10, py::arg("n_angular") = 100, py::arg("pole_exclusion") = 0.05,
        "Critical-point scan of the annulus 1 < |x| < 2 with pole (1.5, 0).");

    m.def(
        "polar_grid",
        [](const DomainSpec& d, int nr, int na, double rmax) { return from_points(polar_grid(d, nr, na, rmax), 2); },
        py::arg("domain"), py::arg("n_radial"), py::arg("n_angular"), py::arg("radius_max") = 0.99);
    m.def(
        "spherical_grid",
        [](const DomainSpec& d, int nr, int np, int na, double rmax) {
            return from_points(spherical_grid(d, nr, np, na, rmax), 3);
        },
        py::arg("domain"), py::arg("n_radial"), py::arg("n_polar"), py::arg("n_azimuth"),
        py::arg("radius_max") = 0.99);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> all = {"greenmap"};
            all.insert(all.end(), args.begin(), args.end());
            std::vector<const char*> argv;
            for (const auto& a : all) argv.push_back(a.c_str());
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command line tool in-process; returns (exit code, stdout, stderr).");
}
