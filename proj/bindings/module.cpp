#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hdiff/config.hpp"
#include "hdiff/coupling.hpp"
#include "hdiff/errors.hpp"
#include "hdiff/ot.hpp"
#include "hdiff/rng.hpp"
#include "hdiff/run.hpp"
#include "hdiff/sde.hpp"
#include "hdiff/transport.hpp"
#include "hdiff/version.hpp"

namespace py = pybind11;
using namespace hdiff;

namespace {

DriftSpec drift_from_dict(const py::dict& d) {
    DriftSpec spec;
    const std::string type = d.contains("type") ? d["type"].cast<std::string>() : "zero";
    if (type == "zero") {
        spec.kind = DriftSpec::Kind::zero;
    } else if (type == "constant") {
        spec.kind = DriftSpec::Kind::constant;
        spec.value = d["value"].cast<Vec>();
    } else if (type == "gradient") {
        spec.kind = DriftSpec::Kind::gradient;
        spec.potential = d["potential"].cast<std::string>();
    } else {
        throw ConfigError("drift type must be zero|constant|gradient");
    }
    return spec;
}

// pybind11 holders are non-const; every bound method is const, and instances
// are immutable after construction.
std::shared_ptr<Manifold> manifold_from_args(const std::string& name,
                                             const std::map<std::string, double>& params,
                                             const py::dict& drift) {
    return std::const_pointer_cast<Manifold>(make_manifold(name, params, drift_from_dict(drift)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Diffusions, parallel/damped transport, coupled families and exact optimal "
              "transport on constant-curvature manifolds";
    m.attr("__version__") = kVersion;

    py::register_exception<DomainError>(m, "DomainError");
    py::register_exception<CutLocusError>(m, "CutLocusError");
    py::register_exception<StepTooLarge>(m, "StepTooLargeError");
    py::register_exception<MissingGridPoint>(m, "MissingGridPointError");
    py::register_exception<SchemaError>(m, "SchemaError");

    py::class_<Manifold, std::shared_ptr<Manifold>>(m, "Manifold")
        .def_property_readonly("dim", &Manifold::dim)
        .def_property_readonly("name", &Manifold::name)
        .def_property_readonly("time_dependent", &Manifold::time_dependent)
        .def_property_readonly("contraction_rate", &Manifold::contraction_rate)
        .def("in_domain", &Manifold::in_domain, py::arg("x"))
        .def("chart_center", &Manifold::chart_center)
        .def("metric", &Manifold::metric, py::arg("t"), py::arg("x"))
        .def("metric_dt", &Manifold::metric_dt, py::arg("t"), py::arg("x"))
        .def("christoffel", &Manifold::christoffel, py::arg("t"), py::arg("x"))
        .def("ricci", &Manifold::ricci, py::arg("t"), py::arg("x"))
        .def("drift", &Manifold::drift, py::arg("t"), py::arg("x"))
        .def("exp", &Manifold::exp, py::arg("t"), py::arg("x"), py::arg("v"))
        .def("log", &Manifold::log, py::arg("t"), py::arg("x"), py::arg("y"))
        .def("distance", &Manifold::distance, py::arg("t"), py::arg("x"), py::arg("y"))
        .def("transport", &Manifold::transport, py::arg("t"), py::arg("x"), py::arg("y"),
             py::arg("w"))
        .def("frame", &Manifold::frame, py::arg("t"), py::arg("x"))
        .def("norm", &Manifold::norm, py::arg("t"), py::arg("x"), py::arg("v"))
        .def("injectivity_guard", &Manifold::injectivity_guard, py::arg("t"), py::arg("x"),
             py::arg("y"));

    m.def("make_manifold", &manifold_from_args, py::arg("name"),
          py::arg("params") = std::map<std::string, double>{},
          py::arg("drift") = py::dict(),
          "Instances: euclidean {dim}, sphere {radius}, hyperbolic {curvature<0}, "
          "brf_sphere {initial_radius}. Drift: {'type': 'zero'|'constant'|'gradient', ...}.");

    py::class_<TimeGrid>(m, "TimeGrid")
        .def(py::init([](double t0, double t_end, int n_steps) {
                 TimeGrid g{t0, t_end, n_steps};
                 g.validate();
                 return g;
             }),
             py::arg("t0"), py::arg("t_end"), py::arg("n_steps"))
        .def_readonly("t0", &TimeGrid::t0)
        .def_readonly("t_end", &TimeGrid::t_end)
        .def_readonly("n_steps", &TimeGrid::n_steps)
        .def_property_readonly("dt", &TimeGrid::dt)
        .def("time", &TimeGrid::time, py::arg("k"));

    py::class_<NoisePath>(m, "NoisePath")
        .def_readonly("seed", &NoisePath::seed)
        .def_readonly("stream_id", &NoisePath::stream_id)
        .def_readonly("increments", &NoisePath::increments)
        .def("coarsen", &NoisePath::coarsen, py::arg("factor"));

    m.def("sample_noise", &NoisePath::sample, py::arg("seed"), py::arg("stream_id"),
          py::arg("grid"), py::arg("d"));
    m.def("gaussian_at", &gaussian_at, py::arg("seed"), py::arg("stream_id"), py::arg("n"),
          "n-th standard gaussian of the counter-based stream");

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("grid", &Trajectory::grid)
        .def_readonly("points", &Trajectory::points)
        .def_readonly("martingale_increments", &Trajectory::martingale_increments)
        .def_property_readonly("stopped_at",
                               [](const Trajectory& t) { return t.stopped_at; })
        .def_property_readonly("last_step", &Trajectory::last_step)
        .def("point", &Trajectory::point, py::arg("k"));

    m.def("simulate", &simulate, py::arg("manifold"), py::arg("x0"), py::arg("grid"),
          py::arg("noise"));
    m.def(
        "diffusion_step",
        [](const Manifold& m_, double t, const Vec& x, double dt, const Vec& xi) {
            return diffusion_step(m_, t, x, dt, xi);
        },
        py::arg("manifold"), py::arg("t"), py::arg("x"), py::arg("dt"), py::arg("xi"));
    m.def("simulate_coupled", &simulate_coupled, py::arg("base"), py::arg("y0"));
    m.def(
        "coupled_step",
        [](const Manifold& m_, double t, const Vec& x, const Vec& y, const Vec& dm, double dt) {
            return coupled_step(m_, t, x, y, dm, dt);
        },
        py::arg("manifold"), py::arg("t"), py::arg("x"), py::arg("y"), py::arg("dm_x"),
        py::arg("dt"));

    py::enum_<TransportKind>(m, "TransportKind")
        .value("parallel", TransportKind::parallel)
        .value("damped", TransportKind::damped);

    py::class_<TransportOperator>(m, "TransportOperator")
        .def_readonly("kind", &TransportOperator::kind)
        .def_readonly("maps", &TransportOperator::maps)
        .def("isometry_defect", &TransportOperator::isometry_defect, py::arg("k"));

    m.def("parallel_transport_path", &parallel_transport_path, py::arg("trajectory"),
          py::keep_alive<0, 1>());
    m.def("damped_transport_path", &damped_transport_path, py::arg("trajectory"),
          py::keep_alive<0, 1>());
    m.def("w_norm_profile", &w_norm_profile, py::arg("op"), py::arg("probe"));

    py::class_<CurveC1>(m, "CurveC1")
        .def_readonly("u0", &CurveC1::u0)
        .def("eval", [](const CurveC1& c, double u) { return c.eval(u); }, py::arg("u"))
        .def("derivative", [](const CurveC1& c, double u) { return c.derivative(u); },
             py::arg("u"))
        .def_static("geodesic", &CurveC1::geodesic, py::arg("manifold"), py::arg("t"),
                    py::arg("x"), py::arg("v"), py::arg("u0"));

    py::class_<TangentVector>(m, "TangentVector")
        .def_readonly("base", &TangentVector::base)
        .def_readonly("components", &TangentVector::components)
        .def_readonly("time", &TangentVector::time);

    py::class_<HorizontalFamily>(m, "HorizontalFamily")
        .def_readonly("u_grid", &HorizontalFamily::u_grid)
        .def_readonly("alpha", &HorizontalFamily::alpha)
        .def_readonly("members", &HorizontalFamily::members)
        .def("member", &HorizontalFamily::member, py::arg("u"),
             py::return_value_policy::reference_internal)
        .def("index_of", &HorizontalFamily::index_of, py::arg("u"));

    m.def("build_family", &build_family, py::arg("manifold"), py::arg("curve"),
          py::arg("u_grid"), py::arg("alpha"), py::arg("grid"), py::arg("base_noise"));
    m.def("derivative_fd", &derivative_fd, py::arg("family"), py::arg("k"), py::arg("u"),
          py::arg("du"));
    m.def("deformed_derivative", &deformed_derivative, py::arg("family"), py::arg("u"),
          py::arg("k"));
    m.def(
        "derivative_check",
        [](const HorizontalFamily& fam, int k, double u, double du) {
            const DerivativeCheckRow row = derivative_check(fam, k, u, du);
            py::dict d;
            d["u"] = row.u;
            d["t"] = row.t;
            d["fd_norm"] = row.fd_norm;
            d["w_norm"] = row.w_norm;
            d["rel_error"] = row.rel_error;
            return d;
        },
        py::arg("family"), py::arg("k"), py::arg("u"), py::arg("du"));

    py::class_<EmpiricalMeasure>(m, "EmpiricalMeasure")
        .def(py::init([](Mat points, std::optional<Vec> weights) {
                 if (!weights) return EmpiricalMeasure::uniform(std::move(points));
                 EmpiricalMeasure mu;
                 mu.points = std::move(points);
                 mu.weights = *weights;
                 mu.validate();
                 return mu;
             }),
             py::arg("points"), py::arg("weights") = py::none())
        .def_readonly("points", &EmpiricalMeasure::points)
        .def_readonly("weights", &EmpiricalMeasure::weights);

    py::class_<CostProfile>(m, "CostProfile")
        .def_static("power", &CostProfile::power, py::arg("p"))
        .def_static("custom", &CostProfile::custom, py::arg("evaluator"))
        .def("__call__", &CostProfile::operator(), py::arg("r"))
        .def("check_monotone", &CostProfile::check_monotone, py::arg("r_max"),
             py::arg("n") = 256);

    py::class_<TransportPlan>(m, "TransportPlan")
        .def_readonly("coupling", &TransportPlan::coupling)
        .def_readonly("cost_value", &TransportPlan::cost_value)
        .def_readonly("assignment", &TransportPlan::assignment)
        .def_readonly("potential_u", &TransportPlan::potential_u)
        .def_readonly("potential_v", &TransportPlan::potential_v);

    m.def(
        "cost_matrix",
        [](const Manifold& m_, double t, const EmpiricalMeasure& mu,
           const EmpiricalMeasure& nu, const CostProfile& profile) {
            return cost_matrix(m_, t, mu, nu, profile);
        },
        py::arg("manifold"), py::arg("t"), py::arg("mu"), py::arg("nu"), py::arg("profile"));
    m.def("solve_exact", &solve_exact, py::arg("costs"), py::arg("weights_mu"),
          py::arg("weights_nu"));
    m.def(
        "wasserstein_p",
        [](const Manifold& m_, double t, const EmpiricalMeasure& mu,
           const EmpiricalMeasure& nu, double p) { return wasserstein_p(m_, t, mu, nu, p); },
        py::arg("manifold"), py::arg("t"), py::arg("mu"), py::arg("nu"), py::arg("p"));
    m.def("evolve_pair_fan", &evolve_pair_fan, py::arg("manifold"), py::arg("x"), py::arg("y"),
          py::arg("grid"), py::arg("noise"), py::arg("fan_alpha") = 0.125);

    py::class_<ContractionParams>(m, "ContractionParams")
        .def(py::init<>())
        .def_readwrite("p", &ContractionParams::p)
        .def_readwrite("profile", &ContractionParams::profile)
        .def_readwrite("report_steps", &ContractionParams::report_steps)
        .def_readwrite("n_replicas", &ContractionParams::n_replicas)
        .def_readwrite("seed", &ContractionParams::seed)
        .def_readwrite("fan_alpha", &ContractionParams::fan_alpha)
        .def_readwrite("threads", &ContractionParams::threads)
        .def_readwrite("rate_k", &ContractionParams::rate_k);

    py::class_<ContractionReport>(m, "ContractionReport")
        .def_readonly("times", &ContractionReport::times)
        .def_readonly("w_c", &ContractionReport::w_c)
        .def_readonly("w_p", &ContractionReport::w_p)
        .def_readonly("bound", &ContractionReport::bound)
        .def_readonly("ratio", &ContractionReport::ratio)
        .def_readonly("w_c0", &ContractionReport::w_c0)
        .def_readonly("w_p0", &ContractionReport::w_p0)
        .def_readonly("max_ratio", &ContractionReport::max_ratio)
        .def_readonly("monotone_residual", &ContractionReport::monotone_residual)
        .def_readonly("certificate_ok", &ContractionReport::certificate_ok)
        .def_readonly("n_effective", &ContractionReport::n_effective)
        .def("summary_json", &ContractionReport::summary_json);

    m.def("contraction_experiment", &contraction_experiment, py::arg("manifold"),
          py::arg("mu0"), py::arg("nu0"), py::arg("grid"), py::arg("params"));
    m.def("isotone_nonincreasing", &isotone_nonincreasing, py::arg("series"));

    m.def("parse_config_json", [](const std::string& text) {
        const ExperimentConfig cfg = parse_config(text);
        py::dict d;
        d["manifold"] = cfg.manifold.name;
        d["seed"] = cfg.mc.seed;
        d["n_paths"] = cfg.mc.n_paths;
        d["warnings"] = cfg.warnings;
        d["config_hash"] = fnv1a_hex(cfg.canonical_json());
        return d;
    });
    m.def(
        "run_experiment",
        [](const std::string& subcommand, const std::string& config_json,
           const std::string& out_dir) {
            const ExperimentConfig cfg = parse_config(config_json);
            const RunManifest man = run_subcommand(subcommand, cfg, out_dir);
            py::dict d;
            d["passed"] = man.passed;
            d["outputs"] = man.outputs;
            d["failures"] = man.failures;
            d["config_hash"] = man.config_hash;
            return d;
        },
        py::arg("subcommand"), py::arg("config_json"), py::arg("out_dir"),
        "Run one experiment subcommand (simulate | transport | family | coupling | "
        "ot-contract | selftest) on a JSON config string.");
}
