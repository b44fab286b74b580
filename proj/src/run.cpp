#include "hdiff/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hdiff/coupling.hpp"
#include "hdiff/errors.hpp"
#include "hdiff/ot.hpp"
#include "hdiff/parallel.hpp"
#include "hdiff/rng.hpp"
#include "hdiff/sde.hpp"
#include "hdiff/transport.hpp"
#include "hdiff/version.hpp"

namespace hdiff {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class RunContext {
public:
    RunContext(const std::string& name, const ExperimentConfig& cfg, const std::string& out_dir)
        : cfg_(cfg), dir_(out_dir), start_(std::chrono::steady_clock::now()) {
        manifest_.subcommand = name;
        manifest_.config_hash = fnv1a_hex(cfg.canonical_json());
        manifest_.version = kVersion;
        manifest_.seed = cfg.mc.seed;
        fs::create_directories(dir_);
        write_manifest();  // manifest first; finalized again at the end
    }

    const ExperimentConfig& cfg() const { return cfg_; }

    bool wants(const std::string& fmt) const {
        for (const auto& f : cfg_.output.formats)
            if (f == fmt) return true;
        return false;
    }

    std::ofstream open(const std::string& filename) {
        manifest_.outputs.push_back(filename);
        return std::ofstream(dir_ / filename, std::ios::binary);
    }

    void stream(std::uint64_t id) { manifest_.stream_ids.push_back(id); }

    void require(bool ok, const std::string& what) {
        if (!ok) {
            manifest_.passed = false;
            manifest_.failures.push_back(what);
        }
    }

    RunManifest finish() {
        manifest_.wall_time_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
                .count();
        write_manifest();
        return manifest_;
    }

private:
    void write_manifest() {
        std::ofstream os(dir_ / "manifest.json", std::ios::binary);
        os << manifest_.to_json();
    }

    const ExperimentConfig& cfg_;
    fs::path dir_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

Vec start_point(const Manifold& m, const ExperimentConfig& cfg) {
    if (cfg.family.curve_start.size() == m.dim()) return cfg.family.curve_start;
    return m.chart_center();
}

Vec curve_velocity(const Manifold& m, const ExperimentConfig& cfg) {
    if (cfg.family.curve_velocity.size() == m.dim()) return cfg.family.curve_velocity;
    Vec v = Vec::Zero(m.dim());
    v[0] = 1.0;
    return v;
}

// Least-squares slope through the origin of y over x.
double origin_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// u-grid of alpha multiples up to u0, with u0 itself appended when it is not
// a multiple, plus any extra points (deduplicated).
std::vector<double> family_u_grid(double u0, double alpha, const std::vector<double>& extra) {
    std::vector<double> grid = {0.0};
    for (int n = 1; n * alpha < u0 - 1e-9; ++n) grid.push_back(n * alpha);
    grid.push_back(u0);
    for (const double u : extra)
        if (u > 1e-12 && u < u0 + 1e-12) grid.push_back(std::min(u, u0));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-10; }),
               grid.end());
    return grid;
}

json grid_json(const TimeGrid& g) {
    return {{"t0", g.t0}, {"t_end", g.t_end}, {"n_steps", g.n_steps}, {"dt", g.dt()}};
}

}  // namespace

RunManifest run_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunContext ctx("simulate", cfg, out_dir);
    const auto m = make_manifold(cfg.manifold);
    const Vec x0 = start_point(*m, cfg);
    const TimeGrid& grid = cfg.grid;

    std::vector<Trajectory> trajs(cfg.mc.n_paths);
    parallel_for(cfg.mc.n_paths, cfg.threads, [&](int i) {
        trajs[i] = simulate(m, x0, grid, NoisePath::sample(cfg.mc.seed, i, grid, m->dim()));
    });
    for (int i = 0; i < cfg.mc.n_paths; ++i) ctx.stream(i);

    if (ctx.wants("csv")) {
        auto os = ctx.open("trajectory.csv");
        trajs.front().write_csv(os);
    }

    int stopped = 0;
    double mean_sq_dist = 0.0;
    int alive = 0;
    for (const auto& tr : trajs) {
        if (tr.stopped_at) {
            ++stopped;
        } else {
            mean_sq_dist += std::pow(m->distance(grid.t_end, x0, tr.point(grid.n_steps)), 2);
            ++alive;
        }
    }
    if (alive > 0) mean_sq_dist /= alive;

    if (ctx.wants("json")) {
        json j;
        j["grid"] = grid_json(grid);
        j["n_paths"] = cfg.mc.n_paths;
        j["stopped_paths"] = stopped;
        j["mean_squared_distance_at_t_end"] = mean_sq_dist;
        auto os = ctx.open("summary.json");
        os << j.dump(2) << "\n";
    }
    ctx.require(stopped < cfg.mc.n_paths, "all paths exited the chart");
    return ctx.finish();
}

RunManifest run_transport(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunContext ctx("transport", cfg, out_dir);
    const auto m = make_manifold(cfg.manifold);
    const Vec x0 = start_point(*m, cfg);
    const TimeGrid& grid = cfg.grid;
    const int n = grid.n_steps;
    const bool zero_drift = cfg.manifold.drift.kind == DriftSpec::Kind::zero;
    const double k_rate = m->contraction_rate();

    struct PathResult {
        double parallel_defect;
        double damped_dev;  // max_t |profile / exp(-k t / 2) - 1|
        bool stopped;
    };
    std::vector<PathResult> results(cfg.mc.n_paths);
    std::vector<Trajectory> first_traj(1);

    parallel_for(cfg.mc.n_paths, cfg.threads, [&](int i) {
        const Trajectory traj =
            simulate(m, x0, grid, NoisePath::sample(cfg.mc.seed, i, grid, m->dim()));
        const TransportOperator par = parallel_transport_path(traj);
        const TransportOperator damp = damped_transport_path(traj);
        const Vec probe = m->frame(grid.t0, x0).col(0);
        const auto profile = w_norm_profile(damp, probe);
        PathResult r{};
        r.stopped = traj.stopped_at.has_value();
        const int last = traj.last_step();
        for (int k = 0; k <= last; ++k)
            r.parallel_defect = std::max(r.parallel_defect, par.isometry_defect(k));
        if (zero_drift)
            for (int k = 0; k <= last; ++k) {
                const double target = std::exp(-0.5 * k_rate * (grid.time(k) - grid.t0));
                r.damped_dev = std::max(r.damped_dev, std::abs(profile[k] / target - 1.0));
            }
        results[i] = r;
        if (i == 0) first_traj[0] = traj;
    });
    for (int i = 0; i < cfg.mc.n_paths; ++i) ctx.stream(i);

    if (ctx.wants("csv")) {
        auto os1 = ctx.open("parallel_norms.csv");
        parallel_transport_path(first_traj[0]).write_norms_csv(os1);
        auto os2 = ctx.open("damped_norms.csv");
        damped_transport_path(first_traj[0]).write_norms_csv(os2);
    }

    double max_defect = 0.0, mean_dev = 0.0;
    for (const auto& r : results) {
        max_defect = std::max(max_defect, r.parallel_defect);
        mean_dev += r.damped_dev / results.size();
    }
    if (ctx.wants("json")) {
        json j;
        j["grid"] = grid_json(grid);
        j["max_parallel_isometry_defect"] = max_defect;
        j["mean_damped_profile_deviation"] = mean_dev;
        j["rate_k"] = k_rate;
        auto os = ctx.open("summary.json");
        os << j.dump(2) << "\n";
    }

    // Isometry-defect budget: O(dt) with an order-one constant on the shipped
    // instances.
    ctx.require(max_defect <= 100.0 * grid.dt(), "parallel transport isometry defect too large");
    if (zero_drift && m->has_closed_form_geodesics())
        ctx.require(mean_dev <= cfg.checks.wnorm_tol,
                    "damped norm profile deviates from exp(-k t / 2)");
    return ctx.finish();
}

RunManifest run_family(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunContext ctx("family", cfg, out_dir);
    const auto m = make_manifold(cfg.manifold);
    const Vec x0 = start_point(*m, cfg);
    const Vec vel = curve_velocity(*m, cfg);
    const TimeGrid& grid = cfg.grid;
    const double u0 = cfg.family.u0;
    const double alpha = cfg.family.alpha;
    const double du = cfg.family.du;

    // Evaluation points sit mid-cell between anchors; their +du partners ride
    // along in the same grid.
    std::vector<double> evals;
    for (const double q : {0.25, 0.5, 0.75}) {
        const double anchor = alpha_anchor(q * u0, alpha);
        const double u = anchor + 0.5 * alpha;
        if (u + du < u0) evals.push_back(u);
    }
    if (evals.empty()) evals.push_back(0.5 * u0);
    std::vector<double> extra = evals;
    for (const double u : evals) extra.push_back(u + du);
    if (cfg.family.u_grid_size > 1)
        for (int i = 0; i < cfg.family.u_grid_size; ++i)
            extra.push_back(u0 * i / (cfg.family.u_grid_size - 1));
    const std::vector<double> u_grid = family_u_grid(u0, alpha, extra);

    const CurveC1 curve = CurveC1::geodesic(m, grid.t0, x0, vel, u0);
    const std::vector<int> report_steps = {grid.n_steps / 4, grid.n_steps / 2,
                                           3 * grid.n_steps / 4, grid.n_steps};

    struct PathRows {
        std::vector<DerivativeCheckRow> rows;
    };
    std::vector<PathRows> per_path(cfg.mc.n_paths);
    std::vector<HorizontalFamily> first_family(1);

    parallel_for(cfg.mc.n_paths, cfg.threads, [&](int i) {
        const NoisePath noise = NoisePath::sample(cfg.mc.seed, i, grid, m->dim());
        const HorizontalFamily fam = build_family(m, curve, u_grid, alpha, grid, noise);
        for (const double u : evals)
            for (const int k : report_steps) {
                try {
                    per_path[i].rows.push_back(derivative_check(fam, k, u, du));
                } catch (const MissingGridPoint&) {
                    // member stopped before this report time
                }
            }
        if (i == 0) first_family[0] = fam;
    });
    for (int i = 0; i < cfg.mc.n_paths; ++i) ctx.stream(i);

    std::vector<DerivativeCheckRow> all_rows;
    for (const auto& pr : per_path)
        all_rows.insert(all_rows.end(), pr.rows.begin(), pr.rows.end());

    if (ctx.wants("csv")) {
        auto os1 = ctx.open("family.csv");
        write_family_csv(first_family[0], os1);
        auto os2 = ctx.open("derivative_check.csv");
        write_derivative_report_csv(all_rows, os2);
    }

    double mean_err = 0.0;
    int n_end = 0;
    for (const auto& r : all_rows)
        if (std::abs(r.t - grid.t_end) < 1e-12) {
            mean_err += r.rel_error;
            ++n_end;
        }
    if (n_end > 0) mean_err /= n_end;

    if (ctx.wants("json")) {
        json j;
        j["grid"] = grid_json(grid);
        j["u0"] = u0;
        j["alpha"] = alpha;
        j["du"] = du;
        j["eval_points"] = evals;
        j["mean_rel_error_at_t_end"] = mean_err;
        j["rows"] = all_rows.size();
        auto os = ctx.open("summary.json");
        os << j.dump(2) << "\n";
    }

    ctx.require(n_end > 0, "no member survived to t_end");
    ctx.require(mean_err <= cfg.checks.derivative_tol,
                "mean derivative identity error exceeds tolerance");
    return ctx.finish();
}

RunManifest run_coupling(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunContext ctx("coupling", cfg, out_dir);
    const auto m = make_manifold(cfg.manifold);
    const Vec x0 = start_point(*m, cfg);
    const Vec vel = curve_velocity(*m, cfg);
    const TimeGrid& grid = cfg.grid;
    const int n = grid.n_steps;

    const Vec y0 = m->exp(grid.t0, x0, cfg.family.u0 * vel);
    const double rho0 = m->distance(grid.t0, x0, y0);
    ctx.require(rho0 > 0.0, "coupled pair must start at positive distance");

    // Envelope over paths of rho(t)/rho(0), plus the mean profile.
    std::vector<std::vector<double>> ratios(cfg.mc.n_paths);
    parallel_for(cfg.mc.n_paths, cfg.threads, [&](int i) {
        const NoisePath noise = NoisePath::sample(cfg.mc.seed, i, grid, m->dim());
        const Trajectory base = simulate(m, x0, grid, noise);
        const Trajectory coupled = simulate_coupled(base, y0);
        const int last = std::min(base.last_step(), coupled.last_step());
        std::vector<double>& r = ratios[i];
        r.resize(last + 1);
        for (int k = 0; k <= last; ++k)
            r[k] = m->distance(grid.time(k), base.point(k), coupled.point(k)) / rho0;
    });
    for (int i = 0; i < cfg.mc.n_paths; ++i) ctx.stream(i);

    std::vector<double> envelope(n + 1, 0.0), mean(n + 1, 0.0);
    std::vector<int> alive(n + 1, 0);
    for (const auto& r : ratios)
        for (std::size_t k = 0; k < r.size(); ++k) {
            envelope[k] = std::max(envelope[k], r[k]);
            mean[k] += r[k];
            ++alive[k];
        }
    for (int k = 0; k <= n; ++k)
        if (alive[k] > 0) mean[k] /= alive[k];

    // Fit log envelope = C t through the origin; the pathwise bound holds
    // with this C by construction of the fit direction.
    std::vector<double> ts, logs;
    for (int k = 1; k <= n; ++k)
        if (alive[k] > 0 && envelope[k] > 0.0) {
            ts.push_back(grid.time(k) - grid.t0);
            logs.push_back(std::log(envelope[k]));
        }
    const double fitted_c = origin_slope(ts, logs);

    // Violation diagnostic against the configured bound rate (the curvature
    // bound magnitude plus one by default).
    const double config_c = std::abs(m->contraction_rate()) + 1.0;
    int violations = 0;
    long total = 0;
    for (const auto& r : ratios)
        for (std::size_t k = 1; k < r.size(); ++k) {
            violations += r[k] > std::exp(config_c * (grid.time(k) - grid.t0)) ? 1 : 0;
            ++total;
        }

    if (ctx.wants("csv")) {
        auto os = ctx.open("coupling_distance.csv");
        os << "step,t,rho_mean_ratio,rho_max_ratio\n";
        char buf[120];
        for (int k = 0; k <= n; ++k) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", k, grid.time(k), mean[k],
                          envelope[k]);
            os << buf;
        }
    }
    if (ctx.wants("json")) {
        json j;
        j["grid"] = grid_json(grid);
        j["rho0"] = rho0;
        j["fitted_C"] = fitted_c;
        j["config_C"] = config_c;
        j["violation_rate"] = total > 0 ? static_cast<double>(violations) / total : 0.0;
        j["max_ratio"] = *std::max_element(envelope.begin(), envelope.end());
        auto os = ctx.open("summary.json");
        os << j.dump(2) << "\n";
    }

    ctx.require(fitted_c <= cfg.checks.coupling_rate_max,
                "fitted coupling distance rate exceeds threshold");
    return ctx.finish();
}

RunManifest run_ot_contract(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunContext ctx("ot-contract", cfg, out_dir);
    const auto m = make_manifold(cfg.manifold);
    const TimeGrid& grid = cfg.grid;

    const Mat mu_pts =
        make_cloud(*m, cfg.ot.mu, cfg.ot.n_points, cfg.mc.seed, kAuxStreamBase, nullptr);
    const Mat nu_pts =
        make_cloud(*m, cfg.ot.nu, cfg.ot.n_points, cfg.mc.seed, kAuxStreamBase + 1, &mu_pts);
    const EmpiricalMeasure mu0 = EmpiricalMeasure::uniform(mu_pts);
    const EmpiricalMeasure nu0 = EmpiricalMeasure::uniform(nu_pts);
    ctx.stream(kAuxStreamBase);
    ctx.stream(kAuxStreamBase + 1);

    ContractionParams params;
    params.p = cfg.ot.p;
    params.profile = cfg.ot.profile == "linear" ? CostProfile::power(1.0)
                                                : CostProfile::power(cfg.ot.profile_p);
    params.n_replicas = cfg.mc.n_paths;
    params.seed = cfg.mc.seed;
    params.fan_alpha = cfg.ot.fan_alpha;
    params.threads = cfg.threads;
    params.rate_k = m->contraction_rate();
    for (const double t : cfg.ot.report_times) {
        const int k = static_cast<int>(std::lround((t - grid.t0) / grid.dt()));
        params.report_steps.push_back(std::max(0, std::min(k, grid.n_steps)));
    }

    const ContractionReport rep = contraction_experiment(m, mu0, nu0, grid, params);

    if (ctx.wants("csv")) {
        auto os = ctx.open("contraction.csv");
        rep.write_csv(os);
    }
    if (ctx.wants("json")) {
        auto os = ctx.open("summary.json");
        os << rep.summary_json();
    }

    ctx.require(rep.certificate_ok, "evolved pairing is not a feasible upper bound");
    ctx.require(rep.max_ratio <= cfg.checks.ratio_tol, "W_p exceeds the contraction bound");
    ctx.require(rep.monotone_residual <= cfg.checks.monotone_tol,
                "W_c series is not non-increasing within tolerance");
    return ctx.finish();
}

RunManifest run_selftest(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunContext ctx("selftest", cfg, out_dir);
    json report;

    {  // noise determinism
        TimeGrid g{0.0, 1.0, 64};
        const NoisePath a = NoisePath::sample(7, 3, g, 2);
        const NoisePath b = NoisePath::sample(7, 3, g, 2);
        ctx.require(a.increments == b.increments, "noise streams are not deterministic");
        report["noise_deterministic"] = a.increments == b.increments;
    }
    {  // sphere exp/log round trip
        const auto sph = make_manifold("sphere", {{"radius", 1.0}});
        Vec x(2);
        x << 1.1, 0.4;
        Vec v(2);
        v << 0.3, -0.5;
        const Vec back = sph->log(0.0, x, sph->exp(0.0, x, v));
        const double err = (back - v).norm();
        ctx.require(err < 1e-10, "sphere exp/log round trip");
        report["sphere_roundtrip_error"] = err;
    }
    {  // transport isometry
        const auto sph = make_manifold("sphere", {{"radius", 1.0}});
        Vec x(2), y(2), w(2);
        x << 1.3, -0.2;
        y << 1.7, 0.9;
        w << 0.7, 0.2;
        const double a = sph->norm(0.0, x, w);
        const double b = sph->norm(0.0, y, sph->transport(0.0, x, y, w));
        ctx.require(std::abs(a - b) < 1e-12, "sphere transport isometry");
        report["transport_isometry_defect"] = std::abs(a - b);
    }
    {  // euclidean family rigidity
        const auto eu = make_manifold("euclidean", {{"dim", 2.0}});
        TimeGrid g{0.0, 0.1, 50};
        Vec x0 = Vec::Zero(2), v = Vec::Ones(2);
        const CurveC1 curve = CurveC1::geodesic(eu, 0.0, x0, v, 0.2);
        const auto fam = build_family(eu, curve, {0.0, 0.1, 0.2}, 0.1, g,
                                      NoisePath::sample(cfg.mc.seed, 0, g, 2));
        double dev = 0.0;
        for (int k = 0; k <= g.n_steps; ++k)
            dev = std::max(dev, ((fam.members[2].point(k) - curve.eval(0.2)) -
                                 (fam.members[0].point(k) - curve.eval(0.0)))
                                    .cwiseAbs()
                                    .maxCoeff());
        ctx.require(dev < 1e-12, "euclidean family is not a rigid translation");
        report["euclidean_family_deviation"] = dev;
    }
    {  // assignment vs brute force, n = 4
        Mat c(4, 4);
        std::uint64_t k = 0;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) c(i, j) = std::abs(gaussian_at(cfg.mc.seed, 99, k++));
        const Vec w = Vec::Constant(4, 0.25);
        const TransportPlan plan = solve_exact(c, w, w);
        std::vector<int> perm = {0, 1, 2, 3};
        double best = 1e300;
        do {
            double s = 0.0;
            for (int i = 0; i < 4; ++i) s += c(i, perm[i]);
            best = std::min(best, s / 4.0);
        } while (std::next_permutation(perm.begin(), perm.end()));
        ctx.require(std::abs(plan.cost_value - best) < 1e-12, "assignment vs brute force");
        report["assignment_gap"] = std::abs(plan.cost_value - best);
    }

    if (ctx.wants("json")) {
        auto os = ctx.open("selftest.json");
        os << report.dump(2) << "\n";
    }
    return ctx.finish();
}

RunManifest run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                           const std::string& out_dir) {
    if (name == "simulate") return run_simulate(cfg, out_dir);
    if (name == "transport") return run_transport(cfg, out_dir);
    if (name == "family") return run_family(cfg, out_dir);
    if (name == "coupling") return run_coupling(cfg, out_dir);
    if (name == "ot-contract") return run_ot_contract(cfg, out_dir);
    if (name == "selftest") return run_selftest(cfg, out_dir);
    throw ConfigError("unknown subcommand '" + name + "'");
}

}  // namespace hdiff
