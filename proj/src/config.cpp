#include "hdiff/config.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "hdiff/errors.hpp"
#include "hdiff/rng.hpp"
#include "hdiff/version.hpp"

namespace hdiff {

using json = nlohmann::json;

namespace {

Vec to_vec(const json& arr) {
    Vec v(arr.size());
    int i = 0;
    for (const auto& e : arr) v[i++] = e.get<double>();
    return v;
}

json vec_json(const Vec& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

class Validator {
public:
    explicit Validator(const json& root) : root_(root) {}

    std::vector<std::string> errors;

    const json* at(const std::string& path, bool required = false) {
        const json* cur = &root_;
        std::string walked;
        std::istringstream ss(path);
        std::string key;
        while (std::getline(ss, key, '.')) {
            walked += walked.empty() ? key : "." + key;
            if (!cur->is_object() || !cur->contains(key)) {
                if (required) errors.push_back("missing required field '" + walked + "'");
                return nullptr;
            }
            cur = &(*cur)[key];
        }
        return cur;
    }

    double number(const std::string& path, double fallback, bool required = false) {
        const json* j = at(path, required);
        if (!j) return fallback;
        if (!j->is_number()) {
            errors.push_back("field '" + path + "' must be a number");
            return fallback;
        }
        return j->get<double>();
    }

    std::string str(const std::string& path, const std::string& fallback) {
        const json* j = at(path);
        if (!j) return fallback;
        if (!j->is_string()) {
            errors.push_back("field '" + path + "' must be a string");
            return fallback;
        }
        return j->get<std::string>();
    }

    std::optional<Vec> vec(const std::string& path) {
        const json* j = at(path);
        if (!j) return std::nullopt;
        if (!j->is_array()) {
            errors.push_back("field '" + path + "' must be an array of numbers");
            return std::nullopt;
        }
        for (const auto& e : *j)
            if (!e.is_number()) {
                errors.push_back("field '" + path + "' must be an array of numbers");
                return std::nullopt;
            }
        return to_vec(*j);
    }

private:
    const json& root_;
};

CloudSpec parse_cloud(Validator& v, const std::string& prefix, std::vector<std::string>& errs) {
    CloudSpec c;
    c.type = v.str(prefix + ".type", "gaussian_blob");
    if (c.type != "gaussian_blob" && c.type != "translate_of_mu" && c.type != "points")
        errs.push_back("field '" + prefix + ".type': unknown cloud type '" + c.type + "'");
    if (auto center = v.vec(prefix + ".center")) c.center = *center;
    c.spread = v.number(prefix + ".spread", 0.25);
    if (auto off = v.vec(prefix + ".offset")) c.offset = *off;
    if (const json* pts = v.at(prefix + ".points")) {
        if (!pts->is_array() || pts->empty() || !(*pts)[0].is_array()) {
            errs.push_back("field '" + prefix + ".points' must be an array of coordinate arrays");
        } else {
            const int n = static_cast<int>(pts->size());
            const int d = static_cast<int>((*pts)[0].size());
            c.points.resize(n, d);
            for (int i = 0; i < n; ++i) c.points.row(i) = to_vec((*pts)[i]).transpose();
        }
    }
    return c;
}

}  // namespace

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.manifold.name = "sphere";
    cfg.manifold.params["radius"] = 1.0;
    Vec start(2);
    start << M_PI / 2.0, 0.0;
    Vec vel(2);
    vel << 0.6, 0.8;
    cfg.family.curve_start = start;
    cfg.family.curve_velocity = vel;
    Vec c1(2), c2(2);
    c1 << M_PI / 2.0, -0.4;
    c2 << M_PI / 2.0, 0.4;
    cfg.ot.mu.center = c1;
    cfg.ot.nu.center = c2;
    cfg.ot.report_times = {0.1, 0.2, 0.3};
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError({std::string("not valid JSON: ") + e.what()});
    }
    if (!root.is_object()) throw SchemaError({"top level must be an object"});

    Validator v(root);
    ExperimentConfig cfg = default_config();

    static const char* known_top[] = {"manifold", "generator", "grid", "family",
                                      "ot",       "mc",        "output", "checks", "threads"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        bool known = false;
        for (const char* k : known_top) known |= it.key() == k;
        if (!known) v.errors.push_back("unknown top-level field '" + it.key() + "'");
    }

    // manifold
    cfg.manifold.params.clear();
    cfg.manifold.name = v.str("manifold.name", "");
    if (cfg.manifold.name.empty()) v.errors.push_back("missing required field 'manifold.name'");
    static const char* names[] = {"euclidean", "sphere", "hyperbolic", "brf_sphere"};
    bool name_ok = false;
    for (const char* n : names) name_ok |= cfg.manifold.name == n;
    if (!cfg.manifold.name.empty() && !name_ok)
        v.errors.push_back("field 'manifold.name': unknown manifold '" + cfg.manifold.name + "'");
    if (const json* params = v.at("manifold.params")) {
        if (!params->is_object())
            v.errors.push_back("field 'manifold.params' must be an object");
        else
            for (auto it = params->begin(); it != params->end(); ++it) {
                if (!it.value().is_number())
                    v.errors.push_back("field 'manifold.params." + it.key() +
                                       "' must be a number");
                else
                    cfg.manifold.params[it.key()] = it.value().get<double>();
            }
    }
    if (name_ok) {
        if (cfg.manifold.name == "sphere" && cfg.manifold.params.count("radius") &&
            cfg.manifold.params["radius"] <= 0.0)
            v.errors.push_back("field 'manifold.params.radius' must be positive");
        if (cfg.manifold.name == "hyperbolic" && cfg.manifold.params.count("curvature") &&
            cfg.manifold.params["curvature"] >= 0.0)
            v.errors.push_back("field 'manifold.params.curvature' must be negative");
        if (cfg.manifold.name == "euclidean" && cfg.manifold.params.count("dim") &&
            cfg.manifold.params["dim"] < 1.0)
            v.errors.push_back("field 'manifold.params.dim' must be >= 1");
    }

    // generator
    const std::string drift = v.str("generator.drift", "zero");
    if (drift == "zero") {
        cfg.manifold.drift.kind = DriftSpec::Kind::zero;
    } else if (drift == "constant") {
        cfg.manifold.drift.kind = DriftSpec::Kind::constant;
        if (auto val = v.vec("generator.value"))
            cfg.manifold.drift.value = *val;
        else
            v.errors.push_back("missing required field 'generator.value' for constant drift");
    } else if (drift == "gradient") {
        cfg.manifold.drift.kind = DriftSpec::Kind::gradient;
        cfg.manifold.drift.potential = v.str("generator.potential", "");
        if (cfg.manifold.drift.potential.empty())
            v.errors.push_back("missing required field 'generator.potential' for gradient drift");
    } else {
        v.errors.push_back("field 'generator.drift' must be zero|constant|gradient");
    }

    // grid
    cfg.grid.t0 = v.number("grid.t0", 0.0);
    cfg.grid.t_end = v.number("grid.t_end", 0.5);
    cfg.grid.n_steps = static_cast<int>(v.number("grid.n_steps", 500));
    if (cfg.grid.n_steps <= 0) v.errors.push_back("field 'grid.n_steps' must be positive");
    if (!(cfg.grid.t_end > cfg.grid.t0))
        v.errors.push_back("field 'grid.t_end' must exceed grid.t0");

    // family
    cfg.family.u0 = v.number("family.u0", cfg.family.u0);
    cfg.family.alpha = v.number("family.alpha", cfg.family.alpha);
    cfg.family.u_grid_size = static_cast<int>(v.number("family.u_grid_size", 0));
    cfg.family.du = v.number("family.du", cfg.family.du);
    if (cfg.family.u0 <= 0.0) v.errors.push_back("field 'family.u0' must be positive");
    if (cfg.family.alpha <= 0.0) v.errors.push_back("field 'family.alpha' must be positive");
    if (cfg.family.du <= 0.0) v.errors.push_back("field 'family.du' must be positive");
    if (cfg.family.alpha > cfg.family.u0)
        cfg.warnings.push_back(
            "family.alpha exceeds family.u0: degenerate single-anchor family (every member "
            "couples directly to the base)");
    if (auto s = v.vec("family.curve_start")) cfg.family.curve_start = *s;
    if (auto w = v.vec("family.curve_velocity")) cfg.family.curve_velocity = *w;

    // ot
    cfg.ot.n_points = static_cast<int>(v.number("ot.n_points", cfg.ot.n_points));
    if (cfg.ot.n_points < 1 || cfg.ot.n_points > 64)
        v.errors.push_back("field 'ot.n_points' must be in [1, 64] (exact solves only)");
    cfg.ot.p = v.number("ot.p", cfg.ot.p);
    if (cfg.ot.p <= 0.0) v.errors.push_back("field 'ot.p' must be positive");
    cfg.ot.profile = v.str("ot.profile", cfg.ot.profile);
    if (cfg.ot.profile != "power" && cfg.ot.profile != "linear")
        v.errors.push_back("field 'ot.profile' must be power|linear");
    cfg.ot.profile_p = v.number("ot.profile_p", cfg.ot.profile_p);
    cfg.ot.fan_alpha = v.number("ot.fan_alpha", cfg.ot.fan_alpha);
    if (cfg.ot.fan_alpha <= 0.0 || cfg.ot.fan_alpha > 1.0)
        v.errors.push_back("field 'ot.fan_alpha' must lie in (0, 1]");
    if (const json* rt = v.at("ot.report_times")) {
        if (!rt->is_array()) {
            v.errors.push_back("field 'ot.report_times' must be an array of times");
        } else {
            cfg.ot.report_times.clear();
            for (const auto& e : *rt)
                if (e.is_number())
                    cfg.ot.report_times.push_back(e.get<double>());
                else
                    v.errors.push_back("field 'ot.report_times' must contain numbers only");
        }
    }
    cfg.ot.mu = parse_cloud(v, "ot.mu", v.errors);
    cfg.ot.nu = parse_cloud(v, "ot.nu", v.errors);

    // mc
    cfg.mc.n_paths = static_cast<int>(v.number("mc.n_paths", cfg.mc.n_paths));
    if (cfg.mc.n_paths < 1) v.errors.push_back("field 'mc.n_paths' must be positive");
    if (const json* seed = v.at("mc.seed")) {
        if (!seed->is_number_unsigned() && !seed->is_number_integer())
            v.errors.push_back("field 'mc.seed' must be an integer");
        else {
            cfg.mc.seed = seed->get<std::uint64_t>();
            cfg.mc.seed_set = true;
        }
    } else {
        v.errors.push_back("missing required field 'mc.seed' (no wall-clock default)");
    }

    // output
    cfg.output.directory = v.str("output.directory", cfg.output.directory);
    if (const json* fmts = v.at("output.formats")) {
        if (!fmts->is_array()) {
            v.errors.push_back("field 'output.formats' must be an array");
        } else {
            cfg.output.formats.clear();
            for (const auto& e : *fmts) {
                const std::string f = e.is_string() ? e.get<std::string>() : "";
                if (f != "csv" && f != "json")
                    v.errors.push_back("field 'output.formats': unknown format");
                else
                    cfg.output.formats.push_back(f);
            }
        }
    }

    // checks
    cfg.checks.derivative_tol = v.number("checks.derivative_tol", cfg.checks.derivative_tol);
    cfg.checks.wnorm_tol = v.number("checks.wnorm_tol", cfg.checks.wnorm_tol);
    cfg.checks.ratio_tol = v.number("checks.ratio_tol", cfg.checks.ratio_tol);
    cfg.checks.monotone_tol = v.number("checks.monotone_tol", cfg.checks.monotone_tol);
    cfg.checks.coupling_rate_max =
        v.number("checks.coupling_rate_max", cfg.checks.coupling_rate_max);

    cfg.threads = static_cast<int>(v.number("threads", 1));

    if (!v.errors.empty()) throw SchemaError(v.errors);
    return cfg;
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["manifold"]["name"] = manifold.name;
    for (const auto& [k, val] : manifold.params) j["manifold"]["params"][k] = val;
    switch (manifold.drift.kind) {
        case DriftSpec::Kind::zero:
            j["generator"]["drift"] = "zero";
            break;
        case DriftSpec::Kind::constant:
            j["generator"]["drift"] = "constant";
            j["generator"]["value"] = vec_json(manifold.drift.value);
            break;
        case DriftSpec::Kind::gradient:
            j["generator"]["drift"] = "gradient";
            j["generator"]["potential"] = manifold.drift.potential;
            break;
    }
    j["grid"] = {{"t0", grid.t0}, {"t_end", grid.t_end}, {"n_steps", grid.n_steps}};
    j["family"] = {{"u0", family.u0},
                   {"alpha", family.alpha},
                   {"u_grid_size", family.u_grid_size},
                   {"du", family.du},
                   {"curve_start", vec_json(family.curve_start)},
                   {"curve_velocity", vec_json(family.curve_velocity)}};
    j["ot"] = {{"n_points", ot.n_points}, {"p", ot.p},           {"profile", ot.profile},
               {"profile_p", ot.profile_p}, {"fan_alpha", ot.fan_alpha}};
    j["ot"]["report_times"] = ot.report_times;
    j["mc"] = {{"n_paths", mc.n_paths}, {"seed", mc.seed}};
    j["threads"] = threads;
    return j.dump();
}

Mat make_cloud(const Manifold& m, const CloudSpec& spec, int n, std::uint64_t seed,
               std::uint64_t stream, const Mat* mu_points) {
    const int d = m.dim();
    if (spec.type == "points") {
        if (spec.points.rows() == 0) throw ConfigError("cloud: empty explicit point list");
        if (spec.points.cols() != d) throw ConfigError("cloud: point dimension mismatch");
        return spec.points;
    }
    if (spec.type == "translate_of_mu") {
        if (!mu_points) throw ConfigError("cloud: translate_of_mu needs the mu cloud");
        if (spec.offset.size() != d) throw ConfigError("cloud: offset dimension mismatch");
        Mat out = *mu_points;
        out.rowwise() += spec.offset.transpose();
        return out;
    }
    // gaussian_blob: exp of a tangent Gaussian at the center.
    Vec center = spec.center.size() == d ? spec.center : m.chart_center();
    Mat out(n, d);
    std::uint64_t k = 0;
    for (int i = 0; i < n; ++i) {
        for (int attempt = 0;; ++attempt) {
            Vec xi(d);
            for (int c = 0; c < d; ++c) xi[c] = gaussian_at(seed, stream, k++);
            const Vec v = m.frame(0.0, center) * xi * spec.spread;
            try {
                const Vec p = m.exp(0.0, center, v);
                if (m.in_domain(p)) {
                    out.row(i) = p.transpose();
                    break;
                }
            } catch (const Error&) {
            }
            if (attempt > 200) throw ConfigError("cloud: cannot place point inside domain");
        }
    }
    return out;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string RunManifest::to_json() const {
    json j;
    j["subcommand"] = subcommand;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["seed"] = seed;
    j["stream_ids"] = stream_ids;
    j["wall_time_ms"] = wall_time_ms;
    j["outputs"] = outputs;
    j["passed"] = passed;
    j["failures"] = failures;
    return j.dump(2) + "\n";
}

}  // namespace hdiff
