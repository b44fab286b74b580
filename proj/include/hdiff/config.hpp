#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hdiff/manifold.hpp"
#include "hdiff/sde.hpp"

namespace hdiff {

// Point-cloud specification for the transport experiments.
struct CloudSpec {
    std::string type = "gaussian_blob";  // gaussian_blob | translate_of_mu | points
    Vec center;                          // gaussian_blob
    double spread = 0.25;                // gaussian_blob
    Vec offset;                          // translate_of_mu (chart offset)
    Mat points;                          // points (explicit list)
};

struct FamilyConfig {
    double u0 = 0.3;
    double alpha = 1e-2;
    int u_grid_size = 0;  // extra evaluation points on top of the alpha-grid
    double du = 1e-3;
    // Geodesic initial curve phi(u) = exp_start(u * velocity).
    Vec curve_start;
    Vec curve_velocity;
};

struct OtConfig {
    int n_points = 32;
    double p = 2.0;
    std::string profile = "power";  // power | linear (phi(r) = r)
    double profile_p = 2.0;
    double fan_alpha = 0.125;
    std::vector<double> report_times;
    CloudSpec mu, nu;
};

struct McConfig {
    int n_paths = 100;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"csv", "json"};
};

struct ChecksConfig {
    double derivative_tol = 0.05;   // family: mean fd-vs-W relative error
    double wnorm_tol = 0.01;        // transport: profile vs exp(-k t / 2)
    double ratio_tol = 1.1;         // ot-contract: W_p ratio to the bound
    double monotone_tol = 0.02;     // ot-contract: isotone residual / W_c(0)
    double coupling_rate_max = 0.05;  // coupling: fitted exponential rate
};

struct ExperimentConfig {
    ManifoldSpec manifold;
    TimeGrid grid{0.0, 0.5, 500};
    FamilyConfig family;
    OtConfig ot;
    McConfig mc;
    OutputConfig output;
    ChecksConfig checks;
    int threads = 1;
    std::vector<std::string> warnings;  // collected during validation

    std::string canonical_json() const;  // normalized dump, hashed by manifests
};

// Parse + validate a JSON config. Collects every schema violation before
// throwing SchemaError; returns warnings inside the config.
ExperimentConfig parse_config(const std::string& text);

ExperimentConfig default_config();

// Realize a cloud spec as N points on the manifold (stream-seeded).
Mat make_cloud(const Manifold& m, const CloudSpec& spec, int n, std::uint64_t seed,
               std::uint64_t stream, const Mat* mu_points);

struct RunManifest {
    std::string subcommand;
    std::string config_hash;
    std::string version;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> stream_ids;
    double wall_time_ms = 0.0;
    std::vector<std::string> outputs;
    bool passed = true;
    std::vector<std::string> failures;

    std::string to_json() const;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace hdiff
