#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hdiff/coupling.hpp"
#include "hdiff/sde.hpp"
#include "hdiff/types.hpp"

namespace hdiff {

struct EmpiricalMeasure {
    Mat points;   // N x d
    Vec weights;  // nonnegative, sums to 1

    static EmpiricalMeasure uniform(Mat points);
    int size() const { return static_cast<int>(points.rows()); }
    Vec point(int i) const { return points.row(i).transpose(); }
    void validate(const Manifold* m = nullptr) const;
};

// Nondecreasing cost profile phi: distances to costs, c = phi(rho).
struct CostProfile {
    std::string name = "power";  // power | custom
    double p = 2.0;
    std::function<double(double)> evaluator;

    static CostProfile power(double p);
    static CostProfile custom(std::function<double(double)> f);
    double operator()(double r) const;
    // Monotonicity probe on a grid of radii.
    bool check_monotone(double r_max, int n = 256) const;
};

struct TransportPlan {
    Mat coupling;  // N x M, marginals match the input weights
    double cost_value = 0.0;
    std::vector<int> assignment;  // column per row when the plan is a permutation
    Vec potential_u, potential_v;  // duals certifying optimality

    void check_marginals(const Vec& wmu, const Vec& wnu, double tol = 1e-10) const;
};

Mat cost_matrix(const Manifold& m, double t, const EmpiricalMeasure& mu,
                const EmpiricalMeasure& nu, const CostProfile& profile);

// Exact Monge-Kantorovich solve: Hungarian assignment for square uniform
// instances, transportation simplex otherwise.
TransportPlan solve_exact(const Mat& costs, const Vec& wmu, const Vec& wnu);

double wasserstein_p(const Manifold& m, double t, const EmpiricalMeasure& mu,
                     const EmpiricalMeasure& nu, double p);

// Horizontal family over the minimal g(t0)-geodesic from x to y in unit
// parameter; members.front()/back() are the two endpoint diffusions.
HorizontalFamily evolve_pair_fan(std::shared_ptr<const Manifold> m, const Vec& x, const Vec& y,
                                 const TimeGrid& grid, const NoisePath& noise,
                                 double fan_alpha = 0.125);

struct ContractionReport {
    std::vector<double> times;
    std::vector<double> w_c;      // replica-averaged
    std::vector<double> w_p;      // replica-averaged
    std::vector<double> bound;    // exp(-k t / 2) * W_p(0)
    std::vector<double> ratio;    // w_p / w_p0
    double w_c0 = 0.0, w_p0 = 0.0;
    double rate_k = 0.0;
    int n_effective = 0;  // evolved pairs per replica
    int n_replicas = 0;
    std::uint64_t seed = 0;
    double max_ratio = 0.0;
    double monotone_residual = 0.0;  // RMS isotone-regression residual / w_c0
    bool certificate_ok = true;      // solved W_c <= evolved-pair plan cost

    void write_csv(std::ostream& os) const;
    std::string summary_json() const;
};

struct ContractionParams {
    double p = 2.0;
    CostProfile profile = CostProfile::power(2.0);
    std::vector<int> report_steps;  // grid step indices, nonempty
    int n_replicas = 1;
    std::uint64_t seed = 0;
    double fan_alpha = 0.125;
    int threads = 1;
    double rate_k = 0.0;  // contraction rate; instance curvature if NaN
};

ContractionReport contraction_experiment(std::shared_ptr<const Manifold> m,
                                         const EmpiricalMeasure& mu0,
                                         const EmpiricalMeasure& nu0, const TimeGrid& grid,
                                         const ContractionParams& params);

// Least-squares fit of a non-increasing sequence (pool adjacent violators).
std::vector<double> isotone_nonincreasing(const std::vector<double>& y);

}  // namespace hdiff
