#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "hdiff/sde.hpp"
#include "hdiff/transport.hpp"
#include "hdiff/types.hpp"

namespace hdiff {

// C^1 initial curve u -> phi(u) with its derivative in chart components.
struct CurveC1 {
    double u0 = 0.0;
    std::function<Vec(double)> eval;
    std::function<Vec(double)> derivative;

    // phi(u) = exp_x(u v); the derivative is v parallel-transported along the
    // geodesic (metric frozen at t).
    static CurveC1 geodesic(std::shared_ptr<const Manifold> m, double t, const Vec& x,
                            const Vec& v, double u0);
};

// One parallel-coupling step: the driving increment dm_x (based at x) is
// geodesically transported to y and applied there. Returns y'.
Vec coupled_step(const Manifold& m, double t, const Vec& x, const Vec& y, const Vec& dm_x,
                 double dt);

// Drive a trajectory from y0 by the martingale increments of `base`; stops
// when base stops or the injectivity guard fails.
Trajectory simulate_coupled(const Trajectory& base, const Vec& y0);

// The u-indexed family built on an alpha-grid from one shared noise path.
// members[i] corresponds to u_grid[i]; members[0] is the base at u = 0.
// Every member with u in (n alpha, (n+1) alpha] is driven by the member at
// n alpha.
struct HorizontalFamily {
    std::shared_ptr<const Manifold> manifold;
    std::vector<double> u_grid;
    double alpha = 0.0;
    std::vector<Trajectory> members;
    std::vector<Vec> curve_derivatives;  // phi_dot(u) per grid entry

    int index_of(double u) const;  // MissingGridPoint if absent
    const Trajectory& member(double u) const { return members[index_of(u)]; }
};

// Anchor parameter n*alpha for u in (n alpha, (n+1) alpha].
double alpha_anchor(double u, double alpha);

HorizontalFamily build_family(std::shared_ptr<const Manifold> m, const CurveC1& curve,
                              const std::vector<double>& u_grid, double alpha,
                              const TimeGrid& grid, const NoisePath& base_noise);

// Chart-level difference quotient (X_t(u+du) - X_t(u)) / du as components at
// X_t(u). `k` is the grid step index.
TangentVector derivative_fd(const HorizontalFamily& family, int k, double u, double du);

// Same estimator through log_map instead of raw chart differences.
TangentVector derivative_fd_log(const HorizontalFamily& family, int k, double u, double du);

// Damped parallel translation of phi_dot(u) along member u, evaluated at
// every grid time. The derivative of the family in u.
std::vector<TangentVector> deformed_derivative_series(const HorizontalFamily& family, double u);
TangentVector deformed_derivative(const HorizontalFamily& family, double u, int k);

// Long-format export: t,u,coordinates per member per grid time.
void write_family_csv(const HorizontalFamily& family, std::ostream& os);

struct DerivativeCheckRow {
    double u;
    double t;
    double fd_norm;
    double w_norm;
    double rel_error;  // g-norm of (fd - w phi_dot) / g-norm of w phi_dot
};

DerivativeCheckRow derivative_check(const HorizontalFamily& family, int k, double u, double du);
void write_derivative_report_csv(const std::vector<DerivativeCheckRow>& rows, std::ostream& os);

}  // namespace hdiff
