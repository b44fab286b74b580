#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "hdiff/types.hpp"

namespace hdiff {

class Manifold;

// Drift field Z(t, x) in chart components. Receives the manifold so that
// gradient drifts can raise the index with the metric.
using DriftFn = std::function<Vec(const Manifold&, double, const Vec&)>;

struct DriftSpec {
    enum class Kind { zero, constant, gradient };
    Kind kind = Kind::zero;
    Vec value;              // constant: chart components
    std::string potential;  // gradient: named potential, Z = grad_g V
};

// Chart description of (M, g(t), Z(t)). Instances are immutable after
// construction; every operation is a pure function of its arguments.
class Manifold {
public:
    virtual ~Manifold() = default;

    virtual int dim() const = 0;
    virtual std::string name() const = 0;
    virtual bool time_dependent() const { return false; }
    virtual bool has_closed_form_geodesics() const { return false; }

    virtual bool in_domain(const Vec& x) const = 0;
    // Room for an FD stencil of half-width `margin` around x.
    virtual bool in_domain_interior(const Vec& x, double margin) const;

    virtual Mat metric(double t, const Vec& x) const = 0;
    virtual Mat metric_dt(double t, const Vec& x) const;  // default: zero

    Vec drift(double t, const Vec& x) const;

    // True when a unique minimal geodesic x -> y is certified at time t.
    virtual bool injectivity_guard(double t, const Vec& x, const Vec& y) const;

    // Levi-Civita Gamma^i_{jk} of g(t); central differences of the metric
    // unless the instance has a closed form.
    virtual Christoffel christoffel(double t, const Vec& x) const;

    // Ricci tensor (lower indices); FD curvature of christoffel() by default.
    virtual Mat ricci(double t, const Vec& x) const;
    // (Ric)^sharp = g^{-1} Ric.
    Mat ricci_sharp(double t, const Vec& x) const;

    // Geodesic exponential of g(t) at x. RK4 on the geodesic ODE unless the
    // instance has a closed form.
    virtual Vec exp(double t, const Vec& x, const Vec& v) const;
    // Inverse of exp within the injectivity guard (shooting fallback).
    virtual Vec log(double t, const Vec& x, const Vec& y) const;
    virtual double distance(double t, const Vec& x, const Vec& y) const;
    // Parallel transport of w along the minimal g(t)-geodesic x -> y.
    virtual Vec transport(double t, const Vec& x, const Vec& y, const Vec& w) const;
    // Column-wise transport; instances may share geodesic data across columns.
    virtual Mat transport_matrix(double t, const Vec& x, const Vec& y, const Mat& a) const;

    // g(t)-orthonormal frame: F^T g F = I. Inverse transposed Cholesky factor,
    // deterministic for fixed (t, x).
    Mat frame(double t, const Vec& x) const;

    double norm(double t, const Vec& x, const Vec& v) const;
    double inner(double t, const Vec& x, const Vec& v, const Vec& w) const;

    // D(t,x) with D*w = (nabla_w Z)(t,x); FD of drift components plus
    // Christoffel terms.
    Mat drift_nabla(double t, const Vec& x) const;

    // Curvature part of the contraction rate k in Ric >= k g (Z = 0 case);
    // supplied from closed form per instance.
    virtual double contraction_rate() const = 0;

    // A representative interior point of the chart.
    virtual Vec chart_center() const = 0;

    const DriftSpec& drift_spec() const { return drift_spec_; }

protected:
    explicit Manifold(DriftSpec spec) : drift_spec_(std::move(spec)) {}

    DriftSpec drift_spec_;
    DriftFn drift_fn_;  // set at construction from drift_spec_

    void init_drift();
    // Chart potential V(t, x) for a named gradient drift.
    virtual double potential(const std::string& name, double t, const Vec& x) const;
};

struct ManifoldSpec {
    std::string name;  // euclidean | sphere | hyperbolic | brf_sphere
    std::map<std::string, double> params;
    DriftSpec drift;
};

// Factory for the shipped instances:
//   euclidean  {dim}
//   sphere     {radius}            colatitude/longitude chart
//   hyperbolic {curvature < 0}     hyperboloid graph chart
//   brf_sphere {initial_radius}    g(t) = (r0^2 + t) * round metric
std::shared_ptr<const Manifold> make_manifold(const ManifoldSpec& spec);
std::shared_ptr<const Manifold> make_manifold(const std::string& name,
                                              const std::map<std::string, double>& params = {},
                                              const DriftSpec& drift = {});

// FD step used for Christoffel/curvature/drift stencils.
inline constexpr double kFdStep = 1e-4;

}  // namespace hdiff
