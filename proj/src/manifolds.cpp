#include <cmath>

#include "hdiff/errors.hpp"
#include "hdiff/manifold.hpp"

namespace hdiff {

namespace {

// Chart margin keeping sphere paths off the coordinate poles, and the slack
// subtracted from the cut-locus distance in the injectivity guards.
constexpr double kSphereCapMargin = 0.05;
constexpr double kSphereGuardSlack = 0.1;
constexpr double kHyperbolicChartRadius = 20.0;

double clamp1(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

// ---------------------------------------------------------------------------
// Unit-sphere chart formulas in colatitude/longitude coordinates (theta, phi).
// Radius and conformal time factors enter only through metric scalings, so the
// chart-level geodesic maps below are shared by the static and the flowing
// sphere.

using V3 = Eigen::Vector3d;

V3 sph_embed(const Vec& x) {
    const double st = std::sin(x[0]), ct = std::cos(x[0]);
    return {st * std::cos(x[1]), st * std::sin(x[1]), ct};
}

// Embedded tangent from chart components.
V3 sph_push(const Vec& x, const Vec& v) {
    const double st = std::sin(x[0]), ct = std::cos(x[0]);
    const double cp = std::cos(x[1]), sp = std::sin(x[1]);
    const V3 etheta(ct * cp, ct * sp, -st);
    const V3 ephi(-sp, cp, 0.0);  // unit vector; chart e_phi = sin(theta) * ephi
    return v[0] * etheta + v[1] * st * ephi;
}

Vec sph_pull(const Vec& x, const V3& w) {
    const double st = std::sin(x[0]), ct = std::cos(x[0]);
    const double cp = std::cos(x[1]), sp = std::sin(x[1]);
    const V3 etheta(ct * cp, ct * sp, -st);
    const V3 ephi(-sp, cp, 0.0);
    Vec v(2);
    v[0] = w.dot(etheta);
    v[1] = w.dot(ephi) / st;
    return v;
}

// Chart point of an embedded unit vector, longitude unwrapped near `ref`.
Vec sph_chart(const V3& p, const Vec& ref) {
    Vec x(2);
    x[0] = std::acos(clamp1(p[2]));
    const double phi = std::atan2(p[1], p[0]);
    x[1] = ref[1] + std::remainder(phi - ref[1], 2.0 * M_PI);
    return x;
}

double sph_distance_unit(const Vec& x, const Vec& y) {
    if (x == y) return 0.0;
    const V3 p = sph_embed(x), q = sph_embed(y);
    // atan2 form stays accurate near 0 and pi.
    return std::atan2(p.cross(q).norm(), p.dot(q));
}

Vec sph_exp_unit(const Vec& x, const Vec& v) {
    const V3 w = sph_push(x, v);
    const double a = w.norm();
    if (a < 1e-15) return x;
    const V3 p = std::cos(a) * sph_embed(x) + std::sin(a) * (w / a);
    return sph_chart(p, x);
}

Vec sph_log_unit(const Vec& x, const Vec& y) {
    if (x == y) return Vec::Zero(2);
    const V3 p = sph_embed(x), q = sph_embed(y);
    const double c = clamp1(p.dot(q));
    const double rho = std::atan2(p.cross(q).norm(), c);
    if (rho < 1e-15) return Vec::Zero(2);
    const V3 w = (rho / std::sin(rho)) * (q - c * p);
    return sph_pull(x, w);
}

Vec sph_transport_unit(const Vec& x, const Vec& y, const Vec& v) {
    if (x == y) return v;
    const V3 p = sph_embed(x), q = sph_embed(y);
    const double c = clamp1(p.dot(q));
    const double rho = std::acos(c);
    const V3 w = sph_push(x, v);
    if (rho < 1e-14) return sph_pull(y, w);
    const V3 e = (q - c * p) / std::sin(rho);       // unit tangent at x toward y
    const V3 ee = -std::sin(rho) * p + c * e;       // its transport to y
    const double a = w.dot(e);
    return sph_pull(y, a * ee + (w - a * e));
}

// ---------------------------------------------------------------------------
// Unit-curvature hyperboloid graph chart: u in R^2, p(u) = (sqrt(1+|u|^2), u).
// Constant curvature rescaling only changes the metric prefactor, so chart
// geodesics, transport and Christoffels are shared across curvatures.

using M3 = Eigen::Vector3d;  // Minkowski vectors (p0, p1, p2)

double mink(const M3& a, const M3& b) { return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

M3 hyp_embed(const Vec& u) { return {std::sqrt(1.0 + u.squaredNorm()), u[0], u[1]}; }

M3 hyp_push(const Vec& u, const Vec& v) {
    const double p0 = std::sqrt(1.0 + u.squaredNorm());
    return {u.dot(v) / p0, v[0], v[1]};
}

Vec hyp_pull(const M3& w) {
    Vec v(2);
    v[0] = w[1];
    v[1] = w[2];
    return v;
}

double hyp_distance_unit(const Vec& x, const Vec& y) {
    if (x == y) return 0.0;
    const double c = std::max(1.0, -mink(hyp_embed(x), hyp_embed(y)));
    return std::acosh(c);
}

Vec hyp_exp_unit(const Vec& x, const Vec& v) {
    const M3 w = hyp_push(x, v);
    const double a2 = mink(w, w);
    if (a2 <= 1e-30) return x;
    const double a = std::sqrt(a2);
    const M3 p = std::cosh(a) * hyp_embed(x) + (std::sinh(a) / a) * w;
    return hyp_pull(p);  // chart coords are the spatial components
}

Vec hyp_log_unit(const Vec& x, const Vec& y) {
    if (x == y) return Vec::Zero(2);
    const M3 p = hyp_embed(x), q = hyp_embed(y);
    const double c = std::max(1.0, -mink(p, q));
    const double rho = std::acosh(c);
    if (rho < 1e-15) return Vec::Zero(2);
    const M3 w = (rho / std::sinh(rho)) * (q - c * p);
    return hyp_pull(w);
}

Vec hyp_transport_unit(const Vec& x, const Vec& y, const Vec& v) {
    if (x == y) return v;
    const M3 p = hyp_embed(x), q = hyp_embed(y);
    const double c = std::max(1.0, -mink(p, q));
    const double rho = std::acosh(c);
    const M3 w = hyp_push(x, v);
    if (rho < 1e-14) return hyp_pull(w);
    const M3 e = (q - c * p) / std::sinh(rho);
    const M3 ee = std::sinh(rho) * p + std::cosh(rho) * e;
    const double a = mink(w, e);
    return hyp_pull(a * ee + (w - a * e));
}

Mat hyp_metric_unit(const Vec& u) {
    const double p02 = 1.0 + u.squaredNorm();
    return Mat::Identity(2, 2) - (u * u.transpose()) / p02;
}

// ---------------------------------------------------------------------------

class Euclidean final : public Manifold {
public:
    Euclidean(int d, DriftSpec drift) : Manifold(std::move(drift)), d_(d) {
        if (d < 1) throw ConfigError("euclidean: dim must be >= 1");
        init_drift();
    }

    int dim() const override { return d_; }
    std::string name() const override { return "euclidean"; }
    bool has_closed_form_geodesics() const override { return true; }
    bool in_domain(const Vec&) const override { return true; }
    Vec chart_center() const override { return Vec::Zero(d_); }

    Mat metric(double, const Vec&) const override { return Mat::Identity(d_, d_); }

    Christoffel christoffel(double, const Vec&) const override {
        return Christoffel(d_, Mat::Zero(d_, d_));
    }
    Mat ricci(double, const Vec&) const override { return Mat::Zero(d_, d_); }

    Vec exp(double, const Vec& x, const Vec& v) const override { return x + v; }
    Vec log(double, const Vec& x, const Vec& y) const override { return y - x; }
    double distance(double, const Vec& x, const Vec& y) const override { return (y - x).norm(); }
    Vec transport(double, const Vec&, const Vec&, const Vec& w) const override { return w; }
    Mat transport_matrix(double, const Vec&, const Vec&, const Mat& a) const override {
        return a;
    }

    double contraction_rate() const override { return 0.0; }

private:
    int d_;
};

// Round sphere of radius r (static) or the backward-Ricci-flow family
// g(t) = (r0^2 + t) * g_round; the static case is scale(t) == r^2.
class SphereBase : public Manifold {
public:
    SphereBase(DriftSpec drift) : Manifold(std::move(drift)) {}

    int dim() const override { return 2; }
    bool has_closed_form_geodesics() const override { return true; }

    bool in_domain(const Vec& x) const override {
        return x[0] >= kSphereCapMargin && x[0] <= M_PI - kSphereCapMargin;
    }
    bool in_domain_interior(const Vec& x, double margin) const override {
        return x[0] >= kSphereCapMargin + margin && x[0] <= M_PI - kSphereCapMargin - margin;
    }
    Vec chart_center() const override {
        Vec c(2);
        c[0] = M_PI / 2.0;
        c[1] = 0.0;
        return c;
    }

    virtual double scale(double t) const = 0;  // metric = scale(t) * round chart form

    Mat metric(double t, const Vec& x) const override {
        if (!in_domain(x)) throw DomainError("sphere: point outside the chart caps");
        Mat g(2, 2);
        const double s = std::sin(x[0]);
        g << 1.0, 0.0, 0.0, s * s;
        return scale(t) * g;
    }

    Christoffel christoffel(double, const Vec& x) const override {
        Christoffel gamma(2, Mat::Zero(2, 2));
        const double st = std::sin(x[0]), ct = std::cos(x[0]);
        gamma[0](1, 1) = -st * ct;
        gamma[1](0, 1) = gamma[1](1, 0) = ct / st;
        return gamma;
    }

    // Ric = g_round in chart form, independent of the scale factor.
    Mat ricci(double, const Vec& x) const override {
        Mat r(2, 2);
        const double s = std::sin(x[0]);
        r << 1.0, 0.0, 0.0, s * s;
        return r;
    }

    bool injectivity_guard(double t, const Vec& x, const Vec& y) const override {
        if (!in_domain(x) || !in_domain(y)) return false;
        return sph_distance_unit(x, y) < M_PI - kSphereGuardSlack;
    }

    Vec exp(double t, const Vec& x, const Vec& v) const override {
        const V3 w = sph_push(x, v);
        const double a = w.norm();
        if (a > M_PI - kSphereGuardSlack)
            throw StepTooLarge("sphere: exp step of unit-chart length " + std::to_string(a));
        const Vec y = sph_exp_unit(x, v);
        if (!in_domain(y)) throw DomainError("sphere: geodesic exits chart cap margin");
        if (a > 1e-15) {
            // p_z(s) = R cos(s - s0) along the arc; |p_z| peaks at R where
            // s = s0 (mod pi). If that peak lies inside the arc and pokes into
            // a polar cap, the geodesic leaves the chart even though the
            // endpoint is back inside.
            const double p0z = std::cos(x[0]);
            const double wz = w[2] / a;
            const double peak = std::hypot(p0z, wz);
            if (peak > std::cos(kSphereCapMargin)) {
                const double s0 = std::atan2(wz, p0z);
                const double s_star = s0 - M_PI * std::floor(s0 / M_PI);
                if (s_star > 0.0 && s_star < a)
                    throw DomainError("sphere: geodesic crosses a polar cap");
            }
        }
        return y;
    }

    Vec log(double t, const Vec& x, const Vec& y) const override {
        if (!injectivity_guard(t, x, y))
            throw CutLocusError("sphere: points too close to antipodal");
        return sph_log_unit(x, y);
    }

    double distance(double t, const Vec& x, const Vec& y) const override {
        return std::sqrt(scale(t)) * sph_distance_unit(x, y);
    }

    Vec transport(double t, const Vec& x, const Vec& y, const Vec& w) const override {
        if (!injectivity_guard(t, x, y))
            throw CutLocusError("sphere: transport across uncertified geodesic");
        return sph_transport_unit(x, y, w);
    }

    Mat transport_matrix(double t, const Vec& x, const Vec& y, const Mat& a) const override {
        if (!injectivity_guard(t, x, y))
            throw CutLocusError("sphere: transport across uncertified geodesic");
        Mat out(2, a.cols());
        for (int j = 0; j < a.cols(); ++j) out.col(j) = sph_transport_unit(x, y, a.col(j));
        return out;
    }
};

class Sphere final : public SphereBase {
public:
    Sphere(double radius, DriftSpec drift) : SphereBase(std::move(drift)), r_(radius) {
        if (!(radius > 0.0)) throw ConfigError("sphere: radius must be positive");
        init_drift();
    }

    std::string name() const override { return "sphere"; }
    double scale(double) const override { return r_ * r_; }
    double contraction_rate() const override { return 1.0 / (r_ * r_); }

protected:
    double potential(const std::string& pname, double t, const Vec& x) const override {
        if (pname == "cos_colatitude") return std::cos(x[0]);
        return Manifold::potential(pname, t, x);
    }

private:
    double r_;
};

class BrfSphere final : public SphereBase {
public:
    BrfSphere(double initial_radius, DriftSpec drift)
        : SphereBase(std::move(drift)), r0sq_(initial_radius * initial_radius) {
        if (!(initial_radius > 0.0)) throw ConfigError("brf_sphere: initial_radius must be positive");
        init_drift();
    }

    std::string name() const override { return "brf_sphere"; }
    bool time_dependent() const override { return true; }
    double scale(double t) const override { return r0sq_ + t; }

    // gdot = g_round chart form = Ric for every t: backward Ricci flow.
    Mat metric_dt(double, const Vec& x) const override {
        Mat g(2, 2);
        const double s = std::sin(x[0]);
        g << 1.0, 0.0, 0.0, s * s;
        return g;
    }

    // Ric - gdot = 0.
    double contraction_rate() const override { return 0.0; }

private:
    double r0sq_;
};

class Hyperbolic final : public Manifold {
public:
    Hyperbolic(double curvature, DriftSpec drift)
        : Manifold(std::move(drift)), kappa_(-curvature) {
        if (!(curvature < 0.0)) throw ConfigError("hyperbolic: curvature must be negative");
        init_drift();
    }

    int dim() const override { return 2; }
    std::string name() const override { return "hyperbolic"; }
    bool has_closed_form_geodesics() const override { return true; }

    bool in_domain(const Vec& x) const override { return x.norm() <= kHyperbolicChartRadius; }
    Vec chart_center() const override { return Vec::Zero(2); }

    Mat metric(double, const Vec& x) const override {
        if (!in_domain(x)) throw DomainError("hyperbolic: point outside the chart ball");
        return hyp_metric_unit(x) / kappa_;
    }

    // Gamma^k_{ij} = -ghat_ij(u) u_k, curvature-independent.
    Christoffel christoffel(double, const Vec& x) const override {
        const Mat ghat = hyp_metric_unit(x);
        Christoffel gamma(2, Mat::Zero(2, 2));
        for (int k = 0; k < 2; ++k) gamma[k] = -ghat * x[k];
        return gamma;
    }

    Mat ricci(double, const Vec& x) const override { return -hyp_metric_unit(x); }

    Vec exp(double, const Vec& x, const Vec& v) const override {
        const Vec y = hyp_exp_unit(x, v);
        if (!in_domain(y)) throw DomainError("hyperbolic: geodesic exits chart ball");
        return y;
    }
    Vec log(double, const Vec& x, const Vec& y) const override { return hyp_log_unit(x, y); }
    double distance(double, const Vec& x, const Vec& y) const override {
        return hyp_distance_unit(x, y) / std::sqrt(kappa_);
    }
    Vec transport(double, const Vec& x, const Vec& y, const Vec& w) const override {
        return hyp_transport_unit(x, y, w);
    }
    Mat transport_matrix(double, const Vec& x, const Vec& y, const Mat& a) const override {
        Mat out(2, a.cols());
        for (int j = 0; j < a.cols(); ++j) out.col(j) = hyp_transport_unit(x, y, a.col(j));
        return out;
    }

    double contraction_rate() const override { return -kappa_; }

private:
    double kappa_;  // metric has constant curvature -kappa
};

double get_param(const ManifoldSpec& spec, const std::string& key, double fallback,
                 bool required) {
    auto it = spec.params.find(key);
    if (it == spec.params.end()) {
        if (required)
            throw ConfigError("manifold '" + spec.name + "': missing parameter '" + key + "'");
        return fallback;
    }
    return it->second;
}

}  // namespace

std::shared_ptr<const Manifold> make_manifold(const ManifoldSpec& spec) {
    if (spec.name == "euclidean") {
        const int d = static_cast<int>(get_param(spec, "dim", 2.0, false));
        return std::make_shared<Euclidean>(d, spec.drift);
    }
    if (spec.name == "sphere") {
        return std::make_shared<Sphere>(get_param(spec, "radius", 1.0, false), spec.drift);
    }
    if (spec.name == "hyperbolic") {
        return std::make_shared<Hyperbolic>(get_param(spec, "curvature", -1.0, false),
                                            spec.drift);
    }
    if (spec.name == "brf_sphere") {
        return std::make_shared<BrfSphere>(get_param(spec, "initial_radius", 1.0, false),
                                           spec.drift);
    }
    throw ConfigError("unknown manifold '" + spec.name + "'");
}

std::shared_ptr<const Manifold> make_manifold(const std::string& name,
                                              const std::map<std::string, double>& params,
                                              const DriftSpec& drift) {
    ManifoldSpec spec;
    spec.name = name;
    spec.params = params;
    spec.drift = drift;
    return make_manifold(spec);
}

}  // namespace hdiff
