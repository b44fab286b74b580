#include "hdiff/geodesic_ode.hpp"

#include <cmath>

#include "hdiff/errors.hpp"

namespace hdiff {

namespace {

Vec gamma_quad(const Christoffel& gamma, const Vec& a, const Vec& b) {
    const int d = static_cast<int>(gamma.size());
    Vec out(d);
    for (int k = 0; k < d; ++k) out[k] = a.dot(gamma[k] * b);
    return out;
}

struct Deriv {
    Vec dx;
    Vec dv;
};

Deriv geodesic_rhs(const Manifold& m, double t, const Vec& x, const Vec& v) {
    const Christoffel gamma = m.christoffel(t, x);
    return {v, -gamma_quad(gamma, v, v)};
}

int default_substeps(const Manifold& m, double t, const Vec& x, const Vec& v) {
    const double len = m.norm(t, x, v);
    const int n = static_cast<int>(std::ceil(len / 0.01));
    return std::max(16, std::min(n, 4000));
}

}  // namespace

GeodesicState integrate_geodesic(const Manifold& m, double t, const Vec& x, const Vec& v,
                                 int n_substeps) {
    const int n = n_substeps > 0 ? n_substeps : default_substeps(m, t, x, v);
    const double h = 1.0 / n;
    Vec cx = x, cv = v;
    for (int i = 0; i < n; ++i) {
        const Deriv k1 = geodesic_rhs(m, t, cx, cv);
        const Deriv k2 = geodesic_rhs(m, t, cx + 0.5 * h * k1.dx, cv + 0.5 * h * k1.dv);
        const Deriv k3 = geodesic_rhs(m, t, cx + 0.5 * h * k2.dx, cv + 0.5 * h * k2.dv);
        const Deriv k4 = geodesic_rhs(m, t, cx + h * k3.dx, cv + h * k3.dv);
        cx += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        cv += (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        if (!m.in_domain(cx)) throw DomainError(m.name() + ": geodesic exits chart domain");
    }
    return {cx, cv};
}

Vec ode_exp(const Manifold& m, double t, const Vec& x, const Vec& v) {
    return integrate_geodesic(m, t, x, v).x;
}

Vec shooting_log(const Manifold& m, double t, const Vec& x, const Vec& y) {
    const int d = m.dim();
    Vec v = y - x;  // chart-difference seed
    const double fd = 1e-6;
    double best = (ode_exp(m, t, x, v) - y).norm();
    for (int iter = 0; iter < 60; ++iter) {
        const Vec r = ode_exp(m, t, x, v) - y;
        if (r.norm() < 1e-12) break;
        Mat jac(d, d);
        for (int j = 0; j < d; ++j) {
            Vec vp = v, vm = v;
            vp[j] += fd;
            vm[j] -= fd;
            jac.col(j) = (ode_exp(m, t, x, vp) - ode_exp(m, t, x, vm)) / (2.0 * fd);
        }
        const Vec step = jac.fullPivLu().solve(r);
        // Damped update: back off until the residual improves.
        double lambda = 1.0;
        for (int back = 0; back < 30; ++back) {
            const Vec cand = v - lambda * step;
            const double rn = (ode_exp(m, t, x, cand) - y).norm();
            if (rn < best) {
                v = cand;
                best = rn;
                break;
            }
            lambda *= 0.5;
            if (back == 29)
                throw CutLocusError(m.name() + ": geodesic shooting failed to converge");
        }
    }
    if (best > 1e-8)
        throw CutLocusError(m.name() + ": geodesic shooting residual " + std::to_string(best));
    return v;
}

Vec ode_transport(const Manifold& m, double t, const Vec& x, const Vec& y, const Vec& w) {
    const Vec v0 = m.log(t, x, y);
    const int n = default_substeps(m, t, x, v0);
    const double h = 1.0 / n;
    Vec cx = x, cv = v0, cw = w;
    // Joint RK4 on (x, v, w): w'^k = -Gamma^k_{ij} v^i w^j along the geodesic.
    auto rhs = [&m, t](const Vec& px, const Vec& pv, const Vec& pw) {
        const Christoffel gamma = m.christoffel(t, px);
        struct {
            Vec dx, dv, dw;
        } d{pv, -gamma_quad(gamma, pv, pv), -gamma_quad(gamma, pv, pw)};
        return d;
    };
    for (int i = 0; i < n; ++i) {
        const auto k1 = rhs(cx, cv, cw);
        const auto k2 = rhs(cx + 0.5 * h * k1.dx, cv + 0.5 * h * k1.dv, cw + 0.5 * h * k1.dw);
        const auto k3 = rhs(cx + 0.5 * h * k2.dx, cv + 0.5 * h * k2.dv, cw + 0.5 * h * k2.dw);
        const auto k4 = rhs(cx + h * k3.dx, cv + h * k3.dv, cw + h * k3.dw);
        cx += (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
        cv += (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
        cw += (h / 6.0) * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
    }
    return cw;
}

}  // namespace hdiff
