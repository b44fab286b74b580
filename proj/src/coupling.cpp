#include "hdiff/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "hdiff/errors.hpp"

namespace hdiff {

CurveC1 CurveC1::geodesic(std::shared_ptr<const Manifold> m, double t, const Vec& x,
                          const Vec& v, double u0) {
    CurveC1 c;
    c.u0 = u0;
    c.eval = [m, t, x, v](double u) { return m->exp(t, x, u * v); };
    c.derivative = [m, t, x, v](double u) {
        const Vec y = m->exp(t, x, u * v);
        return m->transport(t, x, y, v);
    };
    return c;
}

Vec coupled_step(const Manifold& m, double t, const Vec& x, const Vec& y, const Vec& dm_x,
                 double dt) {
    if (!m.injectivity_guard(t, x, y))
        throw CutLocusError(m.name() + ": coupled pair outside injectivity guard");
    const Vec dm_y = m.transport(t, x, y, dm_x);
    return m.exp(t, y, dm_y + m.drift(t, y) * dt);
}

Trajectory simulate_coupled(const Trajectory& base, const Vec& y0) {
    const Manifold& m = *base.manifold;
    const TimeGrid& grid = base.grid;
    const int d = base.d();
    if (!m.in_domain(y0)) throw InvalidStart("simulate_coupled: y0 outside chart domain");

    Trajectory traj;
    traj.grid = grid;
    traj.manifold = base.manifold;
    traj.points.setZero(grid.n_steps + 1, d);
    traj.martingale_increments.setZero(grid.n_steps, d);
    traj.points.row(0) = y0.transpose();

    const double dt = grid.dt();
    const int base_last = base.last_step();
    Vec y = y0;
    for (int k = 0; k < grid.n_steps; ++k) {
        if (k >= base_last) {
            traj.stopped_at = k;
            for (int j = k; j < grid.n_steps; ++j) traj.points.row(j + 1) = y.transpose();
            break;
        }
        const double t = grid.time(k);
        const Vec x = base.point(k);
        try {
            const Vec dm_y = m.transport(t, x, y, base.martingale_increments.row(k).transpose());
            const Vec y1 = m.exp(t, y, dm_y + m.drift(t, y) * dt);
            traj.martingale_increments.row(k) = dm_y.transpose();
            traj.points.row(k + 1) = y1.transpose();
            y = y1;
        } catch (const Error&) {
            traj.stopped_at = k;
            for (int j = k; j < grid.n_steps; ++j) traj.points.row(j + 1) = y.transpose();
            break;
        }
    }
    return traj;
}

double alpha_anchor(double u, double alpha) {
    if (u <= 0.0) return 0.0;
    int n = static_cast<int>(std::ceil(u / alpha - 1e-9)) - 1;
    if (n < 0) n = 0;
    return n * alpha;
}

int HorizontalFamily::index_of(double u) const {
    const auto it = std::lower_bound(u_grid.begin(), u_grid.end(), u - 1e-9);
    if (it == u_grid.end() || std::abs(*it - u) > 1e-9)
        throw MissingGridPoint("u = " + std::to_string(u) + " not in family grid");
    return static_cast<int>(it - u_grid.begin());
}

HorizontalFamily build_family(std::shared_ptr<const Manifold> m, const CurveC1& curve,
                              const std::vector<double>& u_grid, double alpha,
                              const TimeGrid& grid, const NoisePath& base_noise) {
    if (alpha <= 0.0) throw ConfigError("build_family: alpha must be positive");
    if (u_grid.empty() || std::abs(u_grid.front()) > 1e-12)
        throw ConfigError("build_family: u_grid must start at 0");
    if (!std::is_sorted(u_grid.begin(), u_grid.end()))
        throw ConfigError("build_family: u_grid must be increasing");
    const double u_max = u_grid.back();
    if (u_max > curve.u0 + 1e-12) throw ConfigError("build_family: u_grid exceeds curve domain");

    HorizontalFamily fam;
    fam.manifold = m;
    fam.u_grid = u_grid;
    fam.alpha = alpha;
    fam.members.reserve(u_grid.size());
    fam.curve_derivatives.reserve(u_grid.size());

    // The u_grid must contain every anchor n*alpha <= u_max.
    for (double a = alpha; a < u_max - 1e-9; a += alpha) {
        const auto it = std::lower_bound(u_grid.begin(), u_grid.end(), a - 1e-9);
        if (it == u_grid.end() || std::abs(*it - a) > 1e-9)
            throw ConfigError("build_family: u_grid does not refine the alpha-grid (missing " +
                              std::to_string(a) + ")");
    }

    fam.members.push_back(simulate(m, curve.eval(0.0), grid, base_noise));
    fam.curve_derivatives.push_back(curve.derivative(0.0));
    for (std::size_t i = 1; i < u_grid.size(); ++i) {
        const double u = u_grid[i];
        const double anchor = alpha_anchor(u, alpha);
        const Trajectory& driver = fam.members[fam.index_of(anchor)];
        fam.members.push_back(simulate_coupled(driver, curve.eval(u)));
        fam.curve_derivatives.push_back(curve.derivative(u));
    }
    return fam;
}

TangentVector derivative_fd(const HorizontalFamily& family, int k, double u, double du) {
    const Trajectory& a = family.member(u);
    const Trajectory& b = family.member(u + du);
    if (!a.alive_at(k) || !b.alive_at(k))
        throw MissingGridPoint("derivative_fd: member stopped before requested time");
    TangentVector tv;
    tv.base = a.point(k);
    tv.components = (b.point(k) - a.point(k)) / du;
    tv.time = a.grid.time(k);
    return tv;
}

TangentVector derivative_fd_log(const HorizontalFamily& family, int k, double u, double du) {
    const Trajectory& a = family.member(u);
    const Trajectory& b = family.member(u + du);
    if (!a.alive_at(k) || !b.alive_at(k))
        throw MissingGridPoint("derivative_fd_log: member stopped before requested time");
    TangentVector tv;
    tv.base = a.point(k);
    tv.time = a.grid.time(k);
    tv.components = family.manifold->log(tv.time, tv.base, b.point(k)) / du;
    return tv;
}

std::vector<TangentVector> deformed_derivative_series(const HorizontalFamily& family, double u) {
    const int i = family.index_of(u);
    const Trajectory& traj = family.members[i];
    const TransportOperator w = damped_transport_path(traj);
    const Vec& phidot = family.curve_derivatives[i];
    std::vector<TangentVector> out(w.maps.size());
    for (std::size_t k = 0; k < w.maps.size(); ++k) {
        const int kk = std::min<int>(static_cast<int>(k), traj.last_step());
        out[k].base = traj.point(kk);
        out[k].time = traj.grid.time(kk);
        out[k].components = w.maps[k] * phidot;
    }
    return out;
}

TangentVector deformed_derivative(const HorizontalFamily& family, double u, int k) {
    return deformed_derivative_series(family, u)[static_cast<std::size_t>(k)];
}

DerivativeCheckRow derivative_check(const HorizontalFamily& family, int k, double u, double du) {
    const Manifold& m = *family.manifold;
    const TangentVector fd = derivative_fd(family, k, u, du);
    const TangentVector w = deformed_derivative(family, u, k);
    DerivativeCheckRow row;
    row.u = u;
    row.t = fd.time;
    row.fd_norm = m.norm(fd.time, fd.base, fd.components);
    row.w_norm = m.norm(w.time, w.base, w.components);
    row.rel_error = m.norm(w.time, w.base, fd.components - w.components) /
                    std::max(row.w_norm, 1e-300);
    return row;
}

void write_family_csv(const HorizontalFamily& family, std::ostream& os) {
    const int d = family.members.front().d();
    os << "t,u";
    for (int i = 0; i < d; ++i) os << ",x" << i;
    os << ",stopped\n";
    char buf[48];
    const TimeGrid& grid = family.members.front().grid;
    for (int k = 0; k <= grid.n_steps; ++k) {
        for (std::size_t j = 0; j < family.u_grid.size(); ++j) {
            const Trajectory& traj = family.members[j];
            std::snprintf(buf, sizeof buf, "%.17g", grid.time(k));
            os << buf;
            std::snprintf(buf, sizeof buf, ",%.17g", family.u_grid[j]);
            os << buf;
            for (int i = 0; i < d; ++i) {
                std::snprintf(buf, sizeof buf, ",%.17g", traj.points(k, i));
                os << buf;
            }
            os << ',' << (traj.stopped_at && k >= *traj.stopped_at ? 1 : 0) << '\n';
        }
    }
}

void write_derivative_report_csv(const std::vector<DerivativeCheckRow>& rows, std::ostream& os) {
    os << "u,t,fd_norm,w_norm,rel_error\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.u, r.t, r.fd_norm,
                      r.w_norm, r.rel_error);
        os << buf;
    }
}

}  // namespace hdiff
