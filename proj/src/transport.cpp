#include "hdiff/transport.hpp"

#include <cstdio>
#include <ostream>

#include "hdiff/errors.hpp"

namespace hdiff {

namespace {

TransportOperator integrate(const Trajectory& traj, TransportKind kind) {
    const Manifold& m = *traj.manifold;
    const int d = traj.d();
    const int last = traj.last_step();
    const double dt = traj.grid.dt();
    const bool time_dep = m.time_dependent();
    const bool has_drift = m.drift_spec().kind != DriftSpec::Kind::zero;

    TransportOperator op;
    op.traj = &traj;
    op.kind = kind;
    op.maps.assign(traj.grid.n_steps + 1, Mat::Identity(d, d));

    Mat a = Mat::Identity(d, d);
    for (int k = 0; k < last; ++k) {
        const double t = traj.grid.time(k);
        const double t1 = traj.grid.time(k + 1);
        const Vec x = traj.point(k);
        const Vec y = traj.point(k + 1);
        Mat b = m.transport_matrix(t, x, y, a);
        if (kind == TransportKind::parallel) {
            if (time_dep) {
                const Mat gdot_sharp = m.metric(t1, y).llt().solve(m.metric_dt(t1, y));
                b -= (0.5 * dt) * (gdot_sharp * b);
            }
        } else {
            Mat corr = -0.5 * m.ricci_sharp(t1, y);
            if (has_drift) corr += m.drift_nabla(t1, y);
            b += dt * (corr * b);
        }
        a = b;
        op.maps[k + 1] = a;
    }
    for (int k = last + 1; k <= traj.grid.n_steps; ++k) op.maps[k] = a;
    return op;
}

}  // namespace

TransportOperator parallel_transport_path(const Trajectory& traj) {
    return integrate(traj, TransportKind::parallel);
}

TransportOperator damped_transport_path(const Trajectory& traj) {
    return integrate(traj, TransportKind::damped);
}

double TransportOperator::isometry_defect(int k) const {
    const Manifold& m = *traj->manifold;
    const Mat g0 = m.metric(traj->grid.t0, traj->point(0));
    const Mat gk = m.metric(traj->grid.time(k), traj->point(k));
    return (maps[k].transpose() * gk * maps[k] - g0).cwiseAbs().maxCoeff();
}

std::vector<double> w_norm_profile(const TransportOperator& op, const Vec& probe) {
    const Trajectory& traj = *op.traj;
    const Manifold& m = *traj.manifold;
    std::vector<double> out(op.maps.size());
    for (std::size_t k = 0; k < op.maps.size(); ++k) {
        const int kk = std::min<int>(static_cast<int>(k), traj.last_step());
        out[k] = m.norm(traj.grid.time(kk), traj.point(kk), op.maps[k] * probe);
    }
    return out;
}

void TransportOperator::write_norms_csv(std::ostream& os) const {
    os << "step,t,op_norm,isometry_defect\n";
    char buf[96];
    for (std::size_t k = 0; k < maps.size(); ++k) {
        const double onorm = maps[k].jacobiSvd().singularValues()(0);
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", k,
                      traj->grid.time(static_cast<int>(k)), onorm,
                      isometry_defect(static_cast<int>(k)));
        os << buf;
    }
}

}  // namespace hdiff
