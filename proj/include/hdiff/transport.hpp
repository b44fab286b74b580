#pragma once

#include <iosfwd>
#include <vector>

#include "hdiff/sde.hpp"
#include "hdiff/types.hpp"

namespace hdiff {

enum class TransportKind { parallel, damped };

// Linear maps T_{X_0}M -> T_{X_{t_k}}M in chart coordinates, one per grid
// time. maps[0] is the identity.
struct TransportOperator {
    const Trajectory* traj = nullptr;
    TransportKind kind = TransportKind::parallel;
    std::vector<Mat> maps;

    // Gram defect |A_k^T g(t_k, X_k) A_k - g(0, X_0)|_max; zero iff the map is
    // a g(0) -> g(t_k) isometry.
    double isometry_defect(int k) const;
    void write_norms_csv(std::ostream& os) const;
};

// Integrates D^t P = -1/2 gdot^sharp(P) dt: per step, geodesic-transport the
// columns along the step, then apply the time correction at the arrival
// point/time. Static metrics reduce to pure geodesic transport.
TransportOperator parallel_transport_path(const Trajectory& traj);

// Integrates D^t W = (nabla_W Z - 1/2 Ric^sharp(W)) dt with the same
// transport-then-correct stepping.
TransportOperator damped_transport_path(const Trajectory& traj);

// ||A_k probe||_{g(t_k, X_k)} per grid time, for a probe with unit g(0)-norm.
std::vector<double> w_norm_profile(const TransportOperator& op, const Vec& probe);

}  // namespace hdiff
