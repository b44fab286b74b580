#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hdiff/manifold.hpp"
#include "hdiff/types.hpp"

namespace hdiff {

struct TimeGrid {
    double t0 = 0.0;
    double t_end = 1.0;
    int n_steps = 1000;

    double dt() const { return (t_end - t0) / n_steps; }
    double time(int k) const { return t0 + k * dt(); }
    void validate() const;
};

// Gaussian increments scaled by sqrt(dt), fully determined by
// (seed, stream_id, grid, d). Distinct stream ids are independent streams of
// the counter-based generator.
struct NoisePath {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    Mat increments;  // n_steps x d

    static NoisePath sample(std::uint64_t seed, std::uint64_t stream_id, const TimeGrid& grid,
                            int d);

    // Sum consecutive groups of `factor` rows: the same Brownian path viewed
    // on a coarser grid. For coupled-resolution studies; not a substitute for
    // sample() on the coarse grid.
    NoisePath coarsen(int factor) const;
};

// A sampled diffusion path. Arrays keep full grid length; after a chart exit
// at step `stopped_at` the point is frozen and the remaining increments are
// zero.
struct Trajectory {
    TimeGrid grid;
    std::shared_ptr<const Manifold> manifold;
    Mat points;                 // (n_steps+1) x d
    Mat martingale_increments;  // n_steps x d, tangent at the pre-point
    std::vector<Mat> frames;    // per-step frame, empty for coupled paths
    std::optional<int> stopped_at;

    int d() const { return static_cast<int>(points.cols()); }
    int last_step() const { return stopped_at ? *stopped_at : grid.n_steps; }
    Vec point(int k) const { return points.row(k).transpose(); }
    bool alive_at(int k) const { return k <= last_step(); }

    void write_csv(std::ostream& os) const;
    void write_binary(std::ostream& os) const;
    static Trajectory read_binary(std::istream& is, std::shared_ptr<const Manifold> m);
};

// One geodesic Euler-Maruyama step: dm = frame(t,x) * xi * sqrt(dt),
// x' = exp(t, x, dm + Z(t,x) dt). Returns (x', dm).
std::pair<Vec, Vec> diffusion_step(const Manifold& m, double t, const Vec& x, double dt,
                                   const Vec& xi);

Trajectory simulate(std::shared_ptr<const Manifold> m, const Vec& x0, const TimeGrid& grid,
                    const NoisePath& noise);

}  // namespace hdiff
