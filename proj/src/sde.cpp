#include "hdiff/sde.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "hdiff/errors.hpp"
#include "hdiff/rng.hpp"

namespace hdiff {

void TimeGrid::validate() const {
    if (n_steps < 0) throw ConfigError("grid: n_steps must be >= 0");
    if (!(t_end > t0) && n_steps > 0) throw ConfigError("grid: t_end must exceed t0");
}

NoisePath NoisePath::sample(std::uint64_t seed, std::uint64_t stream_id, const TimeGrid& grid,
                            int d) {
    grid.validate();
    NoisePath np;
    np.seed = seed;
    np.stream_id = stream_id;
    np.increments.resize(grid.n_steps, d);
    const double root_dt = std::sqrt(grid.dt());
    std::uint64_t n = 0;
    for (int k = 0; k < grid.n_steps; ++k)
        for (int i = 0; i < d; ++i) np.increments(k, i) = gaussian_at(seed, stream_id, n++) * root_dt;
    return np;
}

NoisePath NoisePath::coarsen(int factor) const {
    if (factor < 1 || increments.rows() % factor != 0)
        throw SizeMismatch("coarsen: factor must divide n_steps");
    NoisePath np;
    np.seed = seed;
    np.stream_id = stream_id;
    np.increments.resize(increments.rows() / factor, increments.cols());
    for (int k = 0; k < np.increments.rows(); ++k)
        np.increments.row(k) = increments.middleRows(k * factor, factor).colwise().sum();
    return np;
}

std::pair<Vec, Vec> diffusion_step(const Manifold& m, double t, const Vec& x, double dt,
                                   const Vec& xi) {
    const Vec dm = m.frame(t, x) * (xi * std::sqrt(dt));
    const Vec y = m.exp(t, x, dm + m.drift(t, x) * dt);
    return {y, dm};
}

Trajectory simulate(std::shared_ptr<const Manifold> m, const Vec& x0, const TimeGrid& grid,
                    const NoisePath& noise) {
    grid.validate();
    const int d = m->dim();
    if (x0.size() != d) throw SizeMismatch("simulate: x0 dimension mismatch");
    if (!m->in_domain(x0)) throw InvalidStart("simulate: x0 outside chart domain");
    if (noise.increments.rows() != grid.n_steps || noise.increments.cols() != d)
        throw SizeMismatch("simulate: noise shape does not match grid/manifold");

    Trajectory traj;
    traj.grid = grid;
    traj.manifold = m;
    traj.points.setZero(grid.n_steps + 1, d);
    traj.martingale_increments.setZero(grid.n_steps, d);
    traj.frames.reserve(grid.n_steps);
    traj.points.row(0) = x0.transpose();

    const double dt = grid.dt();
    Vec x = x0;
    for (int k = 0; k < grid.n_steps; ++k) {
        const double t = grid.time(k);
        try {
            const Mat f = m->frame(t, x);
            // noise already carries sqrt(dt)
            const Vec dm = f * noise.increments.row(k).transpose();
            const Vec y = m->exp(t, x, dm + m->drift(t, x) * dt);
            traj.frames.push_back(f);
            traj.martingale_increments.row(k) = dm.transpose();
            traj.points.row(k + 1) = y.transpose();
            x = y;
        } catch (const Error&) {
            traj.stopped_at = k;
            for (int j = k; j < grid.n_steps; ++j) traj.points.row(j + 1) = x.transpose();
            break;
        }
    }
    return traj;
}

void Trajectory::write_csv(std::ostream& os) const {
    os << "step,t";
    for (int i = 0; i < d(); ++i) os << ",x" << i;
    os << ",stopped\n";
    char buf[32];
    for (int k = 0; k <= grid.n_steps; ++k) {
        os << k;
        std::snprintf(buf, sizeof buf, ",%.17g", grid.time(k));
        os << buf;
        for (int i = 0; i < d(); ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", points(k, i));
            os << buf;
        }
        os << ',' << (stopped_at && k >= *stopped_at ? 1 : 0) << '\n';
    }
}

namespace {
constexpr std::uint64_t kTrajMagic = 0x48444946'54524a31ull;  // "HDIFTRJ1"

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw Error("trajectory binary: truncated stream");
    return v;
}
}  // namespace

void Trajectory::write_binary(std::ostream& os) const {
    put(os, kTrajMagic);
    put(os, grid.t0);
    put(os, grid.t_end);
    put(os, static_cast<std::int64_t>(grid.n_steps));
    put(os, static_cast<std::int64_t>(d()));
    put(os, static_cast<std::int64_t>(stopped_at ? *stopped_at : -1));
    for (int k = 0; k <= grid.n_steps; ++k)
        for (int i = 0; i < d(); ++i) put(os, points(k, i));
    for (int k = 0; k < grid.n_steps; ++k)
        for (int i = 0; i < d(); ++i) put(os, martingale_increments(k, i));
}

Trajectory Trajectory::read_binary(std::istream& is, std::shared_ptr<const Manifold> m) {
    if (get<std::uint64_t>(is) != kTrajMagic) throw Error("trajectory binary: bad magic");
    Trajectory traj;
    traj.manifold = std::move(m);
    traj.grid.t0 = get<double>(is);
    traj.grid.t_end = get<double>(is);
    traj.grid.n_steps = static_cast<int>(get<std::int64_t>(is));
    const int d = static_cast<int>(get<std::int64_t>(is));
    const auto stopped = get<std::int64_t>(is);
    if (stopped >= 0) traj.stopped_at = static_cast<int>(stopped);
    traj.points.resize(traj.grid.n_steps + 1, d);
    traj.martingale_increments.resize(traj.grid.n_steps, d);
    for (int k = 0; k <= traj.grid.n_steps; ++k)
        for (int i = 0; i < d; ++i) traj.points(k, i) = get<double>(is);
    for (int k = 0; k < traj.grid.n_steps; ++k)
        for (int i = 0; i < d; ++i) traj.martingale_increments(k, i) = get<double>(is);
    return traj;
}

}  // namespace hdiff
