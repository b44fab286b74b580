#include "hdiff/ot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

#include "hdiff/errors.hpp"
#include "hdiff/parallel.hpp"

namespace hdiff {

EmpiricalMeasure EmpiricalMeasure::uniform(Mat points) {
    EmpiricalMeasure mu;
    const int n = static_cast<int>(points.rows());
    mu.points = std::move(points);
    mu.weights = Vec::Constant(n, 1.0 / n);
    return mu;
}

void EmpiricalMeasure::validate(const Manifold* m) const {
    if (weights.size() != points.rows()) throw SizeMismatch("measure: weights/points mismatch");
    if (weights.minCoeff() < 0.0) throw ConfigError("measure: negative weight");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw ConfigError("measure: weights must sum to 1");
    if (m)
        for (int i = 0; i < size(); ++i)
            if (!m->in_domain(point(i))) throw DomainError("measure: point outside chart domain");
}

CostProfile CostProfile::power(double p) {
    CostProfile c;
    c.name = "power";
    c.p = p;
    return c;
}

CostProfile CostProfile::custom(std::function<double(double)> f) {
    CostProfile c;
    c.name = "custom";
    c.evaluator = std::move(f);
    return c;
}

double CostProfile::operator()(double r) const {
    if (name == "power") return std::pow(r, p);
    return evaluator(r);
}

bool CostProfile::check_monotone(double r_max, int n) const {
    double prev = (*this)(0.0);
    for (int i = 1; i <= n; ++i) {
        const double cur = (*this)(r_max * i / n);
        if (cur < prev - 1e-12) return false;
        prev = cur;
    }
    return true;
}

Mat cost_matrix(const Manifold& m, double t, const EmpiricalMeasure& mu,
                const EmpiricalMeasure& nu, const CostProfile& profile) {
    Mat c(mu.size(), nu.size());
    for (int i = 0; i < mu.size(); ++i)
        for (int j = 0; j < nu.size(); ++j)
            c(i, j) = profile(m.distance(t, mu.point(i), nu.point(j)));
    return c;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// O(n^3) assignment via shortest augmenting paths with dual potentials.
// Returns row -> column matching; u, v satisfy u_i + v_j <= c_ij with
// equality on matched pairs.
void hungarian(const Mat& a, std::vector<int>& row_to_col, Vec& u, Vec& v) {
    const int n = static_cast<int>(a.rows());
    std::vector<double> pu(n + 1, 0.0), pv(n + 1, 0.0);
    std::vector<int> match(n + 1, 0);  // 1-based column -> row
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j)
                if (!used[j]) {
                    const double cur = a(i0 - 1, j - 1) - pu[i0] - pv[j];
                    if (cur < minv[j]) {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta) {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    pu[match[j]] += delta;
                    pv[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0);
    }
    row_to_col.assign(n, -1);
    for (int j = 1; j <= n; ++j)
        if (match[j] > 0) row_to_col[match[j] - 1] = j - 1;
    u.resize(n);
    v.resize(n);
    for (int i = 0; i < n; ++i) u[i] = pu[i + 1];
    for (int j = 0; j < n; ++j) v[j] = pv[j + 1];
}

// Dense transportation simplex (u-v method) with Bland-style pivoting.
void transport_simplex(const Mat& c, const Vec& a, const Vec& b, Mat& x) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    x.setZero(n, m);

    struct Cell {
        int i, j;
    };
    std::vector<Cell> basis;
    basis.reserve(n + m - 1);

    // Northwest-corner initial basis.
    {
        Vec ra = a, rb = b;
        int i = 0, j = 0;
        while (i < n && j < m) {
            const double alloc = std::min(ra[i], rb[j]);
            x(i, j) = alloc;
            basis.push_back({i, j});
            ra[i] -= alloc;
            rb[j] -= alloc;
            if (i == n - 1 && j == m - 1) break;
            // Break ties toward the row move; the skipped zero stays basic.
            if (ra[i] <= rb[j] && i < n - 1)
                ++i;
            else if (j < m - 1)
                ++j;
            else
                ++i;
        }
    }

    std::vector<std::vector<int>> row_cells(n), col_cells(m);
    auto rebuild_adj = [&] {
        for (auto& r : row_cells) r.clear();
        for (auto& cl : col_cells) cl.clear();
        for (int t = 0; t < static_cast<int>(basis.size()); ++t) {
            row_cells[basis[t].i].push_back(t);
            col_cells[basis[t].j].push_back(t);
        }
    };

    Vec du(n), dv(m);
    std::vector<char> useen(n), vseen(m);
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    const double tol = 1e-11 * scale;
    const int max_iter = 8 * (n + 1) * (m + 1);

    for (int iter = 0; iter < max_iter; ++iter) {
        rebuild_adj();
        // Duals from the basis tree: u_i + v_j = c_ij on basic cells.
        std::fill(useen.begin(), useen.end(), 0);
        std::fill(vseen.begin(), vseen.end(), 0);
        du.setZero();
        dv.setZero();
        std::vector<int> stack = {0};  // row nodes 0..n-1, col nodes n..n+m-1
        useen[0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node < n) {
                for (const int t : row_cells[node]) {
                    const int j = basis[t].j;
                    if (!vseen[j]) {
                        vseen[j] = 1;
                        dv[j] = c(node, j) - du[node];
                        stack.push_back(n + j);
                    }
                }
            } else {
                const int j = node - n;
                for (const int t : col_cells[j]) {
                    const int i = basis[t].i;
                    if (!useen[i]) {
                        useen[i] = 1;
                        du[i] = c(i, j) - dv[j];
                        stack.push_back(i);
                    }
                }
            }
        }

        // Bland: first cell with negative reduced cost enters.
        int ei = -1, ej = -1;
        for (int i = 0; i < n && ei < 0; ++i)
            for (int j = 0; j < m; ++j)
                if (c(i, j) - du[i] - dv[j] < -tol) {
                    ei = i;
                    ej = j;
                    break;
                }
        if (ei < 0) break;  // optimal

        // Cycle: tree path from row ei to column ej, alternating cells.
        std::vector<int> parent_cell(n + m, -1), parent_node(n + m, -1);
        std::vector<char> seen(n + m, 0);
        std::vector<int> queue = {ei};
        seen[ei] = 1;
        while (!queue.empty()) {
            const int node = queue.back();
            queue.pop_back();
            if (node == n + ej) break;
            const auto& cells = node < n ? row_cells[node] : col_cells[node - n];
            for (const int t : cells) {
                const int next = node < n ? n + basis[t].j : basis[t].i;
                if (!seen[next]) {
                    seen[next] = 1;
                    parent_cell[next] = t;
                    parent_node[next] = node;
                    queue.push_back(next);
                }
            }
        }
        if (!seen[n + ej]) throw Error("transport simplex: basis not connected");

        // Walk back collecting the alternating cycle; odd positions leave.
        std::vector<Cell> minus, plus;
        plus.push_back({ei, ej});
        int node = n + ej;
        bool minus_turn = true;
        while (node != ei) {
            const int t = parent_cell[node];
            if (minus_turn)
                minus.push_back(basis[t]);
            else
                plus.push_back(basis[t]);
            minus_turn = !minus_turn;
            node = parent_node[node];
        }

        double theta = kInf;
        int leave_idx = -1;
        for (int t = 0; t < static_cast<int>(basis.size()); ++t)
            for (const auto& cell : minus)
                if (basis[t].i == cell.i && basis[t].j == cell.j && x(cell.i, cell.j) <= theta) {
                    // <= keeps the choice deterministic under degeneracy
                    if (x(cell.i, cell.j) < theta ||
                        (leave_idx >= 0 && (basis[t].i < basis[leave_idx].i ||
                                            (basis[t].i == basis[leave_idx].i &&
                                             basis[t].j < basis[leave_idx].j)))) {
                        theta = x(cell.i, cell.j);
                        leave_idx = t;
                    }
                }
        if (leave_idx < 0) throw Error("transport simplex: unbounded pivot");

        for (const auto& cell : plus) x(cell.i, cell.j) += theta;
        for (const auto& cell : minus) x(cell.i, cell.j) -= theta;
        x(basis[leave_idx].i, basis[leave_idx].j) = 0.0;
        basis[leave_idx] = {ei, ej};
    }
}

}  // namespace

TransportPlan solve_exact(const Mat& costs, const Vec& wmu, const Vec& wnu) {
    const int n = static_cast<int>(costs.rows());
    const int m = static_cast<int>(costs.cols());
    if (wmu.size() != n || wnu.size() != m)
        throw SizeMismatch("solve_exact: weight/cost shape mismatch");
    if (std::abs(wmu.sum() - wnu.sum()) > 1e-9)
        throw SizeMismatch("solve_exact: weight totals differ");

    TransportPlan plan;
    const bool uniform = n == m && (wmu.array() - 1.0 / n).abs().maxCoeff() < 1e-12 &&
                         (wnu.array() - 1.0 / n).abs().maxCoeff() < 1e-12;
    if (uniform) {
        hungarian(costs, plan.assignment, plan.potential_u, plan.potential_v);
        plan.coupling.setZero(n, m);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            plan.coupling(i, plan.assignment[i]) = 1.0 / n;
            total += costs(i, plan.assignment[i]);
        }
        plan.cost_value = total / n;
    } else {
        transport_simplex(costs, wmu, wnu, plan.coupling);
        plan.cost_value = (plan.coupling.array() * costs.array()).sum();
    }
    return plan;
}

void TransportPlan::check_marginals(const Vec& wmu, const Vec& wnu, double tol) const {
    if ((coupling.rowwise().sum() - wmu).cwiseAbs().maxCoeff() > tol ||
        (coupling.colwise().sum().transpose() - wnu).cwiseAbs().maxCoeff() > tol)
        throw Error("transport plan: marginals do not match");
}

double wasserstein_p(const Manifold& m, double t, const EmpiricalMeasure& mu,
                     const EmpiricalMeasure& nu, double p) {
    if (!(p > 0.0)) throw ConfigError("wasserstein_p: p must be positive");
    const Mat costs = cost_matrix(m, t, mu, nu, CostProfile::power(p));
    const TransportPlan plan = solve_exact(costs, mu.weights, nu.weights);
    return std::pow(std::max(0.0, plan.cost_value), 1.0 / p);
}

HorizontalFamily evolve_pair_fan(std::shared_ptr<const Manifold> m, const Vec& x, const Vec& y,
                                 const TimeGrid& grid, const NoisePath& noise,
                                 double fan_alpha) {
    if (!m->injectivity_guard(grid.t0, x, y))
        throw CutLocusError("evolve_pair_fan: endpoints outside injectivity guard");
    const Vec v = m->log(grid.t0, x, y);
    const int k = std::max(1, static_cast<int>(std::lround(1.0 / fan_alpha)));
    const double alpha = 1.0 / k;
    std::vector<double> u_grid(k + 1);
    for (int i = 0; i <= k; ++i) u_grid[i] = static_cast<double>(i) * alpha;
    u_grid.back() = 1.0;
    const CurveC1 curve = CurveC1::geodesic(m, grid.t0, x, v, 1.0);
    return build_family(m, curve, u_grid, alpha, grid, noise);
}

std::vector<double> isotone_nonincreasing(const std::vector<double>& y) {
    // PAVA on the reversed sequence (non-decreasing there).
    const int n = static_cast<int>(y.size());
    std::vector<double> level;
    std::vector<int> count;
    for (int i = n - 1; i >= 0; --i) {
        level.push_back(y[i]);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const double merged = (level[level.size() - 2] * count[count.size() - 2] +
                                   level.back() * count.back()) /
                                  (count[count.size() - 2] + count.back());
            count[count.size() - 2] += count.back();
            level[level.size() - 2] = merged;
            level.pop_back();
            count.pop_back();
        }
    }
    std::vector<double> fit;
    fit.reserve(n);
    for (int blk = static_cast<int>(level.size()) - 1; blk >= 0; --blk)
        for (int r = 0; r < count[blk]; ++r) fit.push_back(level[blk]);
    return fit;
}

ContractionReport contraction_experiment(std::shared_ptr<const Manifold> m,
                                         const EmpiricalMeasure& mu0,
                                         const EmpiricalMeasure& nu0, const TimeGrid& grid,
                                         const ContractionParams& params) {
    mu0.validate(m.get());
    nu0.validate(m.get());
    if (params.report_steps.empty())
        throw ConfigError("contraction_experiment: no report steps");
    if (!params.profile.check_monotone(4.0))
        throw ConfigError("contraction_experiment: cost profile is not nondecreasing");

    ContractionReport rep;
    rep.rate_k = params.rate_k;
    rep.seed = params.seed;
    rep.n_replicas = params.n_replicas;

    // Initial optimal plan; its support defines the evolved pairs.
    const Mat c0 = cost_matrix(*m, grid.t0, mu0, nu0, params.profile);
    const TransportPlan plan0 = solve_exact(c0, mu0.weights, nu0.weights);
    plan0.check_marginals(mu0.weights, nu0.weights);
    rep.w_c0 = plan0.cost_value;
    rep.w_p0 = wasserstein_p(*m, grid.t0, mu0, nu0, params.p);

    struct Pair {
        Vec x, y;
        double w;
    };
    std::vector<Pair> pairs;
    for (int i = 0; i < plan0.coupling.rows(); ++i)
        for (int j = 0; j < plan0.coupling.cols(); ++j)
            if (plan0.coupling(i, j) > 1e-14)
                pairs.push_back({mu0.point(i), nu0.point(j), plan0.coupling(i, j)});
    rep.n_effective = static_cast<int>(pairs.size());

    const int n_pairs = rep.n_effective;
    const int d = m->dim();
    const int n_rep = std::max(1, params.n_replicas);
    const int n_report = static_cast<int>(params.report_steps.size());

    for (const int k : params.report_steps) {
        if (k < 0 || k > grid.n_steps)
            throw ConfigError("contraction_experiment: report step outside grid");
        rep.times.push_back(grid.time(k));
    }

    rep.w_c.assign(n_report, 0.0);
    rep.w_p.assign(n_report, 0.0);

    for (int r = 0; r < n_rep; ++r) {
        // One fan per matched pair, independent streams across pairs.
        std::vector<HorizontalFamily> fans(n_pairs);
        parallel_for(n_pairs, params.threads, [&](int i) {
            const NoisePath noise = NoisePath::sample(
                params.seed, static_cast<std::uint64_t>(r) * n_pairs + i, grid, d);
            fans[i] = evolve_pair_fan(m, pairs[i].x, pairs[i].y, grid, noise, params.fan_alpha);
        });

        Vec w(n_pairs);
        for (int i = 0; i < n_pairs; ++i) w[i] = pairs[i].w;

        for (int s = 0; s < n_report; ++s) {
            const int k = params.report_steps[s];
            const double t = grid.time(k);
            EmpiricalMeasure mu_t, nu_t;
            mu_t.points.resize(n_pairs, d);
            nu_t.points.resize(n_pairs, d);
            mu_t.weights = w;
            nu_t.weights = w;
            double pair_plan_cost = 0.0;
            for (int i = 0; i < n_pairs; ++i) {
                const Vec a = fans[i].members.front().point(k);
                const Vec b = fans[i].members.back().point(k);
                mu_t.points.row(i) = a.transpose();
                nu_t.points.row(i) = b.transpose();
                pair_plan_cost += w[i] * params.profile(m->distance(t, a, b));
            }
            const Mat ct = cost_matrix(*m, t, mu_t, nu_t, params.profile);
            const TransportPlan pt = solve_exact(ct, mu_t.weights, nu_t.weights);
            // The evolved pairing is itself a feasible plan: solved cost can
            // only be smaller.
            if (pt.cost_value > pair_plan_cost + 1e-9 * (1.0 + std::abs(pair_plan_cost)))
                rep.certificate_ok = false;
            rep.w_c[s] += pt.cost_value / n_rep;
            rep.w_p[s] += wasserstein_p(*m, t, mu_t, nu_t, params.p) / n_rep;
        }
    }

    rep.bound.resize(n_report);
    rep.ratio.resize(n_report);
    rep.max_ratio = 0.0;
    for (int s = 0; s < n_report; ++s) {
        rep.bound[s] = std::exp(-0.5 * params.rate_k * rep.times[s]) * rep.w_p0;
        rep.ratio[s] = rep.w_p0 > 0.0 ? rep.w_p[s] / rep.w_p0 : 0.0;
        rep.max_ratio = std::max(rep.max_ratio,
                                 rep.bound[s] > 0.0 ? rep.w_p[s] / rep.bound[s] : 0.0);
    }

    // Monotonicity of t -> W_c with W_c(0) prepended.
    std::vector<double> series = {rep.w_c0};
    series.insert(series.end(), rep.w_c.begin(), rep.w_c.end());
    const std::vector<double> fit = isotone_nonincreasing(series);
    double ss = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i)
        ss += (series[i] - fit[i]) * (series[i] - fit[i]);
    rep.monotone_residual =
        rep.w_c0 > 0.0 ? std::sqrt(ss / series.size()) / rep.w_c0 : 0.0;
    return rep;
}

void ContractionReport::write_csv(std::ostream& os) const {
    os << "t,W_c,W_p,bound,ratio,n_effective\n";
    char buf[200];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", 0.0, w_c0, w_p0, w_p0,
                  1.0, n_effective);
    os << buf;
    for (std::size_t s = 0; s < times.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", times[s], w_c[s],
                      w_p[s], bound[s], ratio[s], n_effective);
        os << buf;
    }
}

std::string ContractionReport::summary_json() const {
    std::ostringstream os;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "{\n";
    os << "  \"seed\": " << seed << ",\n";
    os << "  \"n_replicas\": " << n_replicas << ",\n";
    os << "  \"n_effective\": " << n_effective << ",\n";
    os << "  \"rate_k\": " << num(rate_k) << ",\n";
    os << "  \"w_p0\": " << num(w_p0) << ",\n";
    os << "  \"max_ratio_to_bound\": " << num(max_ratio) << ",\n";
    os << "  \"monotone_residual\": " << num(monotone_residual) << ",\n";
    os << "  \"monotone_ok\": " << (monotone_residual <= 0.02 ? "true" : "false") << ",\n";
    os << "  \"certificate_ok\": " << (certificate_ok ? "true" : "false") << "\n";
    os << "}\n";
    return os.str();
}

}  // namespace hdiff
