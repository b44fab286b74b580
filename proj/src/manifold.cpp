#include "hdiff/manifold.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "hdiff/errors.hpp"
#include "hdiff/geodesic_ode.hpp"

namespace hdiff {

bool Manifold::in_domain_interior(const Vec& x, double margin) const {
    (void)margin;
    return in_domain(x);
}

Mat Manifold::metric_dt(double t, const Vec& x) const {
    (void)t;
    return Mat::Zero(dim(), dim());
}

Vec Manifold::drift(double t, const Vec& x) const {
    if (!drift_fn_) return Vec::Zero(dim());
    return drift_fn_(*this, t, x);
}

bool Manifold::injectivity_guard(double t, const Vec& x, const Vec& y) const {
    (void)t;
    return in_domain(x) && in_domain(y);
}

Christoffel Manifold::christoffel(double t, const Vec& x) const {
    const int d = dim();
    const double h = kFdStep;
    if (!in_domain_interior(x, h))
        throw DomainError(name() + ": FD stencil leaves chart domain");

    // dg[k](i,j) = d g_ij / d x^k by central differences.
    std::vector<Mat> dg(d);
    for (int k = 0; k < d; ++k) {
        Vec xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        dg[k] = (metric(t, xp) - metric(t, xm)) / (2.0 * h);
    }
    const Mat ginv = metric(t, x).inverse();
    Christoffel gamma(d, Mat::Zero(d, d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = j; k < d; ++k) {
                double s = 0.0;
                for (int l = 0; l < d; ++l)
                    s += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
                gamma[i](j, k) = 0.5 * s;
                gamma[i](k, j) = gamma[i](j, k);
            }
    return gamma;
}

Mat Manifold::ricci(double t, const Vec& x) const {
    const int d = dim();
    const double h = kFdStep;
    if (!in_domain_interior(x, 2.0 * h))
        throw DomainError(name() + ": curvature stencil leaves chart domain");

    // dGamma[m] = d christoffel / d x^m.
    std::vector<Christoffel> dgamma(d);
    for (int m = 0; m < d; ++m) {
        Vec xp = x, xm = x;
        xp[m] += h;
        xm[m] -= h;
        const Christoffel gp = christoffel(t, xp);
        const Christoffel gm = christoffel(t, xm);
        dgamma[m].resize(d);
        for (int i = 0; i < d; ++i) dgamma[m][i] = (gp[i] - gm[i]) / (2.0 * h);
    }
    const Christoffel g = christoffel(t, x);

    // Ric_{sn} = d_m Gamma^m_{ns} - d_n Gamma^m_{ms}
    //            + Gamma^m_{ml} Gamma^l_{ns} - Gamma^m_{nl} Gamma^l_{ms}
    Mat ric = Mat::Zero(d, d);
    for (int s = 0; s < d; ++s)
        for (int n = 0; n < d; ++n) {
            double val = 0.0;
            for (int m = 0; m < d; ++m) {
                val += dgamma[m][m](n, s) - dgamma[n][m](m, s);
                for (int l = 0; l < d; ++l)
                    val += g[m](m, l) * g[l](n, s) - g[m](n, l) * g[l](m, s);
            }
            ric(s, n) = val;
        }
    // Symmetrize away FD round-off.
    return 0.5 * (ric + ric.transpose());
}

Mat Manifold::ricci_sharp(double t, const Vec& x) const {
    return metric(t, x).llt().solve(ricci(t, x));
}

Vec Manifold::exp(double t, const Vec& x, const Vec& v) const {
    return ode_exp(*this, t, x, v);
}

Vec Manifold::log(double t, const Vec& x, const Vec& y) const {
    return shooting_log(*this, t, x, y);
}

double Manifold::distance(double t, const Vec& x, const Vec& y) const {
    return norm(t, x, log(t, x, y));
}

Vec Manifold::transport(double t, const Vec& x, const Vec& y, const Vec& w) const {
    return ode_transport(*this, t, x, y, w);
}

Mat Manifold::transport_matrix(double t, const Vec& x, const Vec& y, const Mat& a) const {
    Mat out(a.rows(), a.cols());
    for (int j = 0; j < a.cols(); ++j) out.col(j) = transport(t, x, y, a.col(j));
    return out;
}

Mat Manifold::frame(double t, const Vec& x) const {
    const Mat g = metric(t, x);
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success)
        throw DomainError(name() + ": metric not positive definite");
    const Mat l = llt.matrixL();
    // F = L^{-T}: F^T g F = (L^T F)^T (L^T F) = I.
    return l.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(dim(), dim()));
}

double Manifold::norm(double t, const Vec& x, const Vec& v) const {
    return std::sqrt(std::max(0.0, v.dot(metric(t, x) * v)));
}

double Manifold::inner(double t, const Vec& x, const Vec& v, const Vec& w) const {
    return v.dot(metric(t, x) * w);
}

Mat Manifold::drift_nabla(double t, const Vec& x) const {
    const int d = dim();
    const double h = kFdStep;
    Mat dz(d, d);  // dz(i,j) = d Z^i / d x^j
    for (int j = 0; j < d; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        dz.col(j) = (drift(t, xp) - drift(t, xm)) / (2.0 * h);
    }
    const Christoffel gamma = christoffel(t, x);
    const Vec z = drift(t, x);
    Mat cov = dz;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cov(i, j) += gamma[i].row(j).dot(z);
    return cov;
}

double Manifold::potential(const std::string& pname, double t, const Vec& x) const {
    (void)t;
    if (pname == "quadratic_well") return -0.5 * x.squaredNorm();
    throw ConfigError(name() + ": unknown potential '" + pname + "'");
}

void Manifold::init_drift() {
    switch (drift_spec_.kind) {
        case DriftSpec::Kind::zero:
            drift_fn_ = nullptr;
            break;
        case DriftSpec::Kind::constant: {
            if (drift_spec_.value.size() != dim())
                throw ConfigError("constant drift dimension mismatch");
            const Vec c = drift_spec_.value;
            drift_fn_ = [c](const Manifold&, double, const Vec&) { return c; };
            break;
        }
        case DriftSpec::Kind::gradient: {
            const std::string pname = drift_spec_.potential;
            potential(pname, 0.0, chart_center());  // unknown names fail here
            drift_fn_ = [pname](const Manifold& m, double t, const Vec& x) {
                const int d = m.dim();
                Vec dv(d);
                for (int j = 0; j < d; ++j) {
                    Vec xp = x, xm = x;
                    xp[j] += kFdStep;
                    xm[j] -= kFdStep;
                    dv[j] = (m.potential(pname, t, xp) - m.potential(pname, t, xm)) /
                            (2.0 * kFdStep);
                }
                return Vec(m.metric(t, x).llt().solve(dv));
            };
            break;
        }
    }
}

}  // namespace hdiff
