#pragma once

#include "hdiff/manifold.hpp"
#include "hdiff/types.hpp"

namespace hdiff {

// Generic chart-level geodesic machinery for manifolds without closed forms.
// Also serves as the independent cross-check route for the closed-form
// instances in the test suite.

struct GeodesicState {
    Vec x;
    Vec v;
};

// Integrate x' = v, v'^k = -Gamma^k_{ij} v^i v^j over unit parameter with RK4.
GeodesicState integrate_geodesic(const Manifold& m, double t, const Vec& x, const Vec& v,
                                 int n_substeps = 0);

Vec ode_exp(const Manifold& m, double t, const Vec& x, const Vec& v);

// Shooting with damped Newton on v -> exp(x, v) - y.
Vec shooting_log(const Manifold& m, double t, const Vec& x, const Vec& y);

// Parallel transport of w along the geodesic x -> y by integrating
// A'^k = -Gamma^k_{ij} v^i A^j together with the geodesic.
Vec ode_transport(const Manifold& m, double t, const Vec& x, const Vec& y, const Vec& w);

}  // namespace hdiff
