"""Smoke tests for the compiled module, including cross-checks of the exact
optimal-transport solvers against scipy."""

import json
import math
import tempfile

import numpy as np
import pytest
import scipy.optimize

import hdiff


def test_version_and_import():
    assert hdiff.__version__


def test_manifold_geometry_roundtrip():
    sph = hdiff.make_manifold("sphere", {"radius": 1.0})
    assert sph.dim == 2
    x = np.array([math.pi / 2, 0.0])
    g = sph.metric(0.0, x)
    np.testing.assert_allclose(g, np.eye(2), atol=1e-15)

    v = np.array([0.3, -0.4])
    y = sph.exp(0.0, x, v)
    back = sph.log(0.0, x, y)
    np.testing.assert_allclose(back, v, atol=1e-10)
    assert sph.distance(0.0, x, y) == pytest.approx(np.hypot(0.3, -0.4), abs=1e-12)

    with pytest.raises(hdiff.CutLocusError):
        sph.log(0.0, x, np.array([math.pi / 2, math.pi]))


def test_backward_ricci_flow_metric():
    brf = hdiff.make_manifold("brf_sphere", {"initial_radius": 1.0})
    x = np.array([math.pi / 2, 0.3])
    np.testing.assert_allclose(brf.metric_dt(0.2, x), brf.ricci(0.2, x), atol=1e-14)
    assert brf.distance(0.5, x, np.array([math.pi / 2, 0.8])) == pytest.approx(
        math.sqrt(1.5) * 0.5, abs=1e-12
    )


def test_simulation_reproducibility():
    sph = hdiff.make_manifold("sphere", {"radius": 1.0})
    grid = hdiff.TimeGrid(0.0, 0.2, 200)
    noise = hdiff.sample_noise(42, 0, grid, 2)
    a = hdiff.simulate(sph, np.array([math.pi / 2, 0.0]), grid, noise)
    b = hdiff.simulate(sph, np.array([math.pi / 2, 0.0]), grid, noise)
    np.testing.assert_array_equal(a.points, b.points)
    assert a.points.shape == (201, 2)
    assert a.stopped_at is None

    other = hdiff.simulate(
        sph, np.array([math.pi / 2, 0.0]), grid, hdiff.sample_noise(42, 1, grid, 2)
    )
    assert not np.array_equal(a.points, other.points)


def test_damped_profile_decay():
    sph = hdiff.make_manifold("sphere", {"radius": 1.0})
    grid = hdiff.TimeGrid(0.0, 0.5, 500)
    traj = hdiff.simulate(
        sph, np.array([math.pi / 2, 0.0]), grid, hdiff.sample_noise(7, 0, grid, 2)
    )
    op = hdiff.damped_transport_path(traj)
    probe = sph.frame(0.0, traj.point(0))[:, 0]
    profile = hdiff.w_norm_profile(op, probe)
    for k in range(0, traj.last_step + 1, 50):
        assert profile[k] == pytest.approx(math.exp(-0.5 * grid.time(k)), rel=0.01)


def test_family_euclidean_exact():
    eu = hdiff.make_manifold("euclidean", {"dim": 2})
    grid = hdiff.TimeGrid(0.0, 0.2, 200)
    curve = hdiff.CurveC1.geodesic(eu, 0.0, np.zeros(2), np.array([1.0, 0.5]), 0.3)
    u_grid = [0.0, 0.1, 0.101, 0.2, 0.3]
    fam = hdiff.build_family(eu, curve, u_grid, 0.1, grid, hdiff.sample_noise(3, 0, grid, 2))
    base = fam.members[0].points
    for j, u in enumerate(u_grid):
        np.testing.assert_allclose(
            fam.members[j].points - base,
            np.tile(curve.eval(u) - curve.eval(0.0), (base.shape[0], 1)),
            atol=1e-12,
        )
    check = hdiff.derivative_check(fam, grid.n_steps, 0.1, 1e-3)
    assert check["rel_error"] < 1e-3
    with pytest.raises(hdiff.MissingGridPointError):
        hdiff.derivative_check(fam, grid.n_steps, 0.15, 1e-3)


def test_assignment_against_scipy():
    rng = np.random.default_rng(1)
    for n in [2, 3, 5, 8, 13]:
        costs = rng.random((n, n))
        w = np.full(n, 1.0 / n)
        plan = hdiff.solve_exact(costs, w, w)
        rows, cols = scipy.optimize.linear_sum_assignment(costs)
        expected = costs[rows, cols].sum() / n
        assert plan.cost_value == pytest.approx(expected, abs=1e-12)


def test_weighted_transport_against_scipy_linprog():
    rng = np.random.default_rng(2)
    for n, m in [(3, 4), (5, 3), (6, 6)]:
        costs = rng.random((n, m))
        a = rng.random(n) + 0.1
        b = rng.random(m) + 0.1
        a /= a.sum()
        b /= b.sum()
        plan = hdiff.solve_exact(costs, a, b)

        # Reference: the LP in standard form solved by HiGHS.
        a_eq = []
        for i in range(n):
            row = np.zeros(n * m)
            row[i * m : (i + 1) * m] = 1.0
            a_eq.append(row)
        for j in range(m):
            row = np.zeros(n * m)
            row[j::m] = 1.0
            a_eq.append(row)
        res = scipy.optimize.linprog(
            costs.ravel(), A_eq=np.array(a_eq), b_eq=np.concatenate([a, b]),
            bounds=(0, None), method="highs",
        )
        assert res.success
        assert plan.cost_value == pytest.approx(res.fun, abs=1e-9)

        np.testing.assert_allclose(plan.coupling.sum(axis=1), a, atol=1e-12)
        np.testing.assert_allclose(plan.coupling.sum(axis=0), b, atol=1e-12)


def test_wasserstein_diracs():
    sph = hdiff.make_manifold("sphere", {"radius": 1.0})
    mu = hdiff.EmpiricalMeasure(np.array([[math.pi / 2, 0.0]]))
    nu = hdiff.EmpiricalMeasure(np.array([[math.pi / 2, 0.6]]))
    for p in [0.5, 1.0, 2.0]:
        assert hdiff.wasserstein_p(sph, 0.0, mu, nu, p) == pytest.approx(0.6, abs=1e-12)


def test_pair_fan_contracts():
    sph = hdiff.make_manifold("sphere", {"radius": 1.0})
    grid = hdiff.TimeGrid(0.0, 0.3, 300)
    x = np.array([math.pi / 2, -0.25])
    y = np.array([math.pi / 2, 0.25])
    fan = hdiff.evolve_pair_fan(sph, x, y, grid, hdiff.sample_noise(11, 0, grid, 2), 0.125)
    rho0 = sph.distance(0.0, x, y)
    last = min(fan.members[0].last_step, fan.members[-1].last_step)
    for k in range(0, last + 1, 30):
        rho = sph.distance(grid.time(k), fan.members[0].point(k), fan.members[-1].point(k))
        assert rho <= rho0 * math.exp(-0.5 * grid.time(k)) * 1.05


def test_run_experiment_selftest():
    config = {
        "manifold": {"name": "sphere", "params": {"radius": 1.0}},
        "grid": {"t_end": 0.1, "n_steps": 100},
        "mc": {"n_paths": 4, "seed": 9},
    }
    with tempfile.TemporaryDirectory() as out:
        result = hdiff.run_experiment("selftest", json.dumps(config), out)
    assert result["passed"]
    assert "selftest.json" in result["outputs"]


def test_schema_error_lists_violations():
    with pytest.raises(hdiff.SchemaError):
        hdiff.parse_config_json('{"manifold": {"name": "torus"}}')
