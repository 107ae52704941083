"""Tests for the dense dual active-set QP engine.

The reference results come from an independent brute-force oracle: for
every subset of constraint rows, solve the equality-constrained KKT
system and keep the point that is primal feasible with nonnegative
multipliers.  For a strictly convex QP that point is the unique optimum.
"""

import itertools

import numpy as np
import pytest

from ftmpc.qp import solve_qp


def _oracle(h, g, c, b, feas_tol=1e-8):
    """Enumerate active subsets; return the optimal x or None if infeasible."""
    n = g.size
    m = b.size
    best = None
    for size in range(0, min(n, m) + 1):
        for subset in itertools.combinations(range(m), size):
            rows = np.asarray(subset, dtype=int)
            k = np.zeros((n + size, n + size))
            k[:n, :n] = h
            rhs = np.concatenate([-g, b[rows]])
            if size:
                k[:n, n:] = -c[rows].T
                k[n:, :n] = c[rows]
            try:
                sol = np.linalg.solve(k, rhs)
            except np.linalg.LinAlgError:
                continue
            x, mu = sol[:n], sol[n:]
            if np.any(mu < -feas_tol):
                continue
            if np.any(c @ x - b < -feas_tol):
                continue
            return x
    return best


def _random_problem(rng, n, n_boxed, n_general):
    a = rng.standard_normal((n, n))
    h = a.T @ a + n * np.eye(n)
    g = rng.standard_normal(n) * 2.0
    rows = []
    b = []
    boxed = rng.choice(n, size=n_boxed, replace=False)
    for i in sorted(boxed):
        lo = rng.uniform(-0.5, 0.0)
        hi = lo + rng.uniform(0.1, 1.0)
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(e.copy())
        b.append(lo)
        rows.append(-e)
        b.append(-hi)
    for _ in range(n_general):
        v = rng.standard_normal(n)
        rows.append(v)
        b.append(rng.uniform(-1.0, 0.2))
    c = np.array(rows) if rows else np.zeros((0, n))
    return h, g, c, np.array(b)


def test_unconstrained_identity():
    c = np.zeros((0, 3))
    target = np.array([1.0, -2.0, 0.5])
    res = solve_qp(np.eye(3), -target, c, np.zeros(0))
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, target, atol=1e-12)
    assert res.iterations == 0


def test_single_active_bound_is_projection():
    # min ||x - (2, 1)||^2 with x_0 <= 1  ->  x = (1, 1)
    h = 2.0 * np.eye(2)
    g = -2.0 * np.array([2.0, 1.0])
    c = np.array([[-1.0, 0.0]])
    b = np.array([-1.0])
    res = solve_qp(h, g, c, b)
    assert res.status == "optimal"
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-10)
    assert res.active == (0,)
    assert res.duals[0] > 0.0


def test_random_box_problems_match_enumeration():
    rng = np.random.default_rng(42)
    for _ in range(50):
        h, g, c, b = _random_problem(rng, n=10, n_boxed=3, n_general=0)
        res = solve_qp(h, g, c, b)
        assert res.status == "optimal"
        x_ref = _oracle(h, g, c, b)
        assert x_ref is not None
        np.testing.assert_allclose(res.x, x_ref, atol=1e-7)
        obj_ref = 0.5 * x_ref @ h @ x_ref + g @ x_ref
        assert res.objective <= obj_ref + 1e-6


def test_random_mixed_problems_match_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(25):
        h, g, c, b = _random_problem(rng, n=6, n_boxed=2, n_general=3)
        res = solve_qp(h, g, c, b)
        x_ref = _oracle(h, g, c, b)
        if x_ref is None:
            assert res.status == "infeasible"
            continue
        assert res.status == "optimal"
        np.testing.assert_allclose(res.x, x_ref, atol=1e-7)


def test_kkt_residuals_small():
    rng = np.random.default_rng(3)
    for _ in range(20):
        h, g, c, b = _random_problem(rng, n=8, n_boxed=3, n_general=2)
        res = solve_qp(h, g, c, b)
        if res.status != "optimal":
            continue
        grad = h @ res.x + g - c.T @ res.duals
        stat = np.max(np.abs(grad)) / max(1.0, np.max(np.abs(g)))
        feas = max(0.0, float(np.max(b - c @ res.x, initial=0.0)))
        comp = np.max(np.abs(res.duals * (c @ res.x - b)), initial=0.0)
        assert stat < 1e-6
        assert feas < 1e-6
        assert comp < 1e-6
        assert np.all(res.duals >= 0.0)


def test_objective_trace_monotone_nondecreasing():
    rng = np.random.default_rng(5)
    for _ in range(20):
        h, g, c, b = _random_problem(rng, n=8, n_boxed=3, n_general=2)
        res = solve_qp(h, g, c, b)
        trace = np.asarray(res.objective_trace)
        assert trace.size >= 1
        assert np.all(np.diff(trace) >= -1e-9)


def test_infeasible_detected():
    # x >= 1 and -x >= 0 cannot both hold
    h = np.eye(1)
    g = np.zeros(1)
    c = np.array([[1.0], [-1.0]])
    b = np.array([1.0, 0.0])
    res = solve_qp(h, g, c, b)
    assert res.status == "infeasible"


def test_determinism_bit_identical():
    rng = np.random.default_rng(11)
    h, g, c, b = _random_problem(rng, n=10, n_boxed=3, n_general=4)
    r1 = solve_qp(h, g, c, b)
    r2 = solve_qp(h, g, c, b)
    assert np.array_equal(r1.x, r2.x)
    assert r1.active == r2.active
    assert r1.iterations == r2.iterations
    assert r1.objective == r2.objective


def test_warm_start_same_solution_fewer_or_equal_iterations():
    rng = np.random.default_rng(13)
    for _ in range(10):
        h, g, c, b = _random_problem(rng, n=10, n_boxed=4, n_general=3)
        cold = solve_qp(h, g, c, b)
        if cold.status != "optimal":
            continue
        warm = solve_qp(h, g, c, b, warm_rows=cold.active)
        assert warm.status == "optimal"
        np.testing.assert_allclose(warm.x, cold.x, atol=1e-8)
        assert warm.iterations <= cold.iterations


def test_max_iterations_flagged():
    rng = np.random.default_rng(17)
    h, g, c, b = _random_problem(rng, n=10, n_boxed=4, n_general=4)
    res = solve_qp(h, g, c, b, max_iter=1)
    assert res.status in ("optimal", "max-iterations")
    if res.status == "max-iterations":
        assert res.iterations == 1
        assert np.all(np.isfinite(res.x))


def test_duals_zero_for_inactive_rows():
    h = 2.0 * np.eye(2)
    g = -2.0 * np.array([2.0, 1.0])
    c = np.array([[-1.0, 0.0], [0.0, 1.0]])   # x0 <= 1 (active), x1 >= -5 (slack)
    b = np.array([-1.0, -5.0])
    res = solve_qp(h, g, c, b)
    assert res.status == "optimal"
    assert res.duals[1] == 0.0
    assert 1 not in res.active
