"""Tests for the operating-point linearization and its reconfiguration."""

import math

import numpy as np
import pytest

from ftmpc import dynamics
from ftmpc.linearize import LinearizationError, apply_reconfiguration, dump_model, linearize_at
from ftmpc.params import (
    IU_DDELTA,
    IU_DLAMBDA,
    IX_DELTA,
    IX_LAMBDA,
    IX_S,
    IX_VX,
    IY_ALPHA,
    IY_BETA,
    IY_D,
    IY_DDELTA_F,
    IY_DDELTA_R,
    IY_DELTA,
    IY_LAMBDA,
    IY_PSI,
    IY_PSIDOT,
    IY_S,
    IY_VX,
    N_INPUTS,
    N_OUTPUTS,
    N_STATES,
    TireParams,
    VehicleParams,
    vehicle_state,
)

TS = 0.05


def _operating_point():
    rng = np.random.default_rng(7)
    x0 = vehicle_state(
        s=3.0, d=0.02, psi=0.01, v_x=13.0, v_y=0.15, psi_dot=0.08,
        delta=0.02 + 0.004 * rng.standard_normal(4),
        lam=0.03 + 0.005 * rng.standard_normal(4),
    )
    u0 = 0.01 * rng.standard_normal(N_INPUTS)
    return x0, u0


def _discrete_map(x, u, psi_ref, params, tires):
    return dynamics.prediction_step(x, u, psi_ref, TS, params, tires)


def _oracle_jacobian(fun, z0, n_out):
    """Independent 4th-order central-difference Jacobian.

    Uses the five-point stencil (-f(+2h) + 8 f(+h) - 8 f(-h) + f(-2h)) / (12 h),
    a different order and stencil than the implementation under test.
    """
    z0 = np.asarray(z0, dtype=float)
    jac = np.empty((n_out, z0.size))
    for i in range(z0.size):
        h = 1e-5 * max(1.0, abs(z0[i]))
        zp2, zp1, zm1, zm2 = (z0.copy() for _ in range(4))
        zp2[i] += 2.0 * h
        zp1[i] += h
        zm1[i] -= h
        zm2[i] -= 2.0 * h
        jac[:, i] = (-fun(zp2) + 8.0 * fun(zp1) - 8.0 * fun(zm1) + fun(zm2)) / (12.0 * h)
    return jac


@pytest.fixture(scope="module")
def model():
    params = VehicleParams()
    tires = TireParams()
    x0, u0 = _operating_point()
    return linearize_at(x0, u0, 0.0, TS, params, tires), x0, u0, params, tires


def test_dimensions_and_finiteness(model):
    lin = model[0]
    assert lin.a.shape == (N_STATES, N_STATES)
    assert lin.b.shape == (N_STATES, N_INPUTS)
    assert lin.c.shape == (N_OUTPUTS, N_STATES)
    assert lin.r0.shape == (N_STATES,)
    assert lin.h0.shape == (N_OUTPUTS,)
    for arr in (lin.a, lin.b, lin.c, lin.r0, lin.h0):
        assert np.all(np.isfinite(arr))


def test_jacobians_match_independent_oracle(model):
    lin, x0, u0, params, tires = model

    def f_of_x(x):
        return _discrete_map(x, u0, 0.0, params, tires)

    def f_of_u(u):
        return _discrete_map(x0, u, 0.0, params, tires)

    def h_of_x(x):
        return dynamics.output_map(x, params)

    a_ref = _oracle_jacobian(f_of_x, x0, N_STATES)
    b_ref = _oracle_jacobian(f_of_u, u0, N_STATES)
    c_ref = _oracle_jacobian(h_of_x, x0, N_OUTPUTS)
    for got, ref in ((lin.a, a_ref), (lin.b, b_ref), (lin.c, c_ref)):
        scale = max(1.0, np.max(np.abs(ref)))
        assert np.max(np.abs(got - ref)) / scale < 1e-6


def test_straight_rolling_residual():
    params = VehicleParams()
    tires = TireParams()
    x0 = vehicle_state(v_x=14.0)
    u0 = np.zeros(N_INPUTS)
    lin = linearize_at(x0, u0, 0.0, TS, params, tires)
    assert lin.r0[IX_S] == pytest.approx(14.0 * TS, abs=1e-12)
    others = np.delete(lin.r0, IX_S)
    assert np.max(np.abs(others)) < 1e-12


def test_integrator_entries_in_b(model):
    lin = model[0]
    for j in range(4):
        assert lin.b[IX_DELTA + j, IU_DDELTA + j] == pytest.approx(TS, rel=1e-9)
        assert lin.b[IX_LAMBDA + j, IU_DLAMBDA + j] == pytest.approx(TS, rel=1e-9)


def test_prediction_fidelity_second_order(model):
    lin, x0, u0, params, tires = model
    rng = np.random.default_rng(11)
    dx = rng.standard_normal(N_STATES)
    du = rng.standard_normal(N_INPUTS)
    dx *= 1e-4 / np.linalg.norm(dx)
    du *= 1e-4 / np.linalg.norm(du)

    def residual(scale):
        fx = _discrete_map(x0 + scale * dx, u0 + scale * du, 0.0, params, tires)
        pred = x0 + lin.a @ (scale * dx) + lin.b @ (scale * du) + lin.r0
        return np.linalg.norm(fx - pred)

    # halving the perturbation must cut the Taylor remainder ~4x (>= 1.9x)
    assert residual(1.0) / max(residual(0.5), 1e-300) >= 1.9


def test_output_rows_are_selectors(model):
    lin = model[0]
    selector_rows = {
        IY_S: IX_S, IY_D: IX_S + 1, IY_PSI: IX_S + 2, IY_VX: IX_VX,
        IY_PSIDOT: IX_VX + 2,
    }
    for j in range(4):
        selector_rows[IY_DELTA + j] = IX_DELTA + j
        selector_rows[IY_LAMBDA + j] = IX_LAMBDA + j
    for row, col in selector_rows.items():
        expect = np.zeros(N_STATES)
        expect[col] = 1.0
        assert np.array_equal(lin.c[row], expect)
    # axle steering-difference rows: exact +/-1 pairs
    for row, j in ((IY_DDELTA_F, 0), (IY_DDELTA_R, 2)):
        expect = np.zeros(N_STATES)
        expect[IX_DELTA + j] = 1.0
        expect[IX_DELTA + j + 1] = -1.0
        assert np.array_equal(lin.c[row], expect)
    # sideslip and slip-angle rows carry velocity partials
    assert lin.c[IY_BETA, IX_VX + 1] != 0.0
    for j in range(4):
        assert lin.c[IY_ALPHA + j, IX_VX + 1] != 0.0


def test_reconfiguration_zeroes_rows_and_columns(model):
    lin = model[0]
    frozen = IX_LAMBDA + 1        # lambda_fr
    dead = IU_DLAMBDA + 1         # its rate input
    out = apply_reconfiguration(lin, frozen_states=(frozen,), dead_inputs=(dead,))
    assert np.all(out.a[frozen, :] == 0.0)
    assert np.all(out.a[:, frozen] == 0.0)
    assert np.all(out.b[:, dead] == 0.0)
    # untouched entries bit-identical
    mask_a = np.ones_like(lin.a, dtype=bool)
    mask_a[frozen, :] = False
    mask_a[:, frozen] = False
    assert np.array_equal(out.a[mask_a], lin.a[mask_a])
    mask_b = np.ones_like(lin.b, dtype=bool)
    mask_b[:, dead] = False
    assert np.array_equal(out.b[mask_b], lin.b[mask_b])
    assert np.array_equal(out.c, lin.c)
    assert np.array_equal(out.r0, lin.r0)
    # idempotence
    again = apply_reconfiguration(out, frozen_states=(frozen,), dead_inputs=(dead,))
    assert np.array_equal(again.a, out.a)
    assert np.array_equal(again.b, out.b)


def test_steering_freeze_leaves_slip_columns(model):
    lin = model[0]
    frozen = IX_DELTA + 1         # delta_fr
    dead = IU_DDELTA + 1
    out = apply_reconfiguration(lin, frozen_states=(frozen,), dead_inputs=(dead,))
    assert np.all(out.a[frozen, :] == 0.0)
    assert np.all(out.a[:, frozen] == 0.0)
    assert np.all(out.b[:, dead] == 0.0)
    for j in range(4):
        assert np.array_equal(out.b[:, IU_DLAMBDA + j], lin.b[:, IU_DLAMBDA + j])


def test_empty_reconfiguration_is_identity(model):
    lin = model[0]
    out = apply_reconfiguration(lin, frozen_states=(), dead_inputs=())
    assert np.array_equal(out.a, lin.a)
    assert np.array_equal(out.b, lin.b)
    assert np.array_equal(out.c, lin.c)


def test_nonfinite_operating_point_reports_index():
    params = VehicleParams()
    tires = TireParams()
    x0 = vehicle_state(v_x=14.0)
    x0[IX_VX] = math.nan
    with pytest.raises(LinearizationError):
        linearize_at(x0, np.zeros(N_INPUTS), 0.0, TS, params, tires)


def test_dump_model_is_labeled(model):
    lin = model[0]
    text = dump_model(lin)
    for label in ("A", "B", "C", "r0", "h0"):
        assert label in text
    assert str(lin.a.shape[0]) in text
