"""Tests for the per-wheel slip-tracking torque controller."""

import numpy as np
import pytest

from ftmpc import dynamics
from ftmpc.params import ActuatorLimits, TireParams, VehicleParams, plant_state
from ftmpc.wheelslip import SlipControllerState, slip_to_torque

DT = 1e-3


def _state():
    return SlipControllerState.default()


def test_zero_error_holds_torque():
    st = _state()
    st.integral[:] = [0.5e-3, 0.0, -0.2e-3, 0.0]
    tgt = np.array([0.05, 0.0, -0.02, 0.0])
    t1 = slip_to_torque(tgt, tgt.copy(), st, DT, ActuatorLimits())
    t2 = slip_to_torque(tgt, tgt.copy(), st, DT, ActuatorLimits())
    np.testing.assert_array_equal(t1, t2)
    assert t1[0] == pytest.approx(st.ki * 0.5e-3)


def test_saturation_exact():
    st = _state()
    limits = ActuatorLimits()
    up = slip_to_torque(np.full(4, 1.0), np.zeros(4), st, DT, limits)
    np.testing.assert_array_equal(up, limits.torque[:, 1])
    st = _state()
    down = slip_to_torque(np.full(4, -1.0), np.zeros(4), st, DT, limits)
    np.testing.assert_array_equal(down, limits.torque[:, 0])


def test_antiwindup_freezes_integral_when_saturated():
    st = _state()
    limits = ActuatorLimits()
    for _ in range(2000):
        slip_to_torque(np.full(4, 1.0), np.zeros(4), st, DT, limits)
    assert np.all(np.abs(st.ki * st.integral) <= 2.0 * limits.torque[0, 1] + 1e-9)
    # after the demand vanishes the output must leave saturation immediately
    out = slip_to_torque(np.zeros(4), np.zeros(4), st, DT, limits)
    assert np.all(out < limits.torque[:, 1])


def test_error_sign_moves_torque_in_same_direction():
    base = _state()
    up = _state()
    tgt = np.array([0.02, 0.0, 0.0, 0.0])
    meas = np.zeros(4)
    bumped = tgt.copy()
    bumped[0] += 0.01
    t_base = slip_to_torque(tgt, meas, base, DT, ActuatorLimits())
    t_up = slip_to_torque(bumped, meas, up, DT, ActuatorLimits())
    assert t_up[0] > t_base[0]
    assert np.all(t_up[1:] == t_base[1:])


def test_no_cross_coupling():
    a = _state()
    b = _state()
    tgt_a = np.array([0.05, 0.01, -0.02, 0.0])
    tgt_b = tgt_a.copy()
    tgt_b[0] = -0.08
    meas = np.array([0.0, 0.01, 0.0, 0.002])
    ta = slip_to_torque(tgt_a, meas, a, DT, ActuatorLimits())
    tb = slip_to_torque(tgt_b, meas, b, DT, ActuatorLimits())
    assert ta[0] != tb[0]
    np.testing.assert_array_equal(ta[1:], tb[1:])
    np.testing.assert_array_equal(a.integral[1:], b.integral[1:])


def _closed_loop_slip(target, seconds=0.5, v0=14.0):
    """Integrate the plant under the slip controller; return the slip trace."""
    params = VehicleParams()
    tires = TireParams()
    limits = ActuatorLimits()
    xp = plant_state(v_x=v0, params=params)
    st = SlipControllerState.default()
    vp = params.pack()
    tp = tires.pack()
    n = int(round(seconds / DT))
    trace = np.empty((n, 4))
    tgt = np.asarray(target, dtype=float)
    for k in range(n):
        lam, _, _, _, _ = dynamics.plant_wheel_outputs(xp, params, tires,
                                                       vp=vp, tp=tp)
        torques = slip_to_torque(tgt, lam, st, DT, limits)
        xp = dynamics.plant_step(xp, torques, np.zeros(4), DT, params, tires,
                                 vp=vp, tp=tp)
        trace[k] = lam
    return trace


def test_step_response_settles_within_budget():
    # regression oracle: 0.05 slip step must settle within 5% in <= 0.3 s
    target = np.array([0.05, 0.0, 0.0, 0.0])
    trace = _closed_loop_slip(target, seconds=0.35)
    settle_idx = int(round(0.3 / DT))
    tail = trace[settle_idx:, 0]
    assert np.all(np.abs(tail - 0.05) <= 0.05 * 0.05)
    # untouched wheels stay near free rolling
    assert np.max(np.abs(trace[:, 1:])) < 5e-3


def test_braking_step_settles_symmetrically():
    target = np.array([0.0, -0.05, 0.0, 0.0])
    trace = _closed_loop_slip(target, seconds=0.35)
    settle_idx = int(round(0.3 / DT))
    tail = trace[settle_idx:, 1]
    assert np.all(np.abs(tail - (-0.05)) <= 0.05 * 0.05)


def test_torque_always_within_range():
    target = np.array([0.12, -0.12, 0.05, -0.05])
    params = VehicleParams()
    tires = TireParams()
    limits = ActuatorLimits()
    xp = plant_state(v_x=10.0, params=params)
    st = SlipControllerState.default()
    for _ in range(400):
        lam, _, _, _, _ = dynamics.plant_wheel_outputs(xp, params, tires)
        torques = slip_to_torque(target, lam, st, DT, limits)
        assert np.all(torques <= limits.torque[:, 1] + 1e-12)
        assert np.all(torques >= limits.torque[:, 0] - 1e-12)
        xp = dynamics.plant_step(xp, torques, np.zeros(4), DT, params, tires)
