"""Vehicle dynamics: double-track model, tire forces, and the plant.

Two closely related models live here.  The *prediction model* is what the
controller linearizes: wheel slips are integrator states driven by
slip-rate inputs, wheel loads stay static, and the longitudinal position
is tracked along a reference path (Frenet coordinates).  The *plant* is
the simulation truth: global pose, wheel spin dynamics driven by torque,
and quasi-static load transfer from the current accelerations.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .params import (
    IP_DELTA, IP_OMEGA, IP_VX, IX_DELTA, IX_LAMBDA, IX_PSI, IX_PSIDOT,
    IX_VX, IX_VY, N_OUTPUTS, N_PLANT_STATES, N_STATES, N_WHEELS,
    TireParams, VehicleParams,
)

__all__ = [
    "smooth_abs", "wheel_velocities", "slip_quantities", "tire_forces",
    "body_derivatives", "sideslip", "prediction_rhs", "prediction_step",
    "output_map", "plant_derivatives", "plant_step", "plant_wheel_outputs",
    "wheel_speed_for_slip", "DivergenceError",
]


class DivergenceError(RuntimeError):
    """Raised when plant integration produces a non-finite state."""


def smooth_abs(x, m_slope=5.0, n_offset=0.1273):
    """Smooth absolute value ``x*(2/pi)*atan(m*x) + n``.

    Equals ``n_offset`` exactly at 0 and approaches ``|x|`` from above for
    growing ``|x|`` (error below 1e-4 once ``|x|`` exceeds a few units).
    Used wherever a slip definition divides by a velocity magnitude, so
    the expressions stay differentiable through zero.
    """
    if m_slope <= 0.0 or n_offset <= 0.0:
        raise ValueError("smooth_abs parameters must be positive")
    return kernels.smooth_abs(float(x), m_slope, n_offset)


def wheel_velocities(v_x, v_y, psi_dot, delta, params: VehicleParams):
    """Wheel-center velocities in vehicle and wheel frames.

    Returns four arrays of length 4: (v_x^V, v_y^V, v_x^W, v_y^W).  The
    vehicle-frame components follow from the rigid-body twist with the
    per-wheel lever arms; the wheel frame is rotated by the steering
    angle.
    """
    delta = np.asarray(delta, dtype=float)
    p = params.lever_p
    q = params.lever_q
    vvx = v_x - p * psi_dot
    vvy = v_y + q * psi_dot
    cd = np.cos(delta)
    sd = np.sin(delta)
    vwx = vvx * cd + vvy * sd
    vwy = vvy * cd - vvx * sd
    return vvx, vvy, vwx, vwy


def slip_quantities(vwx, vwy, omega, params: VehicleParams):
    """Longitudinal slip and slip angle per wheel from wheel-frame speeds.

    Slip is (r*omega - v_x^W) normalized by the larger smooth magnitude of
    the two speeds and clamped to [-1, 1]; the slip angle is
    atan(v_y^W / smooth_abs(v_x^W)).
    """
    vwx = np.atleast_1d(np.asarray(vwx, dtype=float))
    vwy = np.atleast_1d(np.asarray(vwy, dtype=float))
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    m, n = params.sabs_slope, params.sabs_offset
    lam = np.empty(vwx.shape)
    alpha = np.empty(vwx.shape)
    for i in range(vwx.size):
        lam[i] = kernels.slip_ratio(params.r_w * omega[i], vwx[i], m, n)
        alpha[i] = math.atan(vwy[i] / kernels.smooth_abs(vwx[i], m, n))
    return lam, alpha


def tire_forces(lam, alpha, fz, tires: TireParams):
    """Combined-slip magic-formula forces in the wheel frame.

    Accepts scalars or length-4 arrays; raises ValueError on negative
    wheel load.  The resultant never exceeds ``mu_max * fz``.
    """
    tp = tires.pack()
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    fz = np.broadcast_to(np.asarray(fz, dtype=float), lam.shape)
    fx = np.empty(lam.shape)
    fy = np.empty(lam.shape)
    for i in range(lam.size):
        fx[i], fy[i] = kernels.tire_forces(lam[i], alpha[i], fz[i], tp)
    if fx.size == 1:
        return float(fx[0]), float(fy[0])
    return fx, fy


def rotate_to_vehicle(fxw, fyw, delta):
    """Rotate wheel-frame forces into the vehicle frame."""
    cd = np.cos(delta)
    sd = np.sin(delta)
    return cd * fxw - sd * fyw, sd * fxw + cd * fyw


def body_derivatives(v_x, v_y, psi_dot, delta, fxw, fyw, params: VehicleParams):
    """Body-frame accelerations (dv_x, dv_y, dpsi_dot) from wheel forces.

    Sums the wheel-frame forces rotated by the steering angles and applies
    the yaw-moment lever arms p_ij, q_ij.
    """
    delta = np.asarray(delta, dtype=float)
    fxw = np.asarray(fxw, dtype=float)
    fyw = np.asarray(fyw, dtype=float)
    cd = np.cos(delta)
    sd = np.sin(delta)
    p = params.lever_p
    q = params.lever_q
    sum_fx = np.sum(cd * fxw - sd * fyw)
    sum_fy = np.sum(sd * fxw + cd * fyw)
    sum_mz = np.sum((p * cd + q * sd) * fxw + (q * cd - p * sd) * fyw)
    dvx = v_y * psi_dot + sum_fx / params.m
    dvy = -v_x * psi_dot + sum_fy / params.m
    dpsidot = sum_mz / params.j_z
    return dvx, dvy, dpsidot


def sideslip(v_x, v_y):
    """Vehicle sideslip angle atan(v_y/v_x); 0 below the standstill speed."""
    if abs(v_x) < kernels.STANDSTILL_V:
        return 0.0
    return math.atan(v_y / v_x)


def prediction_rhs(x, u, psi_ref, params: VehicleParams, tires: TireParams):
    """Continuous-time derivative of the prediction-model state."""
    out = np.empty(N_STATES)
    kernels.pred_rhs(np.asarray(x, dtype=float), np.asarray(u, dtype=float),
                     float(psi_ref), params.pack(), tires.pack(), out)
    return out


def prediction_step(x, u, psi_ref, ts, params: VehicleParams,
                    tires: TireParams, vp=None, tp=None):
    """Explicit-Euler discrete transition over one controller period."""
    out = np.empty(N_STATES)
    if vp is None:
        vp = params.pack()
    if tp is None:
        tp = tires.pack()
    kernels.pred_step(np.asarray(x, dtype=float), np.asarray(u, dtype=float),
                      float(psi_ref), float(ts), vp, tp, out)
    return out


def output_map(x, params: VehicleParams, vp=None):
    """Controlled outputs (20 entries) of the prediction model."""
    out = np.empty(N_OUTPUTS)
    if vp is None:
        vp = params.pack()
    kernels.output_vec(np.asarray(x, dtype=float), vp, out)
    return out


def plant_derivatives(xp, torque, rate, params: VehicleParams,
                      tires: TireParams, static_loads=False):
    """Continuous-time derivative of the plant state."""
    out = np.empty(N_PLANT_STATES)
    kernels.plant_rhs(np.asarray(xp, dtype=float),
                      np.asarray(torque, dtype=float),
                      np.asarray(rate, dtype=float),
                      params.pack(), tires.pack(), static_loads, out)
    return out


def plant_step(xp, torque, rate, dt, params: VehicleParams, tires: TireParams,
               ang_lo=None, ang_hi=None, static_loads=False,
               vp=None, tp=None):
    """One RK4 plant step (dt at most 5 ms) with steering saturation."""
    if not 0.0 < dt <= 0.005:
        raise ValueError("plant step size must be in (0, 5 ms]")
    if vp is None:
        vp = params.pack()
    if tp is None:
        tp = tires.pack()
    if ang_lo is None:
        ang_lo = np.full(N_WHEELS, -math.radians(30.0))
    if ang_hi is None:
        ang_hi = np.full(N_WHEELS, math.radians(30.0))
    out = np.empty(N_PLANT_STATES)
    kernels.plant_step(np.asarray(xp, dtype=float),
                       np.asarray(torque, dtype=float),
                       np.asarray(rate, dtype=float), float(dt),
                       vp, tp, static_loads,
                       np.asarray(ang_lo, dtype=float),
                       np.asarray(ang_hi, dtype=float), out)
    if not np.all(np.isfinite(out)):
        raise DivergenceError("plant state became non-finite")
    return out


def plant_wheel_outputs(xp, params: VehicleParams, tires: TireParams,
                        static_loads=False, vp=None, tp=None):
    """Per-wheel (lam, alpha, fxw, fyw, fz) for the current plant state."""
    if vp is None:
        vp = params.pack()
    if tp is None:
        tp = tires.pack()
    lam = np.empty(N_WHEELS)
    alpha = np.empty(N_WHEELS)
    fxw = np.empty(N_WHEELS)
    fyw = np.empty(N_WHEELS)
    fz = np.empty(N_WHEELS)
    kernels.plant_wheel_outputs(np.asarray(xp, dtype=float), vp, tp,
                                static_loads, lam, alpha, fxw, fyw, fz)
    return lam, alpha, fxw, fyw, fz


def wheel_speed_for_slip(lam, vwx, params: VehicleParams):
    """Wheel spin speed that realizes slip ``lam`` at contact speed ``vwx``.

    Inverts the slip definition numerically (a few Newton steps on the
    smooth-magnitude normalization); useful for consistent initial
    conditions.
    """
    m, n = params.sabs_slope, params.sabs_offset
    r_omega = vwx * (1.0 + lam)  # starting guess from the naive definition
    for _ in range(60):
        err = kernels.slip_ratio(r_omega, vwx, m, n) - lam
        if abs(err) < 1e-14:
            break
        den = max(kernels.smooth_abs(vwx, m, n),
                  kernels.smooth_abs(r_omega, m, n))
        r_omega -= err * den  # d(slip)/d(r*omega) ~ 1/den
    return r_omega / params.r_w
