"""Closed-loop simulation harness, metrics, and the results table.

One run wires together the pieces: every controller sample the vehicle
pose is projected onto the reference path, any past-detection-delay
degradation is revealed and the controller reconfigured, the prediction
model is relinearized, and the tracking QP solved.  The first move's
slip rates are integrated into per-wheel slip targets which the wheel
torque controller tracks at the plant rate while the steering rates are
applied directly; the degradation injector bends the realized actuation
at every plant step.

Metrics follow the tracking-deviation triple (along-path, lateral,
heading), each as max / time-average / final value, plus the mean tire
utilization.  Deviations beyond the tolerable thresholds only flag the
run — they never abort it.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from . import dynamics
from .degradation import DegradationInjector, directives_for, reveal_after_ddi
from .linearize import LinearizationError, apply_reconfiguration, linearize_at
from .mpc import control_step
from .params import (
    IP_DELTA,
    IP_OMEGA,
    IP_PSI,
    IP_PSIDOT,
    IP_VX,
    IP_VY,
    IP_X,
    IP_Y,
    IU_DLAMBDA,
    N_INPUTS,
    N_WHEELS,
    WHEELS,
    ActuatorLimits,
    plant_state,
    vehicle_state,
)
from .wheelslip import SlipControllerState, slip_to_torque
from .scenario import Scenario, Thresholds, echo_config
from .trajectory import TrajectoryError, project_to_frenet, reference_window


def _per_wheel_cols(stem):
    return [f"{stem}_{w}" for w in WHEELS]


class RunLog:
    """Per-controller-sample time series of one run (schema version 1)."""

    COLUMNS = (
        ["t", "x", "y", "psi", "v_x", "v_y", "psi_dot"]
        + _per_wheel_cols("delta") + _per_wheel_cols("omega")
        + ["s", "d", "psi_err", "s_ref", "v_ref", "eps_t", "eps_n", "eps_psi"]
        + _per_wheel_cols("lam") + _per_wheel_cols("alpha")
        + _per_wheel_cols("util")
        + _per_wheel_cols("cmd_ddelta") + _per_wheel_cols("cmd_dlambda")
        + _per_wheel_cols("lam_target")
        + _per_wheel_cols("torque") + _per_wheel_cols("rate")
        + ["mpc_status", "mpc_iterations", "mpc_objective", "mpc_slack",
           "reconfigured"]
    )

    def __init__(self):
        self.rows = []
        self.aborted = False
        self.abort_reason = ""
        self.torque_trace = []   # optional (t, torques) per plant step

    def __len__(self):
        return len(self.rows)

    def append(self, row: dict):
        missing = set(self.COLUMNS) - set(row)
        extra = set(row) - set(self.COLUMNS)
        if missing or extra:
            raise ValueError(f"bad log row: missing={missing} extra={extra}")
        self.rows.append([row[c] for c in self.COLUMNS])
        if len(self.rows) >= 2:
            icol = self.COLUMNS.index("t")
            if not self.rows[-1][icol] > self.rows[-2][icol]:
                raise ValueError("log timestamps must increase strictly")

    def column(self, name) -> np.ndarray:
        i = self.COLUMNS.index(name)
        return np.array([float(r[i]) for r in self.rows])

    def status_column(self):
        i = self.COLUMNS.index("mpc_status")
        return [r[i] for r in self.rows]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for row in self.rows:
                writer.writerow([v if isinstance(v, str) else repr(v)
                                 for v in row])

    def write_torques_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t"] + _per_wheel_cols("torque"))
            for t, torq in self.torque_trace:
                writer.writerow([repr(t)] + [repr(float(v)) for v in torq])


@dataclass(frozen=True)
class MetricsReport:
    """Deviation metrics of one run; angles stored in radians."""

    eps_t_max: float
    eps_t_avg: float
    eps_t_end: float
    eps_n_max: float
    eps_n_avg: float
    eps_n_end: float
    eps_psi_max: float
    eps_psi_avg: float
    eps_psi_end: float
    mu_avg: float
    util_peak: float
    ok_eps_t: bool
    ok_eps_n: bool
    ok_eps_psi: bool
    aborted: bool

    @property
    def all_ok(self) -> bool:
        return (self.ok_eps_t and self.ok_eps_n and self.ok_eps_psi
                and not self.aborted)


def _avg(t, y):
    if t.size == 1:
        return float(y[0])
    return float(np.trapezoid(y, t) / (t[-1] - t[0]))


def compute_metrics(log: RunLog, thresholds: Thresholds = None) -> MetricsReport:
    """Reduce a run log to the deviation metrics triple plus utilization."""
    if len(log) == 0:
        raise ValueError("cannot compute metrics of an empty run log")
    if thresholds is None:
        thresholds = Thresholds()
    t = log.column("t")
    values = {}
    for key, col in (("eps_t", "eps_t"), ("eps_n", "eps_n"),
                     ("eps_psi", "eps_psi")):
        y = np.abs(log.column(col))
        values[key] = (float(y.max()), _avg(t, y), float(y[-1]))
    util = np.stack([log.column(c) for c in _per_wheel_cols("util")])
    mu_avg = _avg(t, util.mean(axis=0))
    util_peak = float(util.max())

    report = MetricsReport(
        eps_t_max=values["eps_t"][0], eps_t_avg=values["eps_t"][1],
        eps_t_end=values["eps_t"][2],
        eps_n_max=values["eps_n"][0], eps_n_avg=values["eps_n"][1],
        eps_n_end=values["eps_n"][2],
        eps_psi_max=values["eps_psi"][0], eps_psi_avg=values["eps_psi"][1],
        eps_psi_end=values["eps_psi"][2],
        mu_avg=mu_avg, util_peak=util_peak,
        ok_eps_t=values["eps_t"][0] <= thresholds.eps_t,
        ok_eps_n=values["eps_n"][0] <= thresholds.eps_n,
        ok_eps_psi=values["eps_psi"][0] <= thresholds.eps_psi,
        aborted=log.aborted,
    )
    for stem in ("eps_t", "eps_n", "eps_psi"):
        mx, avg, end = (getattr(report, stem + "_max"),
                        getattr(report, stem + "_avg"),
                        getattr(report, stem + "_end"))
        assert mx >= avg - 1e-12 and mx >= end - 1e-12, "metric ordering broken"
    return report


def _utilization(fxw, fyw, fz, mu_max):
    util = np.zeros(N_WHEELS)
    for i in range(N_WHEELS):
        if fz[i] > 1.0:
            util[i] = math.hypot(fxw[i], fyw[i]) / (mu_max * fz[i])
    return util


def run_scenario(scn: Scenario, traj=None):
    """Simulate one scenario; returns (RunLog, MetricsReport).

    Solver trouble is logged and the run continues with the previous
    command held; a non-finite plant state or a lost path projection
    aborts with the partial log flagged.
    """
    if traj is None:
        traj = scn.build_trajectory()
    params_c = scn.vehicle
    params_p = scn.plant_params()
    tires = scn.tires
    vp_p = params_p.pack()
    tp = tires.pack()
    limits = ActuatorLimits()
    cfg_nominal = scn.mpc_config(limits)
    cfg = cfg_nominal
    reconfig = None

    event = scn.event
    injector = DegradationInjector(event, limits)
    directive = directives_for(event) if event is not None else None

    n_cycles = int(round(scn.duration / scn.ts))
    n_sub = int(round(scn.ts / scn.plant_dt))

    xp = plant_state(x=traj.x[0], y=traj.y[0], psi=traj.psi[0],
                     v_x=scn.v0, params=params_p)
    pi_state = SlipControllerState.default()
    u_prev = np.zeros(N_INPUTS)
    warm = None
    hint = 0
    log = RunLog()

    for k in range(n_cycles + 1):
        t = k * scn.ts
        xm = xp.copy()      # the state every quantity of this row refers to
        lam_meas, alpha_meas, fxw, fyw, fz = dynamics.plant_wheel_outputs(
            xm, params_p, tires, vp=vp_p, tp=tp)
        try:
            s_proj, d_proj, psi_err, hint = project_to_frenet(
                xm[IP_X], xm[IP_Y], xm[IP_PSI], traj, hint=hint)
        except TrajectoryError as exc:
            log.aborted = True
            log.abort_reason = str(exc)
            break
        _, _, _, s_ref_t, v_ref_t = traj.pose_at_time(t)
        util = _utilization(fxw, fyw, fz, tires.mu_max)

        if k == n_cycles:
            # terminal measurement row: no further control action
            u0 = np.zeros(N_INPUTS)
            lam_tgt = lam_meas.copy()
            status, iters, objective, slack = "final", 0, 0.0, 0.0
            first_torque = np.zeros(N_WHEELS)
            first_rate = np.zeros(N_WHEELS)
        else:
            revealed = reveal_after_ddi(event, t, scn.t_ddi)
            if revealed is not None and reconfig is None:
                cfg = cfg_nominal.reconfigured(directive)
                reconfig = (directive.frozen_states, directive.dead_inputs)

            x_hat = vehicle_state(
                s=s_proj, d=d_proj, psi=xm[IP_PSI], v_x=xm[IP_VX],
                v_y=xm[IP_VY], psi_dot=xm[IP_PSIDOT],
                delta=xm[IP_DELTA:IP_DELTA + 4], lam=lam_meas)
            refs = reference_window(traj, t, cfg.n_p, cfg.ts)
            psi_ref_op = xm[IP_PSI] - psi_err
            try:
                model = linearize_at(x_hat, u_prev, psi_ref_op, cfg.ts,
                                     params_c, tires)
                if reconfig is not None:
                    model = apply_reconfiguration(model, *reconfig)
                u0, sol = control_step(x_hat, refs, cfg, model, u_prev,
                                       warm_start=warm)
                warm = sol
                status, iters = sol.status, sol.iterations
                objective, slack = sol.objective, sol.slack_max
            except (LinearizationError, RuntimeError, np.linalg.LinAlgError) as exc:
                u0 = u_prev.copy()
                warm = None
                status, iters = "error:" + type(exc).__name__, 0
                objective, slack = float("nan"), float("nan")

            # slip-rate moves become absolute slip targets, re-anchored at
            # the measured slip so target and wheel never drift apart
            lam_tgt = lam_meas + u0[IU_DLAMBDA:IU_DLAMBDA + 4] * scn.ts
            rates_cmd = u0[:N_WHEELS]

            first_torque = first_rate = None
            for i in range(n_sub):
                ti = t + i * scn.plant_dt
                lam_now, _, _, _, _ = dynamics.plant_wheel_outputs(
                    xp, params_p, tires, vp=vp_p, tp=tp)
                targets_i = injector.slip_targets(ti, scn.plant_dt, lam_tgt)
                torq = slip_to_torque(targets_i, lam_now, pi_state,
                                      scn.plant_dt, limits)
                torq = injector.torques(ti, torq)
                rates = injector.steer_rates(ti, scn.plant_dt, rates_cmd, xp)
                ang_lo, ang_hi = injector.angle_clamps(ti)
                xp = dynamics.plant_step(xp, torq, rates, scn.plant_dt,
                                         params_p, tires, ang_lo=ang_lo,
                                         ang_hi=ang_hi, vp=vp_p, tp=tp)
                xp = injector.post_step(ti, xp)
                if i == 0:
                    first_torque, first_rate = torq, rates
                if scn.log_torques:
                    log.torque_trace.append((ti, np.array(torq)))
            u_prev = u0

        row = {"t": t, "x": xm[IP_X], "y": xm[IP_Y], "psi": xm[IP_PSI],
               "v_x": xm[IP_VX], "v_y": xm[IP_VY], "psi_dot": xm[IP_PSIDOT],
               "s": s_proj, "d": d_proj, "psi_err": psi_err,
               "s_ref": s_ref_t, "v_ref": v_ref_t,
               "eps_t": abs(s_proj - s_ref_t), "eps_n": abs(d_proj),
               "eps_psi": abs(psi_err),
               "mpc_status": status, "mpc_iterations": iters,
               "mpc_objective": objective, "mpc_slack": slack,
               "reconfigured": int(reconfig is not None)}
        for j, w in enumerate(WHEELS):
            row[f"delta_{w}"] = xm[IP_DELTA + j]
            row[f"omega_{w}"] = xm[IP_OMEGA + j]
            row[f"lam_{w}"] = lam_meas[j]
            row[f"alpha_{w}"] = alpha_meas[j]
            row[f"util_{w}"] = util[j]
            row[f"cmd_ddelta_{w}"] = u0[j]
            row[f"cmd_dlambda_{w}"] = u0[IU_DLAMBDA + j]
            row[f"lam_target_{w}"] = lam_tgt[j]
            row[f"torque_{w}"] = float(first_torque[j])
            row[f"rate_{w}"] = float(first_rate[j])
        log.append(row)
        if not np.all(np.isfinite(xp)):
            log.aborted = True
            log.abort_reason = "non-finite plant state"
            break

    metrics = compute_metrics(log, scn.thresholds)
    return log, metrics
