"""Scenario files: one INI file describes one closed-loop run.

A scenario bundles the vehicle/tire parameter set, the reference
trajectory, the controller configuration, an optional degradation event,
and the simulation timing.  All sections and keys are optional; missing
values fall back to the reference setup (nominal sine-with-dwell at
14 m/s).  Angle-valued keys carry a ``_deg`` suffix and are converted on
load, everything else is SI.

Plant-only parameter deviations (robustness scenarios) live in the
``[sim]`` section as ``plant_mass_scale``, ``plant_inertia_scale`` and
``plant_cg_shift`` — they change the simulated vehicle but never the
controller's internal model.

The full effective configuration can be rendered back to INI text with
:func:`echo_config`; the simulator writes that text next to every result
so a results directory is self-describing.
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .degradation import DegradationEvent
from .mpc import (
    DEFAULT_INPUT_WEIGHTS,
    DEFAULT_OUTPUT_WEIGHTS,
    MpcConfig,
    named_input_weights,
    named_output_weights,
)
from .params import ActuatorLimits, TireParams, VehicleParams
from .trajectory import ReferenceTrajectory, build_sine_with_dwell

_VEHICLE_KEYS = ("m", "j_z", "l_f", "l_r", "s_f", "s_r", "r_w", "j_w",
                 "h_cg", "sabs_slope", "sabs_offset")
_TIRE_KEYS = ("b_x", "c_x", "e_x", "b_y", "c_y", "e_y", "mu_max", "fz_nominal")
_TRAJ_KEYS = ("speed", "frequency", "dwell", "amplitude", "lead_in",
              "mu_max", "accel_fraction", "ds")
_W_Y_KEYS = ("s", "d", "psi", "v_x", "beta", "psi_dot", "delta", "lam",
             "alpha", "ddelta")
_W_U_KEYS = ("ddelta", "dlambda")


@dataclass
class Thresholds:
    """Tolerable-deviation limits for the safety flags."""

    eps_t: float = 1.0                      # along-path deviation [m]
    eps_n: float = 0.3                      # lateral deviation [m]
    eps_psi: float = math.radians(10.0)     # heading deviation [rad]


@dataclass
class Scenario:
    """Fully resolved description of one simulation run."""

    name: str = "nominal"
    duration: float = 9.5        # simulated time [s]
    ts: float = 0.05             # controller sample time [s]
    plant_dt: float = 0.001      # plant integration step [s]
    t_ddi: float = 0.2           # detection/isolation delay [s]
    v0: float = 12.0             # initial vehicle speed [m/s]
    n_p: int = 20                # prediction horizon [samples]
    n_c: int = 5                 # control horizon [samples]
    plant_mass_scale: float = 1.0
    plant_inertia_scale: float = 1.0
    plant_cg_shift: float = 0.0  # positive moves the CG rearward [m]
    log_torques: bool = False    # per-plant-step torque log (debug aid)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    tires: TireParams = field(default_factory=TireParams)
    thresholds: Thresholds = field(default_factory=Thresholds)
    traj_kwargs: dict = field(default_factory=dict)
    w_y_overrides: dict = field(default_factory=dict)
    w_u_overrides: dict = field(default_factory=dict)
    event: Optional[DegradationEvent] = None

    def __post_init__(self):
        n_sub = self.ts / self.plant_dt
        if abs(n_sub - round(n_sub)) > 1e-9:
            raise ValueError("plant step must divide the controller sample time")
        if self.n_c > self.n_p:
            raise ValueError("control horizon cannot exceed prediction horizon")
        if self.t_ddi < 0.0:
            raise ValueError("detection delay must be nonnegative")
        tk = self.traj_kwargs
        maneuver = (tk.get("lead_in", 1.5) + 1.0 / tk.get("frequency", 0.7)
                    + tk.get("dwell", 0.5))
        if self.duration < maneuver:
            raise ValueError(
                f"duration {self.duration} s shorter than the maneuver "
                f"({maneuver:.3f} s)")

    def plant_params(self) -> VehicleParams:
        """Parameters of the simulated vehicle (with robustness deviations)."""
        return replace(self.vehicle,
                       m=self.vehicle.m * self.plant_mass_scale,
                       j_z=self.vehicle.j_z * self.plant_inertia_scale,
                       l_f=self.vehicle.l_f + self.plant_cg_shift,
                       l_r=self.vehicle.l_r - self.plant_cg_shift)

    def build_trajectory(self) -> ReferenceTrajectory:
        """Reference path, extended past `duration` by one horizon length."""
        kwargs = dict(self.traj_kwargs)
        pad = (self.n_p + 2) * self.ts
        kwargs["duration"] = max(kwargs.pop("duration", 0.0),
                                 self.duration + pad)
        return build_sine_with_dwell(**kwargs)

    def mpc_config(self, limits: ActuatorLimits = None) -> MpcConfig:
        return MpcConfig.defaults(
            limits=limits, n_p=self.n_p, n_c=self.n_c, ts=self.ts,
            w_y=named_output_weights(self.w_y_overrides),
            w_u=named_input_weights(self.w_u_overrides))


def _maybe(parser, section, key, get="getfloat"):
    if parser.has_section(section) and parser.has_option(section, key):
        return getattr(parser, get)(section, key)
    return None


def _event_from_section(sec) -> DegradationEvent:
    kw = {"kind": sec.get("kind"), "wheel": sec.get("wheel")}
    if kw["kind"] is None or kw["wheel"] is None:
        raise ValueError("[degradation] needs at least kind and wheel")
    if "t_trigger" in sec:
        kw["t_trigger"] = sec.getfloat("t_trigger")
    for key in ("torque", "held_lam"):
        if key in sec:
            kw[key] = sec.getfloat(key)
    if "sign" in sec:
        kw["sign"] = sec.getint("sign")
    if "held_delta_deg" in sec:
        kw["held_delta"] = math.radians(sec.getfloat("held_delta_deg"))
    for name, lo_key, hi_key, scale in (
            ("lam_range", "lam_lo", "lam_hi", 1.0),
            ("dlambda_range", "dlambda_lo", "dlambda_hi", 1.0),
            ("delta_range", "delta_lo_deg", "delta_hi_deg", math.pi / 180.0),
            ("ddelta_range", "ddelta_lo_deg", "ddelta_hi_deg", math.pi / 180.0)):
        if lo_key in sec or hi_key in sec:
            if not (lo_key in sec and hi_key in sec):
                raise ValueError(f"need both {lo_key} and {hi_key}")
            kw[name] = (sec.getfloat(lo_key) * scale,
                        sec.getfloat(hi_key) * scale)
    return DegradationEvent(**kw)


def load_scenario(path) -> Scenario:
    """Parse one scenario INI file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)

    kw = {}
    name = _maybe(parser, "sim", "name", "get")
    kw["name"] = name if name is not None else (
        os.path.splitext(os.path.basename(path))[0])
    for key in ("duration", "ts", "plant_dt", "t_ddi", "v0",
                "plant_mass_scale", "plant_inertia_scale", "plant_cg_shift"):
        val = _maybe(parser, "sim", key)
        if val is not None:
            kw[key] = val
    for key in ("n_p", "n_c"):
        val = _maybe(parser, "mpc", key, "getint")
        if val is not None:
            kw[key] = val
    val = _maybe(parser, "sim", "log_torques", "getboolean")
    if val is not None:
        kw["log_torques"] = val

    veh = {k: _maybe(parser, "vehicle", k) for k in _VEHICLE_KEYS}
    kw["vehicle"] = VehicleParams(**{k: v for k, v in veh.items()
                                     if v is not None})
    tire = {k: _maybe(parser, "tires", k) for k in _TIRE_KEYS}
    kw["tires"] = TireParams(**{k: v for k, v in tire.items()
                                if v is not None})
    traj = {k: _maybe(parser, "trajectory", k) for k in _TRAJ_KEYS}
    traj["duration"] = _maybe(parser, "trajectory", "duration")
    kw["traj_kwargs"] = {k: v for k, v in traj.items() if v is not None}

    thr = Thresholds()
    for attr, key in (("eps_t", "eps_t_max"), ("eps_n", "eps_n_max")):
        val = _maybe(parser, "sim", key)
        if val is not None:
            setattr(thr, attr, val)
    val = _maybe(parser, "sim", "eps_psi_max_deg")
    if val is not None:
        thr.eps_psi = math.radians(val)
    kw["thresholds"] = thr

    kw["w_y_overrides"] = {k: parser.getfloat("mpc", "w_" + k)
                           for k in _W_Y_KEYS
                           if _maybe(parser, "mpc", "w_" + k) is not None}
    kw["w_u_overrides"] = {k: parser.getfloat("mpc", "wu_" + k)
                           for k in _W_U_KEYS
                           if _maybe(parser, "mpc", "wu_" + k) is not None}

    if parser.has_section("degradation") and parser.options("degradation"):
        kw["event"] = _event_from_section(parser["degradation"])
    return Scenario(**kw)


def echo_config(scn: Scenario) -> str:
    """Render the complete effective configuration as INI text.

    Every value is written explicitly (defaults included) with repr()
    floats, so identical scenarios echo byte-identical text.
    """
    out = configparser.ConfigParser()
    out["sim"] = {
        "name": scn.name,
        "duration": repr(scn.duration),
        "ts": repr(scn.ts),
        "plant_dt": repr(scn.plant_dt),
        "t_ddi": repr(scn.t_ddi),
        "v0": repr(scn.v0),
        "plant_mass_scale": repr(scn.plant_mass_scale),
        "plant_inertia_scale": repr(scn.plant_inertia_scale),
        "plant_cg_shift": repr(scn.plant_cg_shift),
        "log_torques": str(scn.log_torques),
        "eps_t_max": repr(scn.thresholds.eps_t),
        "eps_n_max": repr(scn.thresholds.eps_n),
        "eps_psi_max_deg": repr(math.degrees(scn.thresholds.eps_psi)),
    }
    out["vehicle"] = {k: repr(getattr(scn.vehicle, k)) for k in _VEHICLE_KEYS}
    out["tires"] = {k: repr(getattr(scn.tires, k)) for k in _TIRE_KEYS}

    traj_defaults = {"speed": 14.0, "frequency": 0.7, "dwell": 0.5,
                     "lead_in": 1.5, "mu_max": 1.0, "accel_fraction": 0.85,
                     "ds": 0.1}
    traj = dict(traj_defaults, **scn.traj_kwargs)
    out["trajectory"] = {k: repr(float(v)) for k, v in sorted(traj.items())}

    w_y = dict(DEFAULT_OUTPUT_WEIGHTS, **scn.w_y_overrides)
    w_u = dict(DEFAULT_INPUT_WEIGHTS, **scn.w_u_overrides)
    mpc = {"n_p": str(scn.n_p), "n_c": str(scn.n_c)}
    mpc.update({"w_" + k: repr(float(w_y[k])) for k in _W_Y_KEYS})
    mpc.update({"wu_" + k: repr(float(w_u[k])) for k in _W_U_KEYS})
    out["mpc"] = mpc

    ev = scn.event
    if ev is not None:
        deg = {"kind": ev.kind, "wheel": ev.wheel,
               "t_trigger": repr(ev.t_trigger)}
        if ev.torque is not None:
            deg["torque"] = repr(ev.torque)
        if ev.held_lam is not None:
            deg["held_lam"] = repr(ev.held_lam)
        if ev.sign is not None:
            deg["sign"] = str(ev.sign)
        if ev.held_delta is not None:
            deg["held_delta_deg"] = repr(math.degrees(ev.held_delta))
        if ev.lam_range is not None:
            deg["lam_lo"], deg["lam_hi"] = map(repr, ev.lam_range)
        if ev.dlambda_range is not None:
            deg["dlambda_lo"], deg["dlambda_hi"] = map(repr, ev.dlambda_range)
        if ev.delta_range is not None:
            deg["delta_lo_deg"] = repr(math.degrees(ev.delta_range[0]))
            deg["delta_hi_deg"] = repr(math.degrees(ev.delta_range[1]))
        if ev.ddelta_range is not None:
            deg["ddelta_lo_deg"] = repr(math.degrees(ev.ddelta_range[0]))
            deg["ddelta_hi_deg"] = repr(math.degrees(ev.ddelta_range[1]))
        out["degradation"] = deg

    buf = io.StringIO()
    out.write(buf)
    return buf.getvalue()
