"""Actuator degradation taxonomy: plant-side injection and controller reconfiguration.

Ten degradation kinds cover the drive/brake path (D1-D6) and the steering
path (D7-D10) of a single wheel:

    D1  constant wheel torque                 D6  locking/spinning wheel
    D2  degraded slip range                   D7  reduced steering-angle range
    D3  reduced slip dynamic (rate limit)     D8  reduced steering dynamics
    D4  zero torque demand                    D9  constant steering angle
    D5  slip held at a fixed value            D10 free-running steering

Each kind acts on the plant immediately at its trigger time through a
``DegradationInjector``; the controller learns about the fault only after
the detection delay (``reveal_after_ddi``) and then adapts through the
kind's ``ReconfigDirective``: range faults (D2/D3/D7/D8) tighten the
matching constraint, loss-of-authority faults (D1/D4/D5/D6 on slip, D9/D10
on steering) zero the actuator's tracking weight, void its bounds, and
remove its state from the prediction matrices.

The injector is the only stateful piece (slew memory for D3, the captured
hold angle for D10); events and directives are immutable values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import (
    IP_DELTA,
    IP_OMEGA,
    IU_DDELTA,
    IU_DLAMBDA,
    IX_DELTA,
    IX_LAMBDA,
    IY_ALPHA,
    IY_DELTA,
    IY_LAMBDA,
    N_WHEELS,
    WHEELS,
    ActuatorLimits,
)

KINDS = tuple(f"D{i}" for i in range(1, 11))

# default torque for the compensable constant-torque case; stays inside the
# linear tire region at the nominal wheel load (scenario-configurable)
D1_DEFAULT_TORQUE = 400.0

_TRIGGER_EPS = 1e-9


@dataclass(frozen=True)
class DegradationEvent:
    """One wheel's fault: kind, wheel, trigger time, kind-specific values."""

    kind: str
    wheel: str
    t_trigger: float = 1.0
    torque: float = None           # D1 [N*m]
    lam_range: tuple = None        # D2 (lo, hi)
    dlambda_range: tuple = None    # D3 (lo, hi) [1/s]
    held_lam: float = None         # D5
    sign: int = None               # D6: -1 lock, +1 spin
    delta_range: tuple = None      # D7 (lo, hi) [rad]
    ddelta_range: tuple = None     # D8 (lo, hi) [rad/s]
    held_delta: float = None       # D9 [rad]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown degradation kind {self.kind!r}")
        if self.wheel not in WHEELS:
            raise ValueError(f"unknown wheel {self.wheel!r}")
        if self.t_trigger < 0.0:
            raise ValueError("trigger time must be nonnegative")
        required = {
            "D1": "torque", "D2": "lam_range", "D3": "dlambda_range",
            "D5": "held_lam", "D6": "sign", "D7": "delta_range",
            "D8": "ddelta_range", "D9": "held_delta",
        }
        name = required.get(self.kind)
        if name is not None and getattr(self, name) is None:
            raise ValueError(f"{self.kind} requires the {name!r} parameter")
        for rng_name in ("lam_range", "dlambda_range", "delta_range",
                         "ddelta_range"):
            rng = getattr(self, rng_name)
            if rng is not None:
                lo, hi = float(rng[0]), float(rng[1])
                if not lo <= hi:
                    raise ValueError(f"{rng_name} must satisfy lo <= hi")
        if self.held_lam is not None and not -1.0 <= self.held_lam <= 1.0:
            raise ValueError("held slip must lie in [-1, 1]")
        if self.sign is not None and self.sign not in (-1, 1):
            raise ValueError("D6 sign must be -1 (lock) or +1 (spin)")
        if (self.held_delta is not None
                and abs(self.held_delta) > math.radians(30.0) + 1e-9):
            raise ValueError("held steering angle must stay within +/-30 deg")

    @property
    def wheel_index(self):
        return WHEELS.index(self.wheel)

    def triggered(self, t):
        return t >= self.t_trigger - _TRIGGER_EPS


@dataclass(frozen=True)
class ReconfigDirective:
    """Controller-side adaptation for one revealed degradation."""

    zero_output_weights: tuple = ()
    zero_input_weights: tuple = ()
    output_bounds: dict = field(default_factory=dict)   # channel -> (lo, hi) | None=void
    input_bounds: dict = field(default_factory=dict)    # channel -> (lo, hi)
    frozen_states: tuple = ()
    dead_inputs: tuple = ()


def directives_for(event: DegradationEvent) -> ReconfigDirective:
    """Pure mapping from a revealed event to the controller adaptation."""
    j = event.wheel_index
    kind = event.kind
    if kind == "D2":
        return ReconfigDirective(
            output_bounds={IY_LAMBDA + j: (float(event.lam_range[0]),
                                           float(event.lam_range[1]))})
    if kind == "D3":
        return ReconfigDirective(
            input_bounds={IU_DLAMBDA + j: (float(event.dlambda_range[0]),
                                           float(event.dlambda_range[1]))})
    if kind == "D7":
        return ReconfigDirective(
            output_bounds={IY_DELTA + j: (float(event.delta_range[0]),
                                          float(event.delta_range[1]))})
    if kind == "D8":
        return ReconfigDirective(
            input_bounds={IU_DDELTA + j: (float(event.ddelta_range[0]),
                                          float(event.ddelta_range[1]))})
    if kind in ("D1", "D4", "D5", "D6"):
        return _slip_authority_loss(j)
    if kind == "D9":
        return _steer_authority_loss(j)
    if kind == "D10":
        slip = _slip_authority_loss(j)
        steer = _steer_authority_loss(j)
        return ReconfigDirective(
            zero_output_weights=steer.zero_output_weights + slip.zero_output_weights,
            output_bounds={**steer.output_bounds, **slip.output_bounds},
            frozen_states=steer.frozen_states + slip.frozen_states,
            dead_inputs=steer.dead_inputs + slip.dead_inputs)
    return ReconfigDirective()


def _slip_authority_loss(j):
    return ReconfigDirective(
        zero_output_weights=(IY_LAMBDA + j,),
        output_bounds={IY_LAMBDA + j: None},
        frozen_states=(IX_LAMBDA + j,),
        dead_inputs=(IU_DLAMBDA + j,))


def _steer_authority_loss(j):
    partner = j ^ 1             # other wheel on the same axle
    return ReconfigDirective(
        zero_output_weights=(IY_DELTA + j,),
        output_bounds={IY_DELTA + j: None,
                       IY_ALPHA + j: None,
                       IY_ALPHA + partner: None},
        frozen_states=(IX_DELTA + j,),
        dead_inputs=(IU_DDELTA + j,))


def reveal_after_ddi(event: DegradationEvent, t, t_ddi):
    """The event once past the detection/isolation delay, else None."""
    if t_ddi < 0.0:
        raise ValueError("detection delay must be nonnegative")
    if event is None:
        return None
    if t >= event.t_trigger + t_ddi - _TRIGGER_EPS:
        return event
    return None


class DegradationInjector:
    """Applies one event to the plant-side actuation, substep by substep.

    Call order within one plant substep:

        slip_targets -> (slip controller) -> torques
        steer_rates  -> angle_clamps -> plant step -> post_step
    """

    def __init__(self, event: DegradationEvent, limits: ActuatorLimits = None):
        self.event = event
        self.limits = limits if limits is not None else ActuatorLimits()
        self._slew_target = None      # D3 memory of the realized target
        self._held_angle = None       # D10 capture of the angle at trigger

    def _on(self, t):
        return self.event is not None and self.event.triggered(t)

    def slip_targets(self, t, dt, targets):
        """Transform the controller's slip targets (D2 clip, D3 slew, D5 hold)."""
        if not self._on(t):
            if self.event is not None and self.event.kind == "D3":
                # remember the last healthy target so the rate limit starts
                # from where the actuator actually was when the fault hit
                self._slew_target = float(targets[self.event.wheel_index])
            return targets
        ev = self.event
        j = ev.wheel_index
        out = np.array(targets, dtype=float)
        if ev.kind == "D2":
            out[j] = min(max(out[j], ev.lam_range[0]), ev.lam_range[1])
        elif ev.kind == "D3":
            if self._slew_target is None:
                self._slew_target = 0.0
            step = out[j] - self._slew_target
            lo = ev.dlambda_range[0] * dt
            hi = ev.dlambda_range[1] * dt
            self._slew_target += min(max(step, lo), hi)
            out[j] = self._slew_target
        elif ev.kind == "D5":
            out[j] = ev.held_lam
        return out

    def torques(self, t, torques):
        """Transform the realized torques (D1 const, D4/D10 zero, D6 saturate)."""
        if not self._on(t):
            return torques
        ev = self.event
        j = ev.wheel_index
        out = np.array(torques, dtype=float)
        if ev.kind == "D1":
            out[j] = ev.torque
        elif ev.kind in ("D4", "D10"):
            out[j] = 0.0
        elif ev.kind == "D6":
            out[j] = self.limits.torque[j, 1] if ev.sign > 0 else self.limits.torque[j, 0]
        return out

    def steer_rates(self, t, dt, rates, xp):
        """Transform steering rates (D8 clip; D9/D10 slave to the held angle)."""
        if not self._on(t):
            return rates
        ev = self.event
        j = ev.wheel_index
        out = np.array(rates, dtype=float)
        if ev.kind == "D8":
            out[j] = min(max(out[j], ev.ddelta_range[0]), ev.ddelta_range[1])
        elif ev.kind in ("D9", "D10"):
            if ev.kind == "D9":
                held = ev.held_delta
            else:
                if self._held_angle is None:
                    self._held_angle = float(xp[IP_DELTA + j])
                held = self._held_angle
            wanted = (held - xp[IP_DELTA + j]) / dt
            out[j] = min(max(wanted, self.limits.ddelta[j, 0]),
                         self.limits.ddelta[j, 1])
        return out

    def angle_clamps(self, t):
        """Per-wheel steering-angle clamps for the plant (D7 tightens one wheel)."""
        lo = self.limits.delta[:, 0].copy()
        hi = self.limits.delta[:, 1].copy()
        if self._on(t) and self.event.kind == "D7":
            j = self.event.wheel_index
            lo[j] = self.event.delta_range[0]
            hi[j] = self.event.delta_range[1]
        return lo, hi

    def post_step(self, t, xp):
        """Post-integration fixups (D6 lock: the wheel stops, no reverse spin)."""
        if self._on(t) and self.event.kind == "D6" and self.event.sign < 0:
            j = self.event.wheel_index
            if xp[IP_OMEGA + j] < 0.0:
                xp = np.array(xp, dtype=float)
                xp[IP_OMEGA + j] = 0.0
        return xp
