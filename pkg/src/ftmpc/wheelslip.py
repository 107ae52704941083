"""Per-wheel slip-tracking torque controller.

Sits between the trajectory controller and the plant: the controller
emits target longitudinal slips (its slip-rate commands integrated over
the control period), and this block realizes them with drive/brake
torques at the plant rate.  One independent PI loop per wheel, saturated
to the torque range, with conditional integration as anti-windup: the
integral is frozen whenever the output is saturated and the error would
push it further into saturation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import N_WHEELS, ActuatorLimits

# Tuned against the plant so a 0.05 slip step settles within 5% in under
# 0.3 s at highway speed (see the wheelslip test module, which is the
# regression oracle for these values).
KP_DEFAULT = 30000.0     # N*m per unit slip error
KI_DEFAULT = 1.0e6       # N*m per unit slip error * s


@dataclass
class SlipControllerState:
    """Mutable per-wheel PI state."""

    kp: float
    ki: float
    integral: np.ndarray          # per-wheel integrated slip error [s]
    last_torque: np.ndarray       # per-wheel last commanded torque [N*m]
    integral_clamp: float         # hard bound on |ki * integral| [N*m]

    @classmethod
    def default(cls, kp=KP_DEFAULT, ki=KI_DEFAULT, integral_clamp=None):
        if integral_clamp is None:
            integral_clamp = 2.0 * 2000.0
        return cls(kp=float(kp), ki=float(ki),
                   integral=np.zeros(N_WHEELS),
                   last_torque=np.zeros(N_WHEELS),
                   integral_clamp=float(integral_clamp))


def slip_to_torque(target_lam, measured_lam, state: SlipControllerState,
                   dt, limits: ActuatorLimits):
    """PI torque commands tracking the target slips; mutates ``state``."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    target_lam = np.asarray(target_lam, dtype=float)
    measured_lam = np.asarray(measured_lam, dtype=float)
    out = np.empty(N_WHEELS)
    for j in range(N_WHEELS):
        lo = limits.torque[j, 0]
        hi = limits.torque[j, 1]
        err = target_lam[j] - measured_lam[j]
        raw = state.kp * err + state.ki * state.integral[j]
        saturating = (raw >= hi and err > 0.0) or (raw <= lo and err < 0.0)
        if not saturating:
            integral = state.integral[j] + err * dt
            bound = state.integral_clamp / state.ki
            state.integral[j] = min(max(integral, -bound), bound)
        torque = state.kp * err + state.ki * state.integral[j]
        out[j] = min(max(torque, lo), hi)
        state.last_torque[j] = out[j]
    return out
