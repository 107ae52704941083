"""Operating-point linearization of the prediction model, plus reconfiguration.

The controller predicts with a discrete affine model obtained by linearizing
the nonlinear single-step transition around the current state and the last
applied input:

    x(k+1) ~ x0 + A (x(k) - x0) + B (u(k) - u0) + r0,   r0 = f(x0, u0) - x0
    y(k)   ~ h0 + C (x(k) - x0),                        h0 = h(x0)

Jacobians are computed by central finite differences with per-variable
scaled steps.  Rows of C that are plain selections of a state (positions,
speed, yaw rate, steering angles, slip ratios) and the axle steering
difference rows are overwritten with their exact values so they contain
clean 0/1 entries.

After an actuator fault is detected, the affected actuator state is removed
from the prediction: its row and column in A and its rate-input column in B
are zeroed, so the prediction carries the state forward through r0 alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics
from .params import (
    IX_DELTA,
    IX_LAMBDA,
    IX_PSIDOT,
    IX_S,
    IX_VX,
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
    IY_D,
)


class LinearizationError(RuntimeError):
    """Raised when a Jacobian entry comes out non-finite."""


@dataclass(frozen=True)
class LinearizedModel:
    """Discrete affine prediction model at one operating point."""

    a: np.ndarray          # 14x14 state transition
    b: np.ndarray          # 14x8 input matrix
    c: np.ndarray          # 20x14 output matrix
    r0: np.ndarray         # 14-vector transition residual f(x0,u0) - x0
    h0: np.ndarray         # 20-vector output at the operating point
    x0: np.ndarray
    u0: np.ndarray
    ts: float

    def __post_init__(self):
        for name, arr, shape in (
            ("a", self.a, (N_STATES, N_STATES)),
            ("b", self.b, (N_STATES, N_INPUTS)),
            ("c", self.c, (N_OUTPUTS, N_STATES)),
            ("r0", self.r0, (N_STATES,)),
            ("h0", self.h0, (N_OUTPUTS,)),
        ):
            if arr.shape != shape:
                raise LinearizationError(f"{name} has shape {arr.shape}, want {shape}")


def _fd_step(value):
    return 1e-6 * max(1.0, abs(value))


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        idx = np.argwhere(~np.isfinite(np.atleast_2d(arr)))[0]
        raise LinearizationError(f"non-finite entry in {name} at index {tuple(idx)}")


# Output rows that are exact selections of one state, and their state index.
_SELECTOR_ROWS = {
    IY_S: IX_S,
    IY_D: IX_S + 1,
    IY_PSI: IX_S + 2,
    IY_VX: IX_VX,
    IY_PSIDOT: IX_PSIDOT,
}
for _j in range(4):
    _SELECTOR_ROWS[IY_DELTA + _j] = IX_DELTA + _j
    _SELECTOR_ROWS[IY_LAMBDA + _j] = IX_LAMBDA + _j
del _j


def linearize_at(x0, u0, psi_ref, ts, params, tires):
    """Linearize one discrete prediction step around ``(x0, u0)``.

    ``psi_ref`` is the reference heading the path-frame kinematics are
    evaluated against; it is held constant across the perturbations.
    """
    if ts <= 0.0:
        raise LinearizationError("sample time must be positive")
    x0 = np.asarray(x0, dtype=float).copy()
    u0 = np.asarray(u0, dtype=float).copy()
    vp = params.pack()
    tp = tires.pack()

    def f(x, u):
        return dynamics.prediction_step(x, u, psi_ref, ts, params, tires,
                                        vp=vp, tp=tp)

    a = np.empty((N_STATES, N_STATES))
    for i in range(N_STATES):
        h = _fd_step(x0[i])
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h
        xm[i] -= h
        a[:, i] = (f(xp, u0) - f(xm, u0)) / (2.0 * h)

    b = np.empty((N_STATES, N_INPUTS))
    for i in range(N_INPUTS):
        h = _fd_step(u0[i])
        up = u0.copy()
        um = u0.copy()
        up[i] += h
        um[i] -= h
        b[:, i] = (f(x0, up) - f(x0, um)) / (2.0 * h)

    c = np.empty((N_OUTPUTS, N_STATES))
    for i in range(N_STATES):
        h = _fd_step(x0[i])
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h
        xm[i] -= h
        c[:, i] = (dynamics.output_map(xp, params, vp=vp)
                   - dynamics.output_map(xm, params, vp=vp)) / (2.0 * h)
    for row, col in _SELECTOR_ROWS.items():
        c[row, :] = 0.0
        c[row, col] = 1.0
    for row, j in ((IY_DDELTA_F, 0), (IY_DDELTA_R, 2)):
        c[row, :] = 0.0
        c[row, IX_DELTA + j] = 1.0
        c[row, IX_DELTA + j + 1] = -1.0

    r0 = f(x0, u0) - x0
    h0 = dynamics.output_map(x0, params, vp=vp)

    for name, arr in (("A", a), ("B", b), ("C", c), ("r0", r0), ("h0", h0)):
        _check_finite(name, arr)
    return LinearizedModel(a=a, b=b, c=c, r0=r0, h0=h0, x0=x0, u0=u0, ts=float(ts))


def apply_reconfiguration(model, frozen_states=(), dead_inputs=()):
    """Remove faulted actuator states and inputs from the prediction.

    For every state index in ``frozen_states`` the matching row and column
    of A are zeroed; for every input index in ``dead_inputs`` the matching
    column of B is zeroed.  All other entries are returned bit-identical.
    """
    frozen_states = tuple(frozen_states)
    dead_inputs = tuple(dead_inputs)
    for i in frozen_states:
        if not 0 <= i < N_STATES:
            raise IndexError(f"frozen state index {i} out of range")
    for i in dead_inputs:
        if not 0 <= i < N_INPUTS:
            raise IndexError(f"dead input index {i} out of range")
    if not frozen_states and not dead_inputs:
        return model
    a = model.a.copy()
    b = model.b.copy()
    for i in frozen_states:
        a[i, :] = 0.0
        a[:, i] = 0.0
    for i in dead_inputs:
        b[:, i] = 0.0
    return LinearizedModel(a=a, b=b, c=model.c, r0=model.r0, h0=model.h0,
                           x0=model.x0, u0=model.u0, ts=model.ts)


def dump_model(model):
    """Render the model as labeled row-major text (debug fixture aid)."""
    lines = []
    for name, arr in (("A", model.a), ("B", model.b), ("C", model.c)):
        lines.append(f"{name} {arr.shape[0]}x{arr.shape[1]}")
        for row in arr:
            lines.append("  " + " ".join(repr(float(v)) for v in row))
    for name, vec in (("r0", model.r0), ("h0", model.h0),
                      ("x0", model.x0), ("u0", model.u0)):
        lines.append(f"{name} {vec.size}")
        lines.append("  " + " ".join(repr(float(v)) for v in vec))
    lines.append(f"ts {model.ts!r}")
    return "\n".join(lines) + "\n"
