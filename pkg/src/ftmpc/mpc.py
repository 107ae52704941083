"""Receding-horizon controller: QP condensing, solve, and command emission.

Each control cycle takes the linearized prediction model, expands the
tracking cost

    J = sum_k (y_k - y_ref_k)' Q (y_k - y_ref_k) + u_k' R u_k

over the prediction horizon into a dense QP in the move sequence
(moves are held at the last value beyond the control horizon), solves it
with the dual active-set engine, and applies the first move.

Input bounds are hard.  Output bounds bind on every predicted step; when
they make the QP inconsistent — routine in the interval between a fault
occurring and being identified — the solve is repeated with one shared
nonnegative slack per bounded output channel and side, charged a large
linear penalty plus a small quadratic term.  The penalty is exact: when
the hard problem is feasible the slacks solve to zero and the relaxed
problem returns the hard solution, so the relaxation never distorts a
feasible cycle.  Such cycles are flagged ``infeasible-relaxed``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qp as qp_engine
from .params import (
    IY_PSI,
    IY_S,
    IY_VX,
    N_INPUTS,
    N_OUTPUTS,
    ActuatorLimits,
)

SLACK_PENALTY = 1e6      # linear cost per unit of output-bound violation
SLACK_CURVATURE = 1e-4   # small quadratic slack term keeping H positive definite

_DEFAULT_W_Y = {
    "s": 5.0, "d": 600.0, "psi": 350.0, "v_x": 1.0, "beta": 2.0,
    "psi_dot": 1.0, "delta": 0.1, "lam": 0.1, "alpha": 2.0, "ddelta": 0.5,
}
_DEFAULT_W_U = {"ddelta": 0.5, "dlambda": 0.05}

# public read-only views for config echoing
DEFAULT_OUTPUT_WEIGHTS = dict(_DEFAULT_W_Y)
DEFAULT_INPUT_WEIGHTS = dict(_DEFAULT_W_U)


def named_output_weights(overrides=None):
    """Output-weight vector from per-channel-group names.

    Recognized names: s, d, psi, v_x, beta, psi_dot, delta, lam, alpha,
    ddelta (the per-axle steering-angle difference).
    """
    d = dict(_DEFAULT_W_Y)
    if overrides:
        for key, val in overrides.items():
            if key not in d:
                raise ValueError(f"unknown output weight {key!r}")
            d[key] = float(val)
    return np.array(
        [d["s"], d["d"], d["psi"], d["v_x"], d["beta"], d["psi_dot"]]
        + [d["delta"]] * 4 + [d["lam"]] * 4 + [d["alpha"]] * 4
        + [d["ddelta"]] * 2)


def named_input_weights(overrides=None):
    """Input-weight vector from names ddelta (steer rate), dlambda (slip rate)."""
    d = dict(_DEFAULT_W_U)
    if overrides:
        for key, val in overrides.items():
            if key not in d:
                raise ValueError(f"unknown input weight {key!r}")
            d[key] = float(val)
    return np.array([d["ddelta"]] * 4 + [d["dlambda"]] * 4)


@dataclass(eq=False)
class MpcConfig:
    """Horizon lengths, weights, and box bounds of the tracking QP."""

    n_p: int
    n_c: int
    ts: float
    w_y: np.ndarray
    w_u: np.ndarray
    y_lo: np.ndarray = None
    y_hi: np.ndarray = None
    u_lo: np.ndarray = None
    u_hi: np.ndarray = None

    def __post_init__(self):
        self.w_y = np.asarray(self.w_y, dtype=float).copy()
        self.w_u = np.asarray(self.w_u, dtype=float).copy()
        n_y = self.w_y.size
        n_u = self.w_u.size
        self.y_lo = (np.full(n_y, -np.inf) if self.y_lo is None
                     else np.asarray(self.y_lo, dtype=float).copy())
        self.y_hi = (np.full(n_y, np.inf) if self.y_hi is None
                     else np.asarray(self.y_hi, dtype=float).copy())
        self.u_lo = (np.full(n_u, -np.inf) if self.u_lo is None
                     else np.asarray(self.u_lo, dtype=float).copy())
        self.u_hi = (np.full(n_u, np.inf) if self.u_hi is None
                     else np.asarray(self.u_hi, dtype=float).copy())
        if not 1 <= self.n_c <= self.n_p:
            raise ValueError(f"need 1 <= n_c <= n_p, got n_c={self.n_c} n_p={self.n_p}")
        if self.ts <= 0.0:
            raise ValueError("sample time must be positive")
        if np.any(self.w_y < 0.0) or np.any(self.w_u < 0.0):
            raise ValueError("weights must be nonnegative")
        for lo, hi, what in ((self.y_lo, self.y_hi, "output"),
                             (self.u_lo, self.u_hi, "input")):
            if lo.size != (n_y if what == "output" else n_u):
                raise ValueError(f"{what} bound size mismatch")
            both = np.isfinite(lo) & np.isfinite(hi)
            if np.any(lo[both] > hi[both]):
                raise ValueError(f"{what} bounds must satisfy lo <= hi")

    @classmethod
    def defaults(cls, limits: ActuatorLimits = None, n_p=20, n_c=5, ts=0.05,
                 w_y=None, w_u=None):
        """Standard 20-output / 8-input configuration.

        Output weights favor path tracking (s, d, psi) over speed and
        lateral-dynamics damping, with small actuator-position terms;
        input weights are small and uniform per actuator type.
        """
        if limits is None:
            limits = ActuatorLimits()
        if w_y is None:
            w_y = named_output_weights()
        if w_u is None:
            w_u = named_input_weights()
        y_lo = np.full(N_OUTPUTS, -np.inf)
        y_hi = np.full(N_OUTPUTS, np.inf)
        y_lo[6:10] = limits.delta[:, 0]
        y_hi[6:10] = limits.delta[:, 1]
        y_lo[10:14] = limits.lam[:, 0]
        y_hi[10:14] = limits.lam[:, 1]
        y_lo[14:18] = limits.alpha[:, 0]
        y_hi[14:18] = limits.alpha[:, 1]
        u_lo = np.concatenate([limits.ddelta[:, 0], limits.dlambda[:, 0]])
        u_hi = np.concatenate([limits.ddelta[:, 1], limits.dlambda[:, 1]])
        return cls(n_p=n_p, n_c=n_c, ts=ts, w_y=w_y, w_u=w_u,
                   y_lo=y_lo, y_hi=y_hi, u_lo=u_lo, u_hi=u_hi)

    def reconfigured(self, directive):
        """New config with a fault directive's weight/bound changes applied."""
        cfg = MpcConfig(n_p=self.n_p, n_c=self.n_c, ts=self.ts,
                        w_y=self.w_y, w_u=self.w_u,
                        y_lo=self.y_lo, y_hi=self.y_hi,
                        u_lo=self.u_lo, u_hi=self.u_hi)
        for ch in directive.zero_output_weights:
            cfg.w_y[ch] = 0.0
        for ch in directive.zero_input_weights:
            cfg.w_u[ch] = 0.0
        for ch, bound in directive.output_bounds.items():
            if bound is None:
                cfg.y_lo[ch], cfg.y_hi[ch] = -np.inf, np.inf
            else:
                cfg.y_lo[ch], cfg.y_hi[ch] = float(bound[0]), float(bound[1])
        for ch, bound in directive.input_bounds.items():
            cfg.u_lo[ch], cfg.u_hi[ch] = float(bound[0]), float(bound[1])
        return cfg


@dataclass(eq=False)
class QpProblem:
    """Condensed tracking QP over the move sequence."""

    h: np.ndarray            # (n_mv, n_mv) Hessian, so J = 0.5 v'Hv + g'v + j0
    g: np.ndarray            # (n_mv,)
    j0: float                # constant cost term
    c_ineq: np.ndarray       # (m, n_mv) rows, C v >= b
    b_ineq: np.ndarray       # (m,)
    slack_group: list        # per row: None (hard) or output (channel, side)
    gamma: np.ndarray        # (n_p*n_y, n_mv) moves -> predicted outputs
    y_free: np.ndarray       # (n_p*n_y,) predicted outputs at v = 0
    y_ref: np.ndarray        # (n_p*n_y,)
    n_p: int
    n_c: int
    n_u: int
    n_y: int
    u_prev: np.ndarray


@dataclass(frozen=True)
class MpcSolution:
    """Outcome of one control cycle's QP solve."""

    u0: np.ndarray               # first move
    moves: np.ndarray            # full move sequence (n_c * n_u)
    y_pred: np.ndarray           # (n_p, n_y) predicted outputs
    status: str                  # optimal | max-iterations | infeasible-relaxed
    objective: float             # tracking cost J at the returned moves
    iterations: int
    kkt_stationarity: float
    kkt_feasibility: float
    kkt_complementarity: float
    active: tuple
    slack_max: float
    objective_trace: tuple


def _expand_refs(refs, n_p, n_y):
    """Accept a (n_p, n_y) array or a ReferenceWindow-like object."""
    if hasattr(refs, "s") and hasattr(refs, "psi") and hasattr(refs, "v"):
        y_ref = np.zeros((n_p, n_y))
        y_ref[:, IY_S] = refs.s
        y_ref[:, IY_PSI] = refs.psi
        y_ref[:, IY_VX] = refs.v
        return y_ref
    y_ref = np.asarray(refs, dtype=float)
    if y_ref.shape != (n_p, n_y):
        raise ValueError(f"reference shape {y_ref.shape}, want {(n_p, n_y)}")
    return y_ref


def build_qp(model, refs, u_prev, cfg: MpcConfig):
    """Condense the prediction over the horizon into a dense QP."""
    a, b, c = model.a, model.b, model.c
    n_x = a.shape[0]
    n_u = b.shape[1]
    n_y = c.shape[0]
    if cfg.w_y.size != n_y or cfg.w_u.size != n_u:
        raise ValueError(
            f"config sized for {cfg.w_y.size} outputs / {cfg.w_u.size} inputs, "
            f"model has {n_y} / {n_u}")
    u_prev = np.asarray(u_prev, dtype=float)
    if u_prev.shape != (n_u,):
        raise ValueError(f"u_prev shape {u_prev.shape}, want {(n_u,)}")
    y_ref = _expand_refs(refs, cfg.n_p, n_y)

    n_mv = n_u * cfg.n_c
    h = np.zeros((n_mv, n_mv))
    g = np.zeros(n_mv)
    j0 = 0.0
    gamma = np.zeros((cfg.n_p * n_y, n_mv))
    y_free = np.zeros(cfg.n_p * n_y)

    s_map = np.zeros((n_x, n_mv))
    c_off = np.zeros(n_x)
    drift = -b @ u_prev + model.r0
    for k in range(cfg.n_p):
        j = min(k, cfg.n_c - 1)
        s_map = a @ s_map
        s_map[:, j * n_u:(j + 1) * n_u] += b
        c_off = a @ c_off + drift
        gamma_k = c @ s_map
        yfree_k = c @ c_off + model.h0
        gamma[k * n_y:(k + 1) * n_y] = gamma_k
        y_free[k * n_y:(k + 1) * n_y] = yfree_k
        gq = gamma_k * cfg.w_y[:, None]
        h += 2.0 * gamma_k.T @ gq
        err = yfree_k - y_ref[k]
        g += 2.0 * gamma_k.T @ (cfg.w_y * err)
        j0 += float(err @ (cfg.w_y * err))
        sl = slice(j * n_u, (j + 1) * n_u)
        h[sl, sl][np.diag_indices(n_u)] += 2.0 * cfg.w_u

    rows = []
    bs = []
    groups = []
    for j in range(cfg.n_c):
        for i in range(n_u):
            col = j * n_u + i
            if np.isfinite(cfg.u_lo[i]):
                e = np.zeros(n_mv)
                e[col] = 1.0
                rows.append(e)
                bs.append(cfg.u_lo[i])
                groups.append(None)
            if np.isfinite(cfg.u_hi[i]):
                e = np.zeros(n_mv)
                e[col] = -1.0
                rows.append(e)
                bs.append(-cfg.u_hi[i])
                groups.append(None)
    for k in range(cfg.n_p):
        base = k * n_y
        for ch in range(n_y):
            if np.isfinite(cfg.y_lo[ch]):
                rows.append(gamma[base + ch].copy())
                bs.append(cfg.y_lo[ch] - y_free[base + ch])
                groups.append((ch, 0))
            if np.isfinite(cfg.y_hi[ch]):
                rows.append(-gamma[base + ch])
                bs.append(y_free[base + ch] - cfg.y_hi[ch])
                groups.append((ch, 1))
    c_ineq = np.array(rows) if rows else np.zeros((0, n_mv))
    b_ineq = np.array(bs)
    return QpProblem(h=h, g=g, j0=j0, c_ineq=c_ineq, b_ineq=b_ineq,
                     slack_group=groups, gamma=gamma, y_free=y_free,
                     y_ref=y_ref.reshape(-1), n_p=cfg.n_p, n_c=cfg.n_c,
                     n_u=n_u, n_y=n_y, u_prev=u_prev.copy())


def _relaxed_arrays(prob: QpProblem):
    """Expand the QP with one shared slack per bounded channel and side."""
    group_ids = {}
    for grp in prob.slack_group:
        if grp is not None and grp not in group_ids:
            group_ids[grp] = len(group_ids)
    n_mv = prob.g.size
    n_s = len(group_ids)
    n = n_mv + n_s
    h = np.zeros((n, n))
    h[:n_mv, :n_mv] = prob.h
    h[np.arange(n_mv, n), np.arange(n_mv, n)] = SLACK_CURVATURE
    g = np.concatenate([prob.g, np.full(n_s, SLACK_PENALTY)])
    m = prob.b_ineq.size
    c = np.zeros((m + n_s, n))
    c[:m, :n_mv] = prob.c_ineq
    for i, grp in enumerate(prob.slack_group):
        if grp is not None:
            c[i, n_mv + group_ids[grp]] = 1.0
    for k in range(n_s):
        c[m + k, n_mv + k] = 1.0
    b = np.concatenate([prob.b_ineq, np.zeros(n_s)])
    return h, g, c, b, n_s


def solve_qp(prob: QpProblem, warm_start=None, max_iter=None):
    """Solve the condensed QP, falling back to the soft-bound relaxation."""
    warm_rows = getattr(warm_start, "active", warm_start)
    if warm_rows is None:
        warm_rows = ()
    res = qp_engine.solve_qp(prob.h, prob.g, prob.c_ineq, prob.b_ineq,
                             warm_rows=warm_rows, max_iter=max_iter)
    status = res.status
    slack_max = 0.0
    solved = (prob.h, prob.g, prob.c_ineq, prob.b_ineq)
    n_mv = prob.g.size
    if res.status == "infeasible":
        rh, rg, rc, rb, n_s = _relaxed_arrays(prob)
        res = qp_engine.solve_qp(rh, rg, rc, rb, warm_rows=warm_rows,
                                 max_iter=max_iter)
        if res.status == "infeasible":
            raise RuntimeError("slack-relaxed QP reported infeasible")
        status = "infeasible-relaxed" if res.status == "optimal" else res.status
        slack_max = float(np.max(res.x[n_mv:])) if n_s else 0.0
        solved = (rh, rg, rc, rb)
    x = res.x
    sh, sg, sc, sb = solved
    grad = sh @ x + sg - (sc.T @ res.duals if sb.size else 0.0)
    scale = max(1.0, float(np.max(np.abs(sg))))
    kkt_stat = float(np.max(np.abs(grad))) / scale
    kkt_feas = float(max(0.0, np.max(sb - sc @ x, initial=0.0)))
    kkt_comp = (float(np.max(np.abs(res.duals * (sc @ x - sb)), initial=0.0))
                / scale)

    v = x[:n_mv]
    y_pred = (prob.gamma @ v + prob.y_free).reshape(prob.n_p, prob.n_y)
    objective = float(0.5 * v @ prob.h @ v + prob.g @ v + prob.j0)
    return MpcSolution(
        u0=v[:prob.n_u].copy(), moves=v.copy(), y_pred=y_pred, status=status,
        objective=objective, iterations=res.iterations,
        kkt_stationarity=kkt_stat, kkt_feasibility=kkt_feas,
        kkt_complementarity=kkt_comp, active=res.active, slack_max=slack_max,
        objective_trace=res.objective_trace)


def control_step(x_hat, refs, cfg: MpcConfig, model, u_prev, warm_start=None):
    """One receding-horizon cycle: build, solve, return the saturated first move.

    ``model`` must already be linearized at (x_hat, u_prev) and reconfigured
    for every known degradation.  Only the first move is returned for
    application; the solution carries the full predicted sequence.
    """
    prob = build_qp(model, refs, u_prev, cfg)
    sol = solve_qp(prob, warm_start=warm_start)
    u0 = np.clip(sol.u0, cfg.u_lo, cfg.u_hi)
    return u0, sol
