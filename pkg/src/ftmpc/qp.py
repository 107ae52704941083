"""Dense dual active-set solver for strictly convex quadratic programs.

Solves  min  0.5 x' H x + g' x   subject to   C x >= b

with H symmetric positive definite.  The method starts from the
unconstrained minimizer (dual feasible by construction) and adds violated
constraints one at a time, taking primal/dual steps until the added
constraint is satisfied with a nonnegative multiplier; blocking
constraints whose multiplier would turn negative are dropped along the
way.  The objective value of the iterates is monotone non-decreasing and
reaches the constrained optimum from below; an unbounded dual step proves
the constraints inconsistent.

Every step direction is computed from a fresh dense KKT solve of the
current active set.  For the problem sizes this package produces
(tens of variables, hundreds of rows) that is both fast enough and free
of factorization-update bookkeeping.  All tie-breaking is by lowest row
index, so identical inputs give bit-identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_FEAS_TOL = 1e-9        # violation threshold on unit-norm rows
_DEP_TOL = 1e-11        # below this, a step direction counts as null
_DUAL_TOL = 1e-12       # blocking-constraint threshold on dual rates


@dataclass(frozen=True)
class QpResult:
    """Outcome of one QP solve."""

    x: np.ndarray
    status: str                  # "optimal" | "max-iterations" | "infeasible"
    iterations: int
    objective: float
    active: tuple                # row indices active at the returned point
    duals: np.ndarray            # multipliers for all rows (0 when inactive)
    objective_trace: tuple       # objective after each iterate, monotone


def solve_qp(h, g, c, b, warm_rows=(), max_iter=None):
    """Solve the inequality-constrained QP; see module docstring.

    ``warm_rows`` is an iterable of row indices to examine first when
    hunting for violated constraints (typically the active set of the
    previous, similar problem).  It changes the iteration count only,
    never the solution.
    """
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    c = np.asarray(c, dtype=float)
    b = np.asarray(b, dtype=float)
    n = g.size
    m = b.size
    if h.shape != (n, n):
        raise ValueError(f"H has shape {h.shape}, want {(n, n)}")
    if c.shape != (m, n):
        raise ValueError(f"C has shape {c.shape}, want {(m, n)}")
    h = 0.5 * (h + h.T)
    if max_iter is None:
        max_iter = 10 * (n + m) + 100

    # normalize rows so feasibility tolerances are scale-free
    if m:
        scale = np.maximum(np.max(np.abs(c), axis=1), 1e-300)
        cn = c / scale[:, None]
        bn = b / scale
    else:
        scale = np.zeros(0)
        cn = c
        bn = b

    x = np.linalg.solve(h, -g)

    def objective(xv):
        return float(0.5 * xv @ h @ xv + g @ xv)

    trace = [objective(x)]
    active: list[int] = []
    duals: list[float] = []
    warm = [int(r) for r in dict.fromkeys(warm_rows) if 0 <= int(r) < m]
    iterations = 0
    status = "optimal"

    def pick_violated():
        if m == 0:
            return -1
        viol = bn - cn @ x
        for pool in (warm, None):
            if pool is None:
                idx = int(np.argmax(viol))
                if viol[idx] > _FEAS_TOL:
                    return idx
                return -1
            cand = [r for r in pool if viol[r] > _FEAS_TOL and r not in active]
            if cand:
                return max(cand, key=lambda r: (viol[r], -r))
        return -1

    while True:
        p = pick_violated()
        if p < 0:
            break
        n_p = cn[p]
        u_p = 0.0
        while True:
            if iterations >= max_iter:
                status = "max-iterations"
                break
            iterations += 1
            q = len(active)
            if q:
                nmat = cn[active]
                kkt = np.zeros((n + q, n + q))
                kkt[:n, :n] = h
                kkt[:n, n:] = nmat.T
                kkt[n:, :n] = nmat
                rhs = np.concatenate([n_p, np.zeros(q)])
                sol = np.linalg.solve(kkt, rhs)
                z = sol[:n]
                r = sol[n:]
            else:
                z = np.linalg.solve(h, n_p)
                r = np.zeros(0)

            denom = float(n_p @ z)
            viol_p = float(bn[p] - n_p @ x)
            t2 = viol_p / denom if denom > _DEP_TOL else np.inf

            t1 = np.inf
            k_block = -1
            for k in range(q):
                if r[k] > _DUAL_TOL:
                    step = duals[k] / r[k]
                    if step < t1:
                        t1 = step
                        k_block = k
            t = min(t1, t2)
            if not np.isfinite(t):
                status = "infeasible"
                break

            if np.isfinite(t2):
                # primal step toward satisfying row p (null when z is null)
                x = x + t * z
            for k in range(q):
                duals[k] -= t * r[k]
            u_p += t
            if t2 <= t1:
                active.append(p)
                duals.append(u_p)
                trace.append(objective(x))
                break
            # partial step: the blocking constraint leaves the active set
            del active[k_block]
            del duals[k_block]
            trace.append(objective(x))
        if status != "optimal":
            break

    full_duals = np.zeros(m)
    for idx, row in enumerate(active):
        full_duals[row] = duals[idx] / scale[row]
    order = np.argsort(active) if active else []
    return QpResult(
        x=x,
        status=status,
        iterations=iterations,
        objective=objective(x),
        active=tuple(int(active[i]) for i in order),
        duals=full_duals,
        objective_trace=tuple(trace),
    )
