"""Reference trajectories and Frenet-frame projection.

The default maneuver is a sine-with-dwell lane weave: one sine period of
lateral motion at fixed path speed with a heading-hold dwell inserted at
the third-quarter peak, framed by straight lead-in/lead-out segments.
The amplitude is tuned so the peak lateral acceleration lands at a chosen
fraction of the friction limit.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .params import G


class TrajectoryError(ValueError):
    """Raised for undrivable parameter sets or out-of-range lookups."""


@dataclass
class ReferenceTrajectory:
    """Reference path sampled uniformly along arc length.

    Arrays share one length: time, global position, heading, arc length,
    and path speed at each sample.  The path speed is constant, so the
    samples are uniform in time as well.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    s: np.ndarray
    v: np.ndarray
    ds: float

    @property
    def duration(self) -> float:
        return float(self.t[-1])

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def pose_at_time(self, t: float):
        """Reference (x, y, psi, s, v) interpolated at time t."""
        if t < 0.0 or t > self.duration:
            raise TrajectoryError(f"time {t:.3f} outside trajectory horizon")
        return (float(np.interp(t, self.t, self.x)),
                float(np.interp(t, self.t, self.y)),
                float(np.interp(t, self.t, self.psi)),
                float(np.interp(t, self.t, self.s)),
                float(np.interp(t, self.t, self.v)))

    def heading_at_s(self, s: float) -> float:
        return float(np.interp(s, self.s, self.psi))


def _dwell_profile(t, amplitude, frequency, dwell, lead_in):
    """Lateral offset and its time derivative for the sine-with-dwell shape.

    One sine period with a dwell (heading hold) at the third-quarter peak.
    The sine starts and ends at its maximum slope, so the straight lead-in
    and lead-out run along that entry/exit tangent; this keeps the
    reference heading continuous everywhere.
    """
    period = 1.0 / frequency
    t_dwell_start = lead_in + 0.75 * period
    t_dwell_end = t_dwell_start + dwell
    t_end = lead_in + period + dwell
    w = 2.0 * math.pi * frequency
    slope = amplitude * w
    if t < lead_in:
        return slope * (t - lead_in), slope
    if t < t_dwell_start:
        phase = t - lead_in
        return amplitude * math.sin(w * phase), slope * math.cos(w * phase)
    if t < t_dwell_end:
        return -amplitude, 0.0
    if t < t_end:
        phase = t - lead_in - dwell
        return amplitude * math.sin(w * phase), slope * math.cos(w * phase)
    return slope * (t - t_end), slope


def build_sine_with_dwell(speed=14.0, frequency=0.7, dwell=0.5,
                          amplitude=None, lead_in=1.5, duration=9.5,
                          mu_max=1.0, accel_fraction=0.85, ds=0.1):
    """Build the sine-with-dwell reference trajectory.

    When ``amplitude`` is None it is tuned so the analytic peak lateral
    acceleration ``A*(2*pi*f)^2`` equals ``accel_fraction * mu_max * g``.
    Raises TrajectoryError when the requested peak exceeds the friction
    limit ``mu_max * g`` or the lateral speed would exceed the path speed.
    """
    if speed <= 0.0 or frequency <= 0.0 or ds <= 0.0:
        raise TrajectoryError("speed, frequency, and ds must be positive")
    w = 2.0 * math.pi * frequency
    if amplitude is None:
        amplitude = accel_fraction * mu_max * G / (w * w)
    peak_ay = abs(amplitude) * w * w
    if peak_ay > mu_max * G * (1.0 + 1e-9):
        raise TrajectoryError(
            f"peak lateral acceleration {peak_ay:.2f} exceeds friction limit "
            f"{mu_max * G:.2f}")
    if abs(amplitude) * w >= speed:
        raise TrajectoryError("lateral speed would exceed the path speed")

    n = int(round(speed * duration / ds)) + 1
    dt = ds / speed
    n_sub = 8  # integration substeps per sample for the x-coordinate
    h = dt / n_sub

    t_arr = np.arange(n) * dt
    x_arr = np.empty(n)
    y_arr = np.empty(n)
    psi_arr = np.empty(n)

    def xdot(ti):
        _, dy = _dwell_profile(ti, amplitude, frequency, dwell, lead_in)
        return math.sqrt(speed * speed - dy * dy), dy

    x = 0.0
    for k in range(n):
        tk = t_arr[k]
        dx, dy = xdot(tk)
        x_arr[k] = x
        y_arr[k], _ = _dwell_profile(tk, amplitude, frequency, dwell, lead_in)
        psi_arr[k] = math.atan2(dy, dx)
        # advance x to the next sample with Simpson integration
        if k + 1 < n:
            for j in range(n_sub):
                a = tk + j * h
                fa, _ = xdot(a)
                fm, _ = xdot(a + 0.5 * h)
                fb, _ = xdot(a + h)
                x += h / 6.0 * (fa + 4.0 * fm + fb)

    s_arr = speed * t_arr
    v_arr = np.full(n, float(speed))
    traj = ReferenceTrajectory(t_arr, x_arr, y_arr, psi_arr, s_arr, v_arr,
                               ds=float(ds))

    # drivability: the sampled path curvature must respect the friction limit
    kappa = np.abs(np.diff(psi_arr)) / ds
    if kappa.size and float(np.max(kappa)) * speed * speed > mu_max * G * (1.0 + 1e-6):
        raise TrajectoryError("sampled path curvature exceeds the friction limit")
    return traj


def project_to_frenet(x, y, psi, traj: ReferenceTrajectory, hint=None,
                      window=400):
    """Project a global pose onto the path.

    Searches the sample nearest to the pose (around ``hint`` when given,
    otherwise globally), then projects onto the adjacent polyline
    segments.  Returns (s, d, psi_err, index): arc length at the foot
    point, signed lateral offset (positive left of the path tangent), and
    the heading error wrapped to (-pi, pi].

    Raises TrajectoryError when a hinted search ends pinned to the window
    edge (projection lost).
    """
    n = traj.x.size
    if hint is None:
        lo, hi = 0, n
    else:
        hint = int(min(max(hint, 0), n - 1))
        lo, hi = max(0, hint - window), min(n, hint + window + 1)
    dx = traj.x[lo:hi] - x
    dy = traj.y[lo:hi] - y
    idx = lo + int(np.argmin(dx * dx + dy * dy))
    if hint is not None and idx in (lo, hi - 1) and idx not in (0, n - 1):
        raise TrajectoryError("projection lost: nearest sample pinned to window edge")

    # candidate segments around the nearest sample
    best = None
    for i0 in (idx - 1, idx):
        if i0 < 0 or i0 + 1 >= n:
            continue
        ex = traj.x[i0 + 1] - traj.x[i0]
        ey = traj.y[i0 + 1] - traj.y[i0]
        seg2 = ex * ex + ey * ey
        if seg2 <= 0.0:
            continue
        u = ((x - traj.x[i0]) * ex + (y - traj.y[i0]) * ey) / seg2
        u = min(1.0, max(0.0, u))
        px = traj.x[i0] + u * ex
        py = traj.y[i0] + u * ey
        dist2 = (x - px) ** 2 + (y - py) ** 2
        if best is None or dist2 < best[0] - 1e-15:
            s_here = traj.s[i0] + u * (traj.s[i0 + 1] - traj.s[i0])
            # Reference heading from the stored (continuous) heading array,
            # not the raw segment direction: at a sample point this is the
            # exact path tangent instead of a chord direction.
            psi_here = traj.psi[i0] + u * (traj.psi[i0 + 1] - traj.psi[i0])
            d_here = -(x - px) * math.sin(psi_here) + (y - py) * math.cos(psi_here)
            best = (dist2, s_here, d_here, psi_here)
    if best is None:
        raise TrajectoryError("degenerate trajectory: no projectable segment")
    _, s_proj, d_proj, psi_ref = best
    psi_err = -((psi_ref - psi + math.pi) % (2.0 * math.pi) - math.pi)
    return s_proj, d_proj, psi_err, idx


@dataclass
class ReferenceWindow:
    """Reference samples over one prediction horizon (steps 1..n_p)."""

    s: np.ndarray
    psi: np.ndarray
    v: np.ndarray


def reference_window(traj: ReferenceTrajectory, t_now, n_p, ts):
    """Per-step references at t_now + ts, ..., t_now + n_p*ts."""
    t_last = t_now + n_p * ts
    if t_now < 0.0 or t_last > traj.duration + 1e-9:
        raise TrajectoryError(
            f"reference window [{t_now:.3f}, {t_last:.3f}] leaves the trajectory")
    times = t_now + ts * np.arange(1, n_p + 1)
    return ReferenceWindow(
        s=np.interp(times, traj.t, traj.s),
        psi=np.interp(times, traj.t, traj.psi),
        v=np.interp(times, traj.t, traj.v),
    )


def save_csv(traj: ReferenceTrajectory, path):
    """Write the trajectory samples as CSV columns (t, x, y, psi, s, v)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "x", "y", "psi", "s", "v"])
        for k in range(traj.t.size):
            writer.writerow([repr(float(a[k])) for a in
                             (traj.t, traj.x, traj.y, traj.psi, traj.s, traj.v)])


def load_csv(path) -> ReferenceTrajectory:
    """Read a trajectory written by :func:`save_csv`."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    cols = [np.atleast_1d(data[name]) for name in
            ("t", "x", "y", "psi", "s", "v")]
    if cols[0].size < 2:
        raise TrajectoryError("trajectory file needs at least two samples")
    ds = float(cols[4][1] - cols[4][0])
    return ReferenceTrajectory(*cols, ds=ds)
