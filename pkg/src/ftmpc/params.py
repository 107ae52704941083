"""Parameter sets and vector layouts shared by the whole package.

State, input, and output vectors are plain float64 ndarrays with fixed
layouts; the index constants below are the single source of truth for
those layouts.  Wheel order everywhere is (front-left, front-right,
rear-left, rear-right).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

G = 9.81  # gravitational acceleration [m/s^2]

WHEELS = ("fl", "fr", "rl", "rr")
N_WHEELS = 4

# --- prediction-model state vector (14 entries) -------------------------
IX_S, IX_D, IX_PSI, IX_VX, IX_VY, IX_PSIDOT = 0, 1, 2, 3, 4, 5
IX_DELTA = 6    # 6..9   wheel steering angles [rad]
IX_LAMBDA = 10  # 10..13 longitudinal wheel slips [-]
N_STATES = 14

# --- control input vector (8 entries) ------------------------------------
IU_DDELTA = 0   # 0..3 steering rates [rad/s]
IU_DLAMBDA = 4  # 4..7 slip rates [1/s]
N_INPUTS = 8

# --- controlled output vector (20 entries) -------------------------------
IY_S, IY_D, IY_PSI, IY_VX, IY_BETA, IY_PSIDOT = 0, 1, 2, 3, 4, 5
IY_DELTA = 6     # 6..9
IY_LAMBDA = 10   # 10..13
IY_ALPHA = 14    # 14..17 tire slip angles [rad]
IY_DDELTA_F = 18  # front left/right steering-angle difference [rad]
IY_DDELTA_R = 19  # rear  left/right steering-angle difference [rad]
N_OUTPUTS = 20

# --- plant (simulation truth) state vector (14 entries) ------------------
IP_X, IP_Y, IP_PSI, IP_VX, IP_VY, IP_PSIDOT = 0, 1, 2, 3, 4, 5
IP_DELTA = 6    # 6..9   realized steering angles [rad]
IP_OMEGA = 10   # 10..13 wheel spin speeds [rad/s]
N_PLANT_STATES = 14

# packed vehicle-parameter array layout (consumed by both kernel backends)
VP_M, VP_JZ, VP_LF, VP_LR, VP_SF, VP_SR = 0, 1, 2, 3, 4, 5
VP_RW, VP_JW, VP_HCG, VP_SABS_M, VP_SABS_N, VP_G = 6, 7, 8, 9, 10, 11
VP_P = 12    # 12..15 lateral lever arms p_ij
VP_Q = 16    # 16..19 longitudinal lever arms q_ij
VP_FZ0 = 20  # 20..23 static wheel loads
VP_SIZE = 24

# packed tire-parameter array layout
TP_BX, TP_CX, TP_EX, TP_BY, TP_CY, TP_EY, TP_MU = 0, 1, 2, 3, 4, 5, 6
TP_SIZE = 7


@dataclass
class VehicleParams:
    """Rigid double-track vehicle parameters (default desk-scale test set)."""

    m: float = 2200.0      # vehicle mass [kg]
    j_z: float = 2000.0    # yaw inertia [kg m^2]
    l_f: float = 1.36      # CG to front axle [m]
    l_r: float = 1.36      # CG to rear axle [m]
    s_f: float = 1.75      # front track width [m]
    s_r: float = 1.75      # rear track width [m]
    r_w: float = 0.28      # wheel radius [m]
    j_w: float = 2.0       # wheel spin inertia [kg m^2]
    h_cg: float = 0.3      # CG height [m]
    sabs_slope: float = 5.0     # smooth-absolute-value slope parameter
    sabs_offset: float = 0.1273  # smooth-absolute-value offset at zero
    g: float = G

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("m", "j_z", "l_f", "l_r", "s_f", "s_r", "r_w", "j_w",
                     "h_cg", "sabs_slope", "sabs_offset", "g"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"VehicleParams.{name} must be positive")

    @property
    def wheelbase(self) -> float:
        return self.l_f + self.l_r

    @property
    def lever_p(self) -> np.ndarray:
        """Lateral lever arms p_ij per wheel (fl, fr, rl, rr)."""
        return np.array([self.s_f / 2, -self.s_f / 2,
                         self.s_r / 2, -self.s_r / 2])

    @property
    def lever_q(self) -> np.ndarray:
        """Longitudinal lever arms q_ij per wheel (fl, fr, rl, rr)."""
        return np.array([self.l_f, self.l_f, -self.l_r, -self.l_r])

    def static_loads(self) -> np.ndarray:
        """Static wheel loads on level ground [N]; sums to m*g."""
        wl = self.wheelbase
        front = self.m * self.g * self.l_r / (2.0 * wl)
        rear = self.m * self.g * self.l_f / (2.0 * wl)
        return np.array([front, front, rear, rear])

    def pack(self) -> np.ndarray:
        """Flat float64 array consumed by the numeric kernels."""
        vp = np.zeros(VP_SIZE)
        vp[VP_M], vp[VP_JZ] = self.m, self.j_z
        vp[VP_LF], vp[VP_LR] = self.l_f, self.l_r
        vp[VP_SF], vp[VP_SR] = self.s_f, self.s_r
        vp[VP_RW], vp[VP_JW], vp[VP_HCG] = self.r_w, self.j_w, self.h_cg
        vp[VP_SABS_M], vp[VP_SABS_N] = self.sabs_slope, self.sabs_offset
        vp[VP_G] = self.g
        vp[VP_P:VP_P + 4] = self.lever_p
        vp[VP_Q:VP_Q + 4] = self.lever_q
        vp[VP_FZ0:VP_FZ0 + 4] = self.static_loads()
        return vp


@dataclass
class TireParams:
    """Magic-formula coefficients, shared by all four wheels.

    The pure longitudinal and lateral curves use the common
    ``D*sin(C*atan(B*s - E*(B*s - atan(B*s))))`` shape with ``D`` scaled
    linearly by the wheel load; combined slip mixes the two pure curves by
    the direction of the combined slip vector, which keeps the resultant
    force inside the friction circle ``mu_max * F_z`` by construction.
    """

    b_x: float = 10.0
    c_x: float = 1.9
    e_x: float = 0.97
    b_y: float = 8.0
    c_y: float = 1.3
    e_y: float = -1.0
    mu_max: float = 1.0      # peak friction coefficient [-]
    fz_nominal: float = 5395.5  # reference wheel load the set was fit at [N]

    def __post_init__(self):
        if self.mu_max <= 0.0:
            raise ValueError("TireParams.mu_max must be positive")
        if self.c_x <= 1.0 or self.c_y <= 1.0:
            raise ValueError("shape factors must exceed 1 for a saturating curve")

    def pack(self) -> np.ndarray:
        tp = np.zeros(TP_SIZE)
        tp[TP_BX], tp[TP_CX], tp[TP_EX] = self.b_x, self.c_x, self.e_x
        tp[TP_BY], tp[TP_CY], tp[TP_EY] = self.b_y, self.c_y, self.e_y
        tp[TP_MU] = self.mu_max
        return tp


def _per_wheel(lo: float, hi: float) -> np.ndarray:
    return np.array([[lo, hi]] * N_WHEELS)


@dataclass
class ActuatorLimits:
    """Per-wheel actuator and tire-operating ranges, rows (lo, hi)."""

    delta: np.ndarray = field(
        default_factory=lambda: _per_wheel(-math.radians(30), math.radians(30)))
    ddelta: np.ndarray = field(
        default_factory=lambda: _per_wheel(-math.radians(120), math.radians(120)))
    torque: np.ndarray = field(default_factory=lambda: _per_wheel(-2000.0, 2000.0))
    lam: np.ndarray = field(default_factory=lambda: _per_wheel(-0.12, 0.12))
    dlambda: np.ndarray = field(default_factory=lambda: _per_wheel(-2.5, 2.5))
    alpha: np.ndarray = field(default_factory=lambda: _per_wheel(-0.2, 0.2))

    def __post_init__(self):
        for name in ("delta", "ddelta", "torque", "lam", "dlambda", "alpha"):
            rng = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, rng)
            if rng.shape != (N_WHEELS, 2):
                raise ValueError(f"ActuatorLimits.{name} must have shape (4, 2)")
            if np.any(rng[:, 0] > 0.0) or np.any(rng[:, 1] < 0.0):
                raise ValueError(
                    f"ActuatorLimits.{name} ranges must be nonempty and contain 0")

    def copy(self) -> "ActuatorLimits":
        return ActuatorLimits(self.delta.copy(), self.ddelta.copy(),
                              self.torque.copy(), self.lam.copy(),
                              self.dlambda.copy(), self.alpha.copy())


def vehicle_state(s=0.0, d=0.0, psi=0.0, v_x=0.0, v_y=0.0, psi_dot=0.0,
                  delta=(0.0, 0.0, 0.0, 0.0), lam=(0.0, 0.0, 0.0, 0.0)):
    """Assemble a prediction-model state vector from named components."""
    x = np.zeros(N_STATES)
    x[IX_S], x[IX_D], x[IX_PSI] = s, d, psi
    x[IX_VX], x[IX_VY], x[IX_PSIDOT] = v_x, v_y, psi_dot
    x[IX_DELTA:IX_DELTA + 4] = delta
    x[IX_LAMBDA:IX_LAMBDA + 4] = lam
    return x


def plant_state(x=0.0, y=0.0, psi=0.0, v_x=0.0, v_y=0.0, psi_dot=0.0,
                delta=(0.0, 0.0, 0.0, 0.0), omega=None, params=None):
    """Assemble a plant state vector; omega defaults to free rolling."""
    xp = np.zeros(N_PLANT_STATES)
    xp[IP_X], xp[IP_Y], xp[IP_PSI] = x, y, psi
    xp[IP_VX], xp[IP_VY], xp[IP_PSIDOT] = v_x, v_y, psi_dot
    xp[IP_DELTA:IP_DELTA + 4] = delta
    if omega is None:
        r_w = (params or VehicleParams()).r_w
        omega = [v_x / r_w] * N_WHEELS
    xp[IP_OMEGA:IP_OMEGA + 4] = omega
    return xp
