"""Pure-Python numeric kernels (reference backend).

Scalar math only, structured line-for-line like the compiled backend in
``_kernels.pyx`` so both produce identical arithmetic.  All routines take
packed parameter arrays built by :mod:`ftmpc.params` and write results into
caller-provided output arrays.
"""

from math import atan, cos, pi, sin, sqrt, tan

from .params import (
    IP_DELTA, IP_OMEGA, IP_PSI, IP_PSIDOT, IP_VX, IP_VY, IP_X, IP_Y,
    IX_D, IX_DELTA, IX_LAMBDA, IX_PSI, IX_PSIDOT, IX_S, IX_VX, IX_VY,
    IY_ALPHA, IY_BETA, IY_DDELTA_F, IY_DDELTA_R, IY_DELTA, IY_LAMBDA,
    IY_PSI, IY_PSIDOT, IY_S, IY_VX, IY_D,
    N_PLANT_STATES, N_STATES,
    TP_BX, TP_BY, TP_CX, TP_CY, TP_EX, TP_EY, TP_MU,
    VP_FZ0, VP_G, VP_HCG, VP_JW, VP_JZ, VP_LF, VP_LR, VP_M, VP_P, VP_Q,
    VP_RW, VP_SABS_M, VP_SABS_N, VP_SF, VP_SR,
)

COMPILED = False

TWO_OVER_PI = 2.0 / pi
STANDSTILL_V = 0.5        # below this speed the sideslip angle reports 0
FZ_FIXED_POINT_ITERS = 4  # quasi-static load-transfer fixed-point sweeps
_SIG_EPS = 1e-12


def smooth_abs(x, m_slope, n_offset):
    """Smooth stand-in for abs(x): x*(2/pi)*atan(m*x) + n."""
    return x * TWO_OVER_PI * atan(m_slope * x) + n_offset


def _mf_shape(s, b, c, e):
    # normalized magic-formula curve, peak value 1 for c > 1
    bs = b * s
    return sin(c * atan(bs - e * (bs - atan(bs))))


def tire_forces(lam, alpha, fz, tp):
    """Combined-slip wheel-frame tire forces (fx, fy) for one wheel.

    The combined slip vector (lam, tan(alpha)) selects the operating point
    on both pure curves; its direction splits the resultant so that the
    magnitude never exceeds mu_max*fz.
    """
    if fz < 0.0:
        raise ValueError("wheel load must be non-negative")
    if lam > 1.0:
        lam = 1.0
    elif lam < -1.0:
        lam = -1.0
    sx = lam
    sy = tan(alpha)
    sig = sqrt(sx * sx + sy * sy)
    if sig < _SIG_EPS:
        return 0.0, 0.0
    d = tp[TP_MU] * fz
    fx0 = d * _mf_shape(sig, tp[TP_BX], tp[TP_CX], tp[TP_EX])
    fy0 = d * _mf_shape(sig, tp[TP_BY], tp[TP_CY], tp[TP_EY])
    return (sx / sig) * fx0, -(sy / sig) * fy0


def _wheel_kinematics(vx, vy, psidot, delta, p, q, sabs_m, sabs_n):
    # wheel-center velocity in vehicle frame, then rotated to wheel frame
    vvx = vx - p * psidot
    vvy = vy + q * psidot
    cd = cos(delta)
    sd = sin(delta)
    vwx = vvx * cd + vvy * sd
    vwy = vvy * cd - vvx * sd
    alpha = atan(vwy / smooth_abs(vwx, sabs_m, sabs_n))
    return vvx, vvy, vwx, vwy, cd, sd, alpha


def slip_ratio(r_omega, vwx, sabs_m, sabs_n):
    """Longitudinal slip from wheel-circumference and contact-point speed."""
    den_v = smooth_abs(vwx, sabs_m, sabs_n)
    den_w = smooth_abs(r_omega, sabs_m, sabs_n)
    den = den_v if den_v >= den_w else den_w
    lam = (r_omega - vwx) / den
    if lam > 1.0:
        lam = 1.0
    elif lam < -1.0:
        lam = -1.0
    return lam


def pred_rhs(x, u, psi_ref, vp, tp, out):
    """Time derivative of the prediction-model state.

    Wheel slips are integrator states driven by the slip-rate inputs; slip
    angles follow from the body motion, and wheel loads stay at their
    static values.
    """
    vx = x[IX_VX]
    vy = x[IX_VY]
    psidot = x[IX_PSIDOT]
    m = vp[VP_M]
    sabs_m = vp[VP_SABS_M]
    sabs_n = vp[VP_SABS_N]

    sum_fx = 0.0
    sum_fy = 0.0
    sum_mz = 0.0
    for i in range(4):
        delta = x[IX_DELTA + i]
        p = vp[VP_P + i]
        q = vp[VP_Q + i]
        _, _, _, _, cd, sd, alpha = _wheel_kinematics(
            vx, vy, psidot, delta, p, q, sabs_m, sabs_n)
        fxw, fyw = tire_forces(x[IX_LAMBDA + i], alpha, vp[VP_FZ0 + i], tp)
        sum_fx += cd * fxw - sd * fyw
        sum_fy += sd * fxw + cd * fyw
        sum_mz += (p * cd + q * sd) * fxw + (q * cd - p * sd) * fyw

    dpsi = x[IX_PSI] - psi_ref
    cdp = cos(dpsi)
    sdp = sin(dpsi)
    out[IX_S] = vx * cdp - vy * sdp
    out[IX_D] = vx * sdp + vy * cdp
    out[IX_PSI] = psidot
    out[IX_VX] = vy * psidot + sum_fx / m
    out[IX_VY] = -vx * psidot + sum_fy / m
    out[IX_PSIDOT] = sum_mz / vp[VP_JZ]
    for i in range(4):
        out[IX_DELTA + i] = u[i]
        out[IX_LAMBDA + i] = u[4 + i]


def pred_step(x, u, psi_ref, ts, vp, tp, out):
    """Explicit-Euler discrete transition of the prediction model over ts."""
    rhs = [0.0] * N_STATES
    pred_rhs(x, u, psi_ref, vp, tp, rhs)
    for i in range(N_STATES):
        out[i] = x[i] + ts * rhs[i]


def output_vec(x, vp, out):
    """Controlled-output map of the prediction model (20 entries)."""
    vx = x[IX_VX]
    vy = x[IX_VY]
    psidot = x[IX_PSIDOT]
    sabs_m = vp[VP_SABS_M]
    sabs_n = vp[VP_SABS_N]

    out[IY_S] = x[IX_S]
    out[IY_D] = x[IX_D]
    out[IY_PSI] = x[IX_PSI]
    out[IY_VX] = vx
    if vx < STANDSTILL_V and -vx < STANDSTILL_V:
        out[IY_BETA] = 0.0
    else:
        out[IY_BETA] = atan(vy / vx)
    out[IY_PSIDOT] = psidot
    for i in range(4):
        out[IY_DELTA + i] = x[IX_DELTA + i]
        out[IY_LAMBDA + i] = x[IX_LAMBDA + i]
        _, _, _, _, _, _, alpha = _wheel_kinematics(
            vx, vy, psidot, x[IX_DELTA + i], vp[VP_P + i], vp[VP_Q + i],
            sabs_m, sabs_n)
        out[IY_ALPHA + i] = alpha
    out[IY_DDELTA_F] = x[IX_DELTA + 0] - x[IX_DELTA + 1]
    out[IY_DDELTA_R] = x[IX_DELTA + 2] - x[IX_DELTA + 3]


def _plant_forces(xp, vp, tp, static_loads, fz, lam, alpha, fxw, fyw):
    """Tire forces and quasi-static wheel loads for the current plant state.

    Wheel loads and accelerations form an algebraic loop; a short
    fixed-point iteration starting from the static distribution resolves
    it deterministically.  Fills fz/lam/alpha/fxw/fyw (length-4 lists) and
    returns (sum_fx, sum_fy, sum_mz) in the vehicle frame.
    """
    vx = xp[IP_VX]
    vy = xp[IP_VY]
    psidot = xp[IP_PSIDOT]
    m = vp[VP_M]
    r_w = vp[VP_RW]
    h = vp[VP_HCG]
    wl = vp[VP_LF] + vp[VP_LR]
    sabs_m = vp[VP_SABS_M]
    sabs_n = vp[VP_SABS_N]

    for i in range(4):
        fz[i] = vp[VP_FZ0 + i]
    sum_fx = sum_fy = sum_mz = 0.0
    n_iter = 1 if static_loads else FZ_FIXED_POINT_ITERS
    for _ in range(n_iter):
        sum_fx = 0.0
        sum_fy = 0.0
        sum_mz = 0.0
        for i in range(4):
            delta = xp[IP_DELTA + i]
            p = vp[VP_P + i]
            q = vp[VP_Q + i]
            _, _, vwx, _, cd, sd, al = _wheel_kinematics(
                vx, vy, psidot, delta, p, q, sabs_m, sabs_n)
            lm = slip_ratio(r_w * xp[IP_OMEGA + i], vwx, sabs_m, sabs_n)
            fx, fy = tire_forces(lm, al, fz[i], tp)
            lam[i] = lm
            alpha[i] = al
            fxw[i] = fx
            fyw[i] = fy
            sum_fx += cd * fx - sd * fy
            sum_fy += sd * fx + cd * fy
            sum_mz += (p * cd + q * sd) * fx + (q * cd - p * sd) * fy
        if static_loads:
            break
        ax = sum_fx / m
        ay = sum_fy / m
        dlong = m * ax * h / (2.0 * wl)
        dlat_f = 0.5 * m * ay * h / vp[VP_SF]
        dlat_r = 0.5 * m * ay * h / vp[VP_SR]
        fz[0] = vp[VP_FZ0 + 0] - dlong - dlat_f
        fz[1] = vp[VP_FZ0 + 1] - dlong + dlat_f
        fz[2] = vp[VP_FZ0 + 2] + dlong - dlat_r
        fz[3] = vp[VP_FZ0 + 3] + dlong + dlat_r
        # wheel lift: clamp negatives and rescale so the total stays m*g
        total = 0.0
        clipped = False
        for i in range(4):
            if fz[i] < 0.0:
                fz[i] = 0.0
                clipped = True
            total += fz[i]
        if clipped and total > 0.0:
            scale = m * vp[VP_G] / total
            for i in range(4):
                fz[i] *= scale
    return sum_fx, sum_fy, sum_mz


def plant_rhs(xp, torque, rate, vp, tp, static_loads, out):
    """Time derivative of the plant state (global pose + wheel spin)."""
    fz = [0.0] * 4
    lam = [0.0] * 4
    alpha = [0.0] * 4
    fxw = [0.0] * 4
    fyw = [0.0] * 4
    sum_fx, sum_fy, sum_mz = _plant_forces(
        xp, vp, tp, static_loads, fz, lam, alpha, fxw, fyw)

    vx = xp[IP_VX]
    vy = xp[IP_VY]
    psi = xp[IP_PSI]
    psidot = xp[IP_PSIDOT]
    m = vp[VP_M]
    cp = cos(psi)
    sp = sin(psi)
    out[IP_X] = vx * cp - vy * sp
    out[IP_Y] = vx * sp + vy * cp
    out[IP_PSI] = psidot
    out[IP_VX] = vy * psidot + sum_fx / m
    out[IP_VY] = -vx * psidot + sum_fy / m
    out[IP_PSIDOT] = sum_mz / vp[VP_JZ]
    for i in range(4):
        out[IP_DELTA + i] = rate[i]
        out[IP_OMEGA + i] = (torque[i] - vp[VP_RW] * fxw[i]) / vp[VP_JW]


def plant_step(xp, torque, rate, dt, vp, tp, static_loads,
               ang_lo, ang_hi, out):
    """One RK4 plant step with held inputs and steering-angle saturation."""
    k1 = [0.0] * N_PLANT_STATES
    k2 = [0.0] * N_PLANT_STATES
    k3 = [0.0] * N_PLANT_STATES
    k4 = [0.0] * N_PLANT_STATES
    tmp = [0.0] * N_PLANT_STATES

    plant_rhs(xp, torque, rate, vp, tp, static_loads, k1)
    for i in range(N_PLANT_STATES):
        tmp[i] = xp[i] + 0.5 * dt * k1[i]
    plant_rhs(tmp, torque, rate, vp, tp, static_loads, k2)
    for i in range(N_PLANT_STATES):
        tmp[i] = xp[i] + 0.5 * dt * k2[i]
    plant_rhs(tmp, torque, rate, vp, tp, static_loads, k3)
    for i in range(N_PLANT_STATES):
        tmp[i] = xp[i] + dt * k3[i]
    plant_rhs(tmp, torque, rate, vp, tp, static_loads, k4)
    for i in range(N_PLANT_STATES):
        out[i] = xp[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    for i in range(4):
        if out[IP_DELTA + i] < ang_lo[i]:
            out[IP_DELTA + i] = ang_lo[i]
        elif out[IP_DELTA + i] > ang_hi[i]:
            out[IP_DELTA + i] = ang_hi[i]


def plant_wheel_outputs(xp, vp, tp, static_loads, lam, alpha, fxw, fyw, fz):
    """Per-wheel slip, slip angle, wheel-frame forces, and loads."""
    _plant_forces(xp, vp, tp, static_loads, fz, lam, alpha, fxw, fyw)
