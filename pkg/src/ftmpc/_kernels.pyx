# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels.

Twin of :mod:`ftmpc._kernels_py`, kept in lockstep function-for-function so
both backends produce identical arithmetic.  All routines take the packed
parameter arrays built by :mod:`ftmpc.params` and write results into
caller-provided output arrays.
"""

from libc.math cimport atan, cos, sin, sqrt, tan

from . import params as _p

COMPILED = True

TWO_OVER_PI = 2.0 / 3.141592653589793
STANDSTILL_V = 0.5        # below this speed the sideslip angle reports 0
FZ_FIXED_POINT_ITERS = 4  # quasi-static load-transfer fixed-point sweeps

cdef double _TWO_OVER_PI = 2.0 / 3.141592653589793
cdef double _STANDSTILL_V = 0.5
cdef int _FZ_ITERS = 4
cdef double _SIG_EPS = 1e-12

# state-vector layout (resolved once at import; the stack buffers below
# assume the 14-entry layouts, checked here)
cdef int IX_S = _p.IX_S
cdef int IX_D = _p.IX_D
cdef int IX_PSI = _p.IX_PSI
cdef int IX_VX = _p.IX_VX
cdef int IX_VY = _p.IX_VY
cdef int IX_PSIDOT = _p.IX_PSIDOT
cdef int IX_DELTA = _p.IX_DELTA
cdef int IX_LAMBDA = _p.IX_LAMBDA
cdef int IY_S = _p.IY_S
cdef int IY_D = _p.IY_D
cdef int IY_PSI = _p.IY_PSI
cdef int IY_VX = _p.IY_VX
cdef int IY_BETA = _p.IY_BETA
cdef int IY_PSIDOT = _p.IY_PSIDOT
cdef int IY_DELTA = _p.IY_DELTA
cdef int IY_LAMBDA = _p.IY_LAMBDA
cdef int IY_ALPHA = _p.IY_ALPHA
cdef int IY_DDELTA_F = _p.IY_DDELTA_F
cdef int IY_DDELTA_R = _p.IY_DDELTA_R
cdef int IP_X = _p.IP_X
cdef int IP_Y = _p.IP_Y
cdef int IP_PSI = _p.IP_PSI
cdef int IP_VX = _p.IP_VX
cdef int IP_VY = _p.IP_VY
cdef int IP_PSIDOT = _p.IP_PSIDOT
cdef int IP_DELTA = _p.IP_DELTA
cdef int IP_OMEGA = _p.IP_OMEGA
cdef int N_STATES = _p.N_STATES
cdef int N_PLANT_STATES = _p.N_PLANT_STATES
cdef int TP_BX = _p.TP_BX
cdef int TP_CX = _p.TP_CX
cdef int TP_EX = _p.TP_EX
cdef int TP_BY = _p.TP_BY
cdef int TP_CY = _p.TP_CY
cdef int TP_EY = _p.TP_EY
cdef int TP_MU = _p.TP_MU
cdef int VP_M = _p.VP_M
cdef int VP_JZ = _p.VP_JZ
cdef int VP_LF = _p.VP_LF
cdef int VP_LR = _p.VP_LR
cdef int VP_SF = _p.VP_SF
cdef int VP_SR = _p.VP_SR
cdef int VP_RW = _p.VP_RW
cdef int VP_JW = _p.VP_JW
cdef int VP_HCG = _p.VP_HCG
cdef int VP_SABS_M = _p.VP_SABS_M
cdef int VP_SABS_N = _p.VP_SABS_N
cdef int VP_G = _p.VP_G
cdef int VP_P = _p.VP_P
cdef int VP_Q = _p.VP_Q
cdef int VP_FZ0 = _p.VP_FZ0

if N_STATES != 14 or N_PLANT_STATES != 14:
    raise ImportError("compiled kernels built for 14-entry state layouts")


cdef inline double _sabs(double x, double m_slope, double n_offset) noexcept:
    return x * _TWO_OVER_PI * atan(m_slope * x) + n_offset


def smooth_abs(double x, double m_slope, double n_offset):
    """Smooth stand-in for abs(x): x*(2/pi)*atan(m*x) + n."""
    return _sabs(x, m_slope, n_offset)


cdef inline double _mf_shape(double s, double b, double c, double e) noexcept:
    # normalized magic-formula curve, peak value 1 for c > 1
    cdef double bs = b * s
    return sin(c * atan(bs - e * (bs - atan(bs))))


cdef inline int _tire(double lam, double alpha, double fz, double[:] tp,
                      double* fx, double* fy) except -1:
    """Combined-slip wheel-frame tire forces for one wheel."""
    cdef double sx, sy, sig, d, fx0, fy0
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
        fx[0] = 0.0
        fy[0] = 0.0
        return 0
    d = tp[TP_MU] * fz
    fx0 = d * _mf_shape(sig, tp[TP_BX], tp[TP_CX], tp[TP_EX])
    fy0 = d * _mf_shape(sig, tp[TP_BY], tp[TP_CY], tp[TP_EY])
    fx[0] = (sx / sig) * fx0
    fy[0] = -(sy / sig) * fy0
    return 0


def tire_forces(double lam, double alpha, double fz, double[:] tp):
    """Combined-slip wheel-frame tire forces (fx, fy) for one wheel.

    The combined slip vector (lam, tan(alpha)) selects the operating point
    on both pure curves; its direction splits the resultant so that the
    magnitude never exceeds mu_max*fz.
    """
    cdef double fx = 0.0
    cdef double fy = 0.0
    _tire(lam, alpha, fz, tp, &fx, &fy)
    return fx, fy


cdef inline void _wheel_kinematics(double vx, double vy, double psidot,
                                   double delta, double p, double q,
                                   double sabs_m, double sabs_n,
                                   double* vwx, double* vwy,
                                   double* cd, double* sd,
                                   double* alpha) noexcept:
    # wheel-center velocity in vehicle frame, then rotated to wheel frame
    cdef double vvx = vx - p * psidot
    cdef double vvy = vy + q * psidot
    cd[0] = cos(delta)
    sd[0] = sin(delta)
    vwx[0] = vvx * cd[0] + vvy * sd[0]
    vwy[0] = vvy * cd[0] - vvx * sd[0]
    alpha[0] = atan(vwy[0] / _sabs(vwx[0], sabs_m, sabs_n))


cdef inline double _slip_ratio(double r_omega, double vwx,
                               double sabs_m, double sabs_n) noexcept:
    cdef double den_v = _sabs(vwx, sabs_m, sabs_n)
    cdef double den_w = _sabs(r_omega, sabs_m, sabs_n)
    cdef double den = den_v if den_v >= den_w else den_w
    cdef double lam = (r_omega - vwx) / den
    if lam > 1.0:
        lam = 1.0
    elif lam < -1.0:
        lam = -1.0
    return lam


def slip_ratio(double r_omega, double vwx, double sabs_m, double sabs_n):
    """Longitudinal slip from wheel-circumference and contact-point speed."""
    return _slip_ratio(r_omega, vwx, sabs_m, sabs_n)


def pred_rhs(double[:] x, double[:] u, double psi_ref,
             double[:] vp, double[:] tp, double[:] out):
    """Time derivative of the prediction-model state.

    Wheel slips are integrator states driven by the slip-rate inputs; slip
    angles follow from the body motion, and wheel loads stay at their
    static values.
    """
    _pred_rhs(x, u, psi_ref, vp, tp, out)


cdef int _pred_rhs(double[:] x, double[:] u, double psi_ref,
                   double[:] vp, double[:] tp, double[:] out) except -1:
    cdef double vx = x[IX_VX]
    cdef double vy = x[IX_VY]
    cdef double psidot = x[IX_PSIDOT]
    cdef double m = vp[VP_M]
    cdef double sabs_m = vp[VP_SABS_M]
    cdef double sabs_n = vp[VP_SABS_N]
    cdef double sum_fx = 0.0
    cdef double sum_fy = 0.0
    cdef double sum_mz = 0.0
    cdef double delta, p, q, vwx, vwy, cd, sd, alpha, fxw, fyw
    cdef double dpsi, cdp, sdp
    cdef int i

    for i in range(4):
        delta = x[IX_DELTA + i]
        p = vp[VP_P + i]
        q = vp[VP_Q + i]
        _wheel_kinematics(vx, vy, psidot, delta, p, q, sabs_m, sabs_n,
                          &vwx, &vwy, &cd, &sd, &alpha)
        _tire(x[IX_LAMBDA + i], alpha, vp[VP_FZ0 + i], tp, &fxw, &fyw)
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
    return 0


def pred_step(double[:] x, double[:] u, double psi_ref, double ts,
              double[:] vp, double[:] tp, double[:] out):
    """Explicit-Euler discrete transition of the prediction model over ts."""
    cdef double rhs[14]
    cdef double[:] rhs_view = rhs
    cdef int i
    _pred_rhs(x, u, psi_ref, vp, tp, rhs_view)
    for i in range(N_STATES):
        out[i] = x[i] + ts * rhs[i]


def output_vec(double[:] x, double[:] vp, double[:] out):
    """Controlled-output map of the prediction model (20 entries)."""
    cdef double vx = x[IX_VX]
    cdef double vy = x[IX_VY]
    cdef double psidot = x[IX_PSIDOT]
    cdef double sabs_m = vp[VP_SABS_M]
    cdef double sabs_n = vp[VP_SABS_N]
    cdef double vwx, vwy, cd, sd, alpha
    cdef int i

    out[IY_S] = x[IX_S]
    out[IY_D] = x[IX_D]
    out[IY_PSI] = x[IX_PSI]
    out[IY_VX] = vx
    if vx < _STANDSTILL_V and -vx < _STANDSTILL_V:
        out[IY_BETA] = 0.0
    else:
        out[IY_BETA] = atan(vy / vx)
    out[IY_PSIDOT] = psidot
    for i in range(4):
        out[IY_DELTA + i] = x[IX_DELTA + i]
        out[IY_LAMBDA + i] = x[IX_LAMBDA + i]
        _wheel_kinematics(vx, vy, psidot, x[IX_DELTA + i], vp[VP_P + i],
                          vp[VP_Q + i], sabs_m, sabs_n,
                          &vwx, &vwy, &cd, &sd, &alpha)
        out[IY_ALPHA + i] = alpha
    out[IY_DDELTA_F] = x[IX_DELTA + 0] - x[IX_DELTA + 1]
    out[IY_DDELTA_R] = x[IX_DELTA + 2] - x[IX_DELTA + 3]


cdef int _plant_forces(double[:] xp, double[:] vp, double[:] tp,
                       bint static_loads, double* fz, double* lam,
                       double* alpha, double* fxw, double* fyw,
                       double* sums) except -1:
    """Tire forces and quasi-static wheel loads for the current plant state.

    Wheel loads and accelerations form an algebraic loop; a short
    fixed-point iteration starting from the static distribution resolves
    it deterministically.  Fills fz/lam/alpha/fxw/fyw (length-4 buffers)
    and writes (sum_fx, sum_fy, sum_mz) in the vehicle frame into sums.
    """
    cdef double vx = xp[IP_VX]
    cdef double vy = xp[IP_VY]
    cdef double psidot = xp[IP_PSIDOT]
    cdef double m = vp[VP_M]
    cdef double r_w = vp[VP_RW]
    cdef double h = vp[VP_HCG]
    cdef double wl = vp[VP_LF] + vp[VP_LR]
    cdef double sabs_m = vp[VP_SABS_M]
    cdef double sabs_n = vp[VP_SABS_N]
    cdef double sum_fx = 0.0
    cdef double sum_fy = 0.0
    cdef double sum_mz = 0.0
    cdef double delta, p, q, vwx, vwy, cd, sd, al, lm, fx, fy
    cdef double ax, ay, dlong, dlat_f, dlat_r, total, scale
    cdef bint clipped
    cdef int i, n_iter, it

    for i in range(4):
        fz[i] = vp[VP_FZ0 + i]
    n_iter = 1 if static_loads else _FZ_ITERS
    for it in range(n_iter):
        sum_fx = 0.0
        sum_fy = 0.0
        sum_mz = 0.0
        for i in range(4):
            delta = xp[IP_DELTA + i]
            p = vp[VP_P + i]
            q = vp[VP_Q + i]
            _wheel_kinematics(vx, vy, psidot, delta, p, q, sabs_m, sabs_n,
                              &vwx, &vwy, &cd, &sd, &al)
            lm = _slip_ratio(r_w * xp[IP_OMEGA + i], vwx, sabs_m, sabs_n)
            _tire(lm, al, fz[i], tp, &fx, &fy)
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
    sums[0] = sum_fx
    sums[1] = sum_fy
    sums[2] = sum_mz
    return 0


cdef int _plant_rhs(double[:] xp, double[:] torque, double[:] rate,
                    double[:] vp, double[:] tp, bint static_loads,
                    double[:] out) except -1:
    cdef double fz[4]
    cdef double lam[4]
    cdef double alpha[4]
    cdef double fxw[4]
    cdef double fyw[4]
    cdef double sums[3]
    cdef double vx, vy, psi, psidot, m, cp, sp
    cdef int i

    _plant_forces(xp, vp, tp, static_loads, fz, lam, alpha, fxw, fyw, sums)

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
    out[IP_VX] = vy * psidot + sums[0] / m
    out[IP_VY] = -vx * psidot + sums[1] / m
    out[IP_PSIDOT] = sums[2] / vp[VP_JZ]
    for i in range(4):
        out[IP_DELTA + i] = rate[i]
        out[IP_OMEGA + i] = (torque[i] - vp[VP_RW] * fxw[i]) / vp[VP_JW]
    return 0


def plant_rhs(double[:] xp, double[:] torque, double[:] rate,
              double[:] vp, double[:] tp, bint static_loads, double[:] out):
    """Time derivative of the plant state (global pose + wheel spin)."""
    _plant_rhs(xp, torque, rate, vp, tp, static_loads, out)


def plant_step(double[:] xp, double[:] torque, double[:] rate, double dt,
               double[:] vp, double[:] tp, bint static_loads,
               double[:] ang_lo, double[:] ang_hi, double[:] out):
    """One RK4 plant step with held inputs and steering-angle saturation."""
    cdef double k1[14]
    cdef double k2[14]
    cdef double k3[14]
    cdef double k4[14]
    cdef double tmp[14]
    cdef double[:] k1v = k1
    cdef double[:] k2v = k2
    cdef double[:] k3v = k3
    cdef double[:] k4v = k4
    cdef double[:] tmpv = tmp
    cdef int i

    _plant_rhs(xp, torque, rate, vp, tp, static_loads, k1v)
    for i in range(N_PLANT_STATES):
        tmp[i] = xp[i] + 0.5 * dt * k1[i]
    _plant_rhs(tmpv, torque, rate, vp, tp, static_loads, k2v)
    for i in range(N_PLANT_STATES):
        tmp[i] = xp[i] + 0.5 * dt * k2[i]
    _plant_rhs(tmpv, torque, rate, vp, tp, static_loads, k3v)
    for i in range(N_PLANT_STATES):
        tmp[i] = xp[i] + dt * k3[i]
    _plant_rhs(tmpv, torque, rate, vp, tp, static_loads, k4v)
    for i in range(N_PLANT_STATES):
        out[i] = xp[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    for i in range(4):
        if out[IP_DELTA + i] < ang_lo[i]:
            out[IP_DELTA + i] = ang_lo[i]
        elif out[IP_DELTA + i] > ang_hi[i]:
            out[IP_DELTA + i] = ang_hi[i]


def plant_wheel_outputs(double[:] xp, double[:] vp, double[:] tp,
                        bint static_loads, double[:] lam, double[:] alpha,
                        double[:] fxw, double[:] fyw, double[:] fz):
    """Per-wheel slip, slip angle, wheel-frame forces, and loads."""
    cdef double fzb[4]
    cdef double lamb[4]
    cdef double alphab[4]
    cdef double fxb[4]
    cdef double fyb[4]
    cdef double sums[3]
    cdef int i
    _plant_forces(xp, vp, tp, static_loads, fzb, lamb, alphab, fxb, fyb, sums)
    for i in range(4):
        lam[i] = lamb[i]
        alpha[i] = alphab[i]
        fxw[i] = fxb[i]
        fyw[i] = fyb[i]
        fz[i] = fzb[i]
