"""Compiled fixed-step integration kernels.

One velocity-Verlet kernel and one third-order Runge-Kutta kernel advance a
chunk of steps in place. Both consume the same packed parameter vectors so the
pure-Python force terms in forces.py stay the single source of truth for the
formulas; tests assert the two paths agree.

Step times are always formed as t0 + g*dt from the integer step index g, never
accumulated, so long runs carry no time drift and reruns are bit-identical.
Johnson noise comes from an in-kernel xoshiro256+ stream with explicit state,
which keeps runs reproducible and thread-safe without per-step Python calls.
"""

import math

import numpy as np
from numba import njit

# flags vector layout
(F_TRAP, F_COULOMB, F_DAMPING, F_NOISE, F_LORENTZ, F_PRZ, F_PZ3, F_SPLIT,
 F_SHUTTLE, F_RZAXIS, F_CIRCAXIS, F_NPART) = range(12)
N_FLAGS = 12

# params vector layout (accelerations, not forces; mass is folded in)
(P_KDC, P_KRF, P_OMEGA, P_PHI, P_CK, P_GAMMA, P_CNOISE, P_WCX, P_WCY, P_WCZ,
 P_RZC, P_RZW, P_Z3C, P_Z3W, P_SPQM, P_SPD0, P_SPDF, P_SPTAU, P_SPTCP,
 P_SPBCP, P_SPK, P_SHWZ2, P_SHD, P_SHTAU, P_MASS) = range(25)
N_PARAMS = 25

# evt vector layout (int64)
E_STATUS, E_CROSS_STEP, E_DIVERGED_STEP, E_WIN_INDEX, E_WIN_FILL = range(5)
N_EVT = 5

# aux vector layout (float64): initial axial-order sign, running max radial
# energy, then six partial window sums of squared mode velocities
A_SIGN0, A_MAX_ERAD = 0, 1
N_AUX = 8

STATUS_OK = 0
STATUS_DIVERGED = 1

POSITION_BOUND = 1.0   # m
SPEED_BOUND = 1.0e8    # m/s

# keep strict NaN/inf semantics (divergence detection relies on them)
FASTMATH = {"contract", "reassoc", "nsz", "arcp"}

_U11 = np.uint64(11)
_U17 = np.uint64(17)
_U45 = np.uint64(45)
_U64 = np.uint64(64)
_DNORM = 1.0 / 9007199254740992.0  # 2^-53
_ONE = np.uint64(1)

# exact phase recomputation interval for the tracked RF/drive oscillators
_RENORM_MASK = 65535


def seed_rng_state(seed: int) -> np.ndarray:
    """Expand an integer seed into xoshiro256+ state via splitmix64."""
    mask = (1 << 64) - 1
    s = seed & mask
    words = []
    for _ in range(4):
        s = (s + 0x9E3779B97F4A7C15) & mask
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        words.append(z ^ (z >> 31))
    if not any(words):
        words[0] = 1
    return np.array(words, dtype=np.uint64)


@njit(cache=True, inline="always")
def _next_u64(s):
    result = s[0] + s[3]
    t = s[1] << _U17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = (s[3] << _U45) | (s[3] >> (_U64 - _U45))
    return result


@njit(cache=True, inline="always")
def _next_normal(s, cache):
    """Standard normal via Box-Muller, one value per call with pair caching."""
    if cache[1] > 0.5:
        cache[1] = 0.0
        return cache[0]
    u1 = float((_next_u64(s) >> _U11) + _ONE) * _DNORM
    u2 = float(_next_u64(s) >> _U11) * _DNORM
    r = math.sqrt(-2.0 * math.log(u1))
    a = 2.0 * math.pi * u2
    cache[0] = r * math.sin(a)
    cache[1] = 1.0
    return r * math.cos(a)


@njit(cache=True, inline="always")
def _split_coeffs(t, d0, df, tau, tcp, bcp, kq):
    """Separation d(t), quartic beta(t), and alpha(t) from the equilibrium relation."""
    if t < 0.0:
        t = 0.0
    if t > tau:
        t = tau
    d = d0 + 0.5 * (df - d0) * (1.0 - math.cos(math.pi * t / tau))
    if t <= tcp:
        beta = 0.5 * bcp * (1.0 - math.cos(math.pi * t / tcp))
    else:
        beta = 0.5 * bcp * (1.0 - math.cos(math.pi * (tau - t) / (tau - tcp)))
    alpha = (kq - beta * d ** 5) / (2.0 * d ** 3)
    return alpha, beta


@njit(cache=True, inline="always")
def _shuttle_center(t, dist, tau):
    if t < 0.0:
        t = 0.0
    if t > tau:
        t = tau
    return 0.5 * dist * (1.0 - math.cos(math.pi * t / tau))


@njit(cache=True, inline="always", fastmath=FASTMATH)
def _accel_pos(fl, params, x1, y1, z1, x2, y2, z2, t, cos_rf, cos_prz, cos_pz3):
    """Acceleration from all position/time-dependent terms; returns a 6-tuple.

    cos_rf, cos_prz, cos_pz3 are cos(omega*t + phase) of the tracked
    oscillators, maintained by the caller so the hot loop avoids
    transcendental calls.
    """
    ax1 = 0.0
    ay1 = 0.0
    az1 = 0.0
    ax2 = 0.0
    ay2 = 0.0
    az2 = 0.0
    npart = fl[F_NPART]

    if fl[F_TRAP] == 1:
        kdc = params[P_KDC]
        osc = params[P_KRF] * cos_rf
        ax1 += (-osc + kdc) * x1
        ay1 += (osc + kdc) * y1
        az1 += -2.0 * kdc * z1
        if npart == 2:
            ax2 += (-osc + kdc) * x2
            ay2 += (osc + kdc) * y2
            az2 += -2.0 * kdc * z2

    if fl[F_COULOMB] == 1 and npart == 2:
        dx = x1 - x2
        dy = y1 - y2
        dz = z1 - z2
        r2 = dx * dx + dy * dy + dz * dz
        inv_r3 = params[P_CK] / (r2 * math.sqrt(r2))
        ax1 += inv_r3 * dx
        ay1 += inv_r3 * dy
        az1 += inv_r3 * dz
        ax2 -= inv_r3 * dx
        ay2 -= inv_r3 * dy
        az2 -= inv_r3 * dz

    if fl[F_PRZ] == 1:
        c = params[P_RZC] * cos_prz
        if fl[F_RZAXIS] == 0:
            ax1 += -c * z1
            az1 += -c * x1
            if npart == 2:
                ax2 += -c * z2
                az2 += -c * x2
        else:
            ay1 += -c * z1
            az1 += -c * y1
            if npart == 2:
                ay2 += -c * z2
                az2 += -c * y2

    if fl[F_PZ3] == 1:
        c = params[P_Z3C] * cos_pz3
        az1 += -c * z1 * z1
        if npart == 2:
            az2 += -c * z2 * z2

    if fl[F_SPLIT] == 1:
        alpha, beta = _split_coeffs(t, params[P_SPD0], params[P_SPDF],
                                    params[P_SPTAU], params[P_SPTCP],
                                    params[P_SPBCP], params[P_SPK])
        qm = params[P_SPQM]
        az1 += -qm * (2.0 * alpha * z1 + 4.0 * beta * z1 ** 3)
        ax1 += qm * alpha * x1
        ay1 += qm * alpha * y1
        if npart == 2:
            az2 += -qm * (2.0 * alpha * z2 + 4.0 * beta * z2 ** 3)
            ax2 += qm * alpha * x2
            ay2 += qm * alpha * y2

    if fl[F_SHUTTLE] == 1:
        zc = _shuttle_center(t, params[P_SHD], params[P_SHTAU])
        w2 = params[P_SHWZ2]
        az1 += -w2 * (z1 - zc)
        if npart == 2:
            az2 += -w2 * (z2 - zc)

    return ax1, ay1, az1, ax2, ay2, az2


@njit(cache=True, inline="always", fastmath=FASTMATH)
def _accel_vel(fl, params, vx1, vy1, vz1, vx2, vy2, vz2):
    """Acceleration from velocity-dependent terms (damping, Lorentz)."""
    ax1 = 0.0
    ay1 = 0.0
    az1 = 0.0
    ax2 = 0.0
    ay2 = 0.0
    az2 = 0.0
    npart = fl[F_NPART]

    if fl[F_DAMPING] == 1:
        g = params[P_GAMMA]
        ax_c = fl[F_CIRCAXIS]
        if ax_c == 0:
            vsum = vx1 + (vx2 if npart == 2 else 0.0)
            ax1 += -g * vsum
            ax2 += -g * vsum
        elif ax_c == 1:
            vsum = vy1 + (vy2 if npart == 2 else 0.0)
            ay1 += -g * vsum
            ay2 += -g * vsum
        else:
            vsum = vz1 + (vz2 if npart == 2 else 0.0)
            az1 += -g * vsum
            az2 += -g * vsum

    if fl[F_LORENTZ] == 1:
        cx = params[P_WCX]
        cy = params[P_WCY]
        cz = params[P_WCZ]
        ax1 += vy1 * cz - vz1 * cy
        ay1 += vz1 * cx - vx1 * cz
        az1 += vx1 * cy - vy1 * cx
        if npart == 2:
            ax2 += vy2 * cz - vz2 * cy
            ay2 += vz2 * cx - vx2 * cz
            az2 += vx2 * cy - vy2 * cx

    return ax1, ay1, az1, ax2, ay2, az2


@njit(cache=True, nogil=True, fastmath=FASTMATH)
def run_chunk(method, pos, vel, g0, n_chunk, n_total, dt, t0, fl, params,
              rng_state, rng_cache, rec_pos, rec_vel, stride, win_sums,
              win_size, evt, aux):
    """Advance n_chunk steps in place, recording and tracking events.

    method 0 is velocity Verlet (position/time forces only; the caller
    enforces that), method 1 is the Bogacki-Shampine third-order Runge-Kutta
    step. Johnson noise is held constant within a step (Euler-Maruyama
    convention).
    """
    npart = fl[F_NPART]
    has_noise = fl[F_NOISE] == 1
    circax = fl[F_CIRCAXIS]
    inv_sqrt_dt = 1.0 / math.sqrt(dt)
    cnoise = params[P_CNOISE] * inv_sqrt_dt
    m = params[P_MASS]
    kdc = params[P_KDC]
    two = npart == 2

    # tracked oscillator phases for the RF drive and parametric drives:
    # (cos, sin) pairs rotated by precomputed per-step increments, with an
    # exact recomputation every 2^16 steps to pin down roundoff drift
    w_rf = params[P_OMEGA]
    ph_rf = params[P_PHI]
    w_p1 = params[P_RZW]
    w_p2 = params[P_Z3W]
    t_base = t0 + g0 * dt
    c_rf = math.cos(w_rf * t_base + ph_rf)
    s_rf = math.sin(w_rf * t_base + ph_rf)
    c_p1 = math.cos(w_p1 * t_base)
    s_p1 = math.sin(w_p1 * t_base)
    c_p2 = math.cos(w_p2 * t_base)
    s_p2 = math.sin(w_p2 * t_base)
    cd_rf = math.cos(w_rf * dt)
    sd_rf = math.sin(w_rf * dt)
    cd_p1 = math.cos(w_p1 * dt)
    sd_p1 = math.sin(w_p1 * dt)
    cd_p2 = math.cos(w_p2 * dt)
    sd_p2 = math.sin(w_p2 * dt)
    ch_rf = math.cos(w_rf * dt * 0.5)
    sh_rf = math.sin(w_rf * dt * 0.5)
    ch_p1 = math.cos(w_p1 * dt * 0.5)
    sh_p1 = math.sin(w_p1 * dt * 0.5)
    ch_p2 = math.cos(w_p2 * dt * 0.5)
    sh_p2 = math.sin(w_p2 * dt * 0.5)
    cq_rf = math.cos(w_rf * dt * 0.75)
    sq_rf = math.sin(w_rf * dt * 0.75)
    cq_p1 = math.cos(w_p1 * dt * 0.75)
    sq_p1 = math.sin(w_p1 * dt * 0.75)
    cq_p2 = math.cos(w_p2 * dt * 0.75)
    sq_p2 = math.sin(w_p2 * dt * 0.75)

    x1 = pos[0, 0]
    y1 = pos[0, 1]
    z1 = pos[0, 2]
    x2 = pos[1, 0]
    y2 = pos[1, 1]
    z2 = pos[1, 2]
    vx1 = vel[0, 0]
    vy1 = vel[0, 1]
    vz1 = vel[0, 2]
    vx2 = vel[1, 0]
    vy2 = vel[1, 1]
    vz2 = vel[1, 2]

    sign0 = aux[A_SIGN0]
    max_erad = aux[A_MAX_ERAD]
    s0 = aux[2]
    s1 = aux[3]
    s2 = aux[4]
    s3 = aux[5]
    s4 = aux[6]
    s5 = aux[7]
    win_index = evt[E_WIN_INDEX]
    win_fill = evt[E_WIN_FILL]
    n_win = win_sums.shape[0]
    track_win = win_size > 0

    # countdown to the next recorded step instead of a per-step modulo
    rec_cd = (stride - (g0 % stride)) % stride

    # velocity Verlet carries the position-force acceleration across steps
    apx1, apy1, apz1, apx2, apy2, apz2 = _accel_pos(fl, params, x1, y1, z1,
                                                    x2, y2, z2, t_base,
                                                    c_rf, c_p1, c_p2)

    for i in range(n_chunk):
        g = g0 + i
        t = t0 + g * dt

        if rec_cd == 0:
            row = g // stride
            rec_pos[row, 0, 0] = x1
            rec_pos[row, 0, 1] = y1
            rec_pos[row, 0, 2] = z1
            rec_pos[row, 1, 0] = x2
            rec_pos[row, 1, 1] = y2
            rec_pos[row, 1, 2] = z2
            rec_vel[row, 0, 0] = vx1
            rec_vel[row, 0, 1] = vy1
            rec_vel[row, 0, 2] = vz1
            rec_vel[row, 1, 0] = vx2
            rec_vel[row, 1, 1] = vy2
            rec_vel[row, 1, 2] = vz2
            rec_cd = stride
        rec_cd -= 1

        # per-step noise acceleration, constant through the step
        anx = 0.0
        any_ = 0.0
        anz = 0.0
        if has_noise:
            an = cnoise * _next_normal(rng_state, rng_cache)
            if circax == 0:
                anx = an
            elif circax == 1:
                any_ = an
            else:
                anz = an

        if method == 0:
            half = 0.5 * dt
            hvx1 = vx1 + half * (apx1 + anx)
            hvy1 = vy1 + half * (apy1 + any_)
            hvz1 = vz1 + half * (apz1 + anz)
            hvx2 = vx2 + half * (apx2 + anx)
            hvy2 = vy2 + half * (apy2 + any_)
            hvz2 = vz2 + half * (apz2 + anz)
            x1 += dt * hvx1
            y1 += dt * hvy1
            z1 += dt * hvz1
            x2 += dt * hvx2
            y2 += dt * hvy2
            z2 += dt * hvz2
            # advance the tracked phases to t+dt
            if ((g + 1) & _RENORM_MASK) == 0:
                t_next = t0 + (g + 1) * dt
                c_rf = math.cos(w_rf * t_next + ph_rf)
                s_rf = math.sin(w_rf * t_next + ph_rf)
                c_p1 = math.cos(w_p1 * t_next)
                s_p1 = math.sin(w_p1 * t_next)
                c_p2 = math.cos(w_p2 * t_next)
                s_p2 = math.sin(w_p2 * t_next)
            else:
                cn = c_rf * cd_rf - s_rf * sd_rf
                s_rf = s_rf * cd_rf + c_rf * sd_rf
                c_rf = cn
                cn = c_p1 * cd_p1 - s_p1 * sd_p1
                s_p1 = s_p1 * cd_p1 + c_p1 * sd_p1
                c_p1 = cn
                cn = c_p2 * cd_p2 - s_p2 * sd_p2
                s_p2 = s_p2 * cd_p2 + c_p2 * sd_p2
                c_p2 = cn
            apx1, apy1, apz1, apx2, apy2, apz2 = _accel_pos(
                fl, params, x1, y1, z1, x2, y2, z2, t + dt, c_rf, c_p1, c_p2)
            vx1 = hvx1 + half * (apx1 + anx)
            vy1 = hvy1 + half * (apy1 + any_)
            vz1 = hvz1 + half * (apz1 + anz)
            vx2 = hvx2 + half * (apx2 + anx)
            vy2 = hvy2 + half * (apy2 + any_)
            vz2 = hvz2 + half * (apz2 + anz)
        else:
            # Bogacki-Shampine stages at t, t+dt/2, t+3dt/4
            p1x1, p1y1, p1z1, p1x2, p1y2, p1z2 = _accel_pos(
                fl, params, x1, y1, z1, x2, y2, z2, t, c_rf, c_p1, c_p2)
            v1x1, v1y1, v1z1, v1x2, v1y2, v1z2 = _accel_vel(
                fl, params, vx1, vy1, vz1, vx2, vy2, vz2)
            a1x1 = p1x1 + v1x1 + anx
            a1y1 = p1y1 + v1y1 + any_
            a1z1 = p1z1 + v1z1 + anz
            a1x2 = p1x2 + v1x2 + anx
            a1y2 = p1y2 + v1y2 + any_
            a1z2 = p1z2 + v1z2 + anz

            h2 = 0.5 * dt
            bx1 = x1 + h2 * vx1
            by1 = y1 + h2 * vy1
            bz1 = z1 + h2 * vz1
            bx2 = x2 + h2 * vx2
            by2 = y2 + h2 * vy2
            bz2 = z2 + h2 * vz2
            bvx1 = vx1 + h2 * a1x1
            bvy1 = vy1 + h2 * a1y1
            bvz1 = vz1 + h2 * a1z1
            bvx2 = vx2 + h2 * a1x2
            bvy2 = vy2 + h2 * a1y2
            bvz2 = vz2 + h2 * a1z2

            p2x1, p2y1, p2z1, p2x2, p2y2, p2z2 = _accel_pos(
                fl, params, bx1, by1, bz1, bx2, by2, bz2, t + h2,
                c_rf * ch_rf - s_rf * sh_rf,
                c_p1 * ch_p1 - s_p1 * sh_p1,
                c_p2 * ch_p2 - s_p2 * sh_p2)
            v2x1, v2y1, v2z1, v2x2, v2y2, v2z2 = _accel_vel(
                fl, params, bvx1, bvy1, bvz1, bvx2, bvy2, bvz2)
            a2x1 = p2x1 + v2x1 + anx
            a2y1 = p2y1 + v2y1 + any_
            a2z1 = p2z1 + v2z1 + anz
            a2x2 = p2x2 + v2x2 + anx
            a2y2 = p2y2 + v2y2 + any_
            a2z2 = p2z2 + v2z2 + anz

            h3 = 0.75 * dt
            cx1 = x1 + h3 * bvx1
            cy1 = y1 + h3 * bvy1
            cz1 = z1 + h3 * bvz1
            cx2 = x2 + h3 * bvx2
            cy2 = y2 + h3 * bvy2
            cz2 = z2 + h3 * bvz2
            cvx1 = vx1 + h3 * a2x1
            cvy1 = vy1 + h3 * a2y1
            cvz1 = vz1 + h3 * a2z1
            cvx2 = vx2 + h3 * a2x2
            cvy2 = vy2 + h3 * a2y2
            cvz2 = vz2 + h3 * a2z2

            p3x1, p3y1, p3z1, p3x2, p3y2, p3z2 = _accel_pos(
                fl, params, cx1, cy1, cz1, cx2, cy2, cz2, t + h3,
                c_rf * cq_rf - s_rf * sq_rf,
                c_p1 * cq_p1 - s_p1 * sq_p1,
                c_p2 * cq_p2 - s_p2 * sq_p2)
            v3x1, v3y1, v3z1, v3x2, v3y2, v3z2 = _accel_vel(
                fl, params, cvx1, cvy1, cvz1, cvx2, cvy2, cvz2)
            a3x1 = p3x1 + v3x1 + anx
            a3y1 = p3y1 + v3y1 + any_
            a3z1 = p3z1 + v3z1 + anz
            a3x2 = p3x2 + v3x2 + anx
            a3y2 = p3y2 + v3y2 + any_
            a3z2 = p3z2 + v3z2 + anz

            w = dt / 9.0
            x1 += w * (2.0 * vx1 + 3.0 * bvx1 + 4.0 * cvx1)
            y1 += w * (2.0 * vy1 + 3.0 * bvy1 + 4.0 * cvy1)
            z1 += w * (2.0 * vz1 + 3.0 * bvz1 + 4.0 * cvz1)
            x2 += w * (2.0 * vx2 + 3.0 * bvx2 + 4.0 * cvx2)
            y2 += w * (2.0 * vy2 + 3.0 * bvy2 + 4.0 * cvy2)
            z2 += w * (2.0 * vz2 + 3.0 * bvz2 + 4.0 * cvz2)
            vx1 += w * (2.0 * a1x1 + 3.0 * a2x1 + 4.0 * a3x1)
            vy1 += w * (2.0 * a1y1 + 3.0 * a2y1 + 4.0 * a3y1)
            vz1 += w * (2.0 * a1z1 + 3.0 * a2z1 + 4.0 * a3z1)
            vx2 += w * (2.0 * a1x2 + 3.0 * a2x2 + 4.0 * a3x2)
            vy2 += w * (2.0 * a1y2 + 3.0 * a2y2 + 4.0 * a3y2)
            vz2 += w * (2.0 * a1z2 + 3.0 * a2z2 + 4.0 * a3z2)
            # advance the tracked phases to t+dt
            if ((g + 1) & _RENORM_MASK) == 0:
                t_next = t0 + (g + 1) * dt
                c_rf = math.cos(w_rf * t_next + ph_rf)
                s_rf = math.sin(w_rf * t_next + ph_rf)
                c_p1 = math.cos(w_p1 * t_next)
                s_p1 = math.sin(w_p1 * t_next)
                c_p2 = math.cos(w_p2 * t_next)
                s_p2 = math.sin(w_p2 * t_next)
            else:
                cn = c_rf * cd_rf - s_rf * sd_rf
                s_rf = s_rf * cd_rf + c_rf * sd_rf
                c_rf = cn
                cn = c_p1 * cd_p1 - s_p1 * sd_p1
                s_p1 = s_p1 * cd_p1 + c_p1 * sd_p1
                c_p1 = cn
                cn = c_p2 * cd_p2 - s_p2 * sd_p2
                s_p2 = s_p2 * cd_p2 + c_p2 * sd_p2
                c_p2 = cn

        # post-step bookkeeping
        g1 = g + 1

        if two and evt[E_CROSS_STEP] < 0:
            if (z1 - z2) * sign0 < 0.0:
                evt[E_CROSS_STEP] = g1

        erad = 0.5 * m * (vx1 * vx1 + vy1 * vy1) - 0.5 * m * kdc * (x1 * x1 + y1 * y1)
        if erad > max_erad:
            max_erad = erad
        if two:
            erad2 = 0.5 * m * (vx2 * vx2 + vy2 * vy2) - 0.5 * m * kdc * (x2 * x2 + y2 * y2)
            if erad2 > max_erad:
                max_erad = erad2

        if track_win and win_index < n_win:
            if two:
                wxc = 0.5 * (vx1 + vx2)
                wyc = 0.5 * (vy1 + vy2)
                wzc = 0.5 * (vz1 + vz2)
                s0 += wxc * wxc
                s1 += (vx1 - vx2) * (vx1 - vx2)
                s2 += wyc * wyc
                s3 += (vy1 - vy2) * (vy1 - vy2)
                s4 += wzc * wzc
                s5 += (vz1 - vz2) * (vz1 - vz2)
            else:
                s0 += vx1 * vx1
                s2 += vy1 * vy1
                s4 += vz1 * vz1
            win_fill += 1
            if win_fill == win_size:
                inv = 1.0 / win_size
                win_sums[win_index, 0] = s0 * inv
                win_sums[win_index, 1] = s1 * inv
                win_sums[win_index, 2] = s2 * inv
                win_sums[win_index, 3] = s3 * inv
                win_sums[win_index, 4] = s4 * inv
                win_sums[win_index, 5] = s5 * inv
                win_index += 1
                win_fill = 0
                s0 = 0.0
                s1 = 0.0
                s2 = 0.0
                s3 = 0.0
                s4 = 0.0
                s5 = 0.0

        bad = (not math.isfinite(x1 + y1 + z1 + vx1 + vy1 + vz1)) or \
            abs(x1) > POSITION_BOUND or abs(y1) > POSITION_BOUND or \
            abs(z1) > POSITION_BOUND or abs(vx1) > SPEED_BOUND or \
            abs(vy1) > SPEED_BOUND or abs(vz1) > SPEED_BOUND
        if two and not bad:
            bad = (not math.isfinite(x2 + y2 + z2 + vx2 + vy2 + vz2)) or \
                abs(x2) > POSITION_BOUND or abs(y2) > POSITION_BOUND or \
                abs(z2) > POSITION_BOUND or abs(vx2) > SPEED_BOUND or \
                abs(vy2) > SPEED_BOUND or abs(vz2) > SPEED_BOUND
        if bad:
            evt[E_STATUS] = STATUS_DIVERGED
            evt[E_DIVERGED_STEP] = g1
            break

    pos[0, 0] = x1
    pos[0, 1] = y1
    pos[0, 2] = z1
    pos[1, 0] = x2
    pos[1, 1] = y2
    pos[1, 2] = z2
    vel[0, 0] = vx1
    vel[0, 1] = vy1
    vel[0, 2] = vz1
    vel[1, 0] = vx2
    vel[1, 1] = vy2
    vel[1, 2] = vz2
    aux[A_MAX_ERAD] = max_erad
    aux[2] = s0
    aux[3] = s1
    aux[4] = s2
    aux[5] = s3
    aux[6] = s4
    aux[7] = s5
    evt[E_WIN_INDEX] = win_index
    evt[E_WIN_FILL] = win_fill


@njit(cache=True, nogil=True)
def accel_debug(pos, vel, t, fl, params, noise_sample, dt):
    """Total acceleration as the kernels see it; consistency oracle for tests."""
    cos_rf = math.cos(params[P_OMEGA] * t + params[P_PHI])
    cos_p1 = math.cos(params[P_RZW] * t)
    cos_p2 = math.cos(params[P_Z3W] * t)
    ax1, ay1, az1, ax2, ay2, az2 = _accel_pos(
        fl, params, pos[0, 0], pos[0, 1], pos[0, 2],
        pos[1, 0], pos[1, 1], pos[1, 2], t, cos_rf, cos_p1, cos_p2)
    bx1, by1, bz1, bx2, by2, bz2 = _accel_vel(
        fl, params, vel[0, 0], vel[0, 1], vel[0, 2],
        vel[1, 0], vel[1, 1], vel[1, 2])
    out = np.empty((2, 3))
    out[0, 0] = ax1 + bx1
    out[0, 1] = ay1 + by1
    out[0, 2] = az1 + bz1
    out[1, 0] = ax2 + bx2
    out[1, 1] = ay2 + by2
    out[1, 2] = az2 + bz2
    if fl[F_NOISE] == 1:
        an = params[P_CNOISE] * noise_sample / math.sqrt(dt)
        out[0, fl[F_CIRCAXIS]] += an
        out[1, fl[F_CIRCAXIS]] += an
    return out


@njit(cache=True, nogil=True)
def draw_normals(rng_state, rng_cache, n):
    """Expose the kernel noise stream for statistical tests."""
    out = np.empty(n)
    for i in range(n):
        out[i] = _next_normal(rng_state, rng_cache)
    return out
