"""numba kernels: one trajectory (or probe ring) per grid point, ``prange`` over points."""

import math

import numba
import numpy as np
from numba import njit, prange

# skip TBB: old system TBB builds only produce a warning before falling back
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

from .. import _formulas as fm

_JIT = dict(cache=True, nogil=True)

_linear_saddle = njit(**_JIT)(fm.linear_saddle)
_rigid_rotation = njit(**_JIT)(fm.rigid_rotation)
_transient_saddle = njit(**_JIT)(fm.transient_saddle)
_transition_saddle = njit(**_JIT)(fm.transition_saddle)
_double_gyre = njit(**_JIT)(fm.double_gyre)
_moving_separation = njit(**_JIT)(fm.moving_separation)
_transition = njit(**_JIT)(fm.transition_scalar)


@njit(**_JIT)
def field(kind, p, x1, x2, t):
    if kind == 0:
        return _linear_saddle(x1, x2, p[0])
    elif kind == 1:
        return _rigid_rotation(x1, x2, p[0])
    elif kind == 2:
        return _transient_saddle(x1, x2, _transition(t, p[0], p[1]))
    elif kind == 3:
        return _transition_saddle(x1, x2, _transition(t, p[0], p[1]))
    elif kind == 4:
        return _double_gyre(x1, x2, p[0])
    return _moving_separation(x1, x2, t, p[0], p[1], p[2], p[3], p[4])


@njit(**_JIT)
def _aug_rhs(kind, p, x1, x2, f11, f12, f21, f22, t):
    u1, u2, j11, j12, j21, j22 = field(kind, p, x1, x2, t)
    return (u1, u2,
            j11 * f11 + j12 * f21, j11 * f12 + j12 * f22,
            j21 * f11 + j22 * f21, j21 * f12 + j22 * f22)


@njit(**_JIT)
def aug_step(kind, p, y0, y1, y2, y3, y4, y5, t, h):
    a0, a1, a2, a3, a4, a5 = _aug_rhs(kind, p, y0, y1, y2, y3, y4, y5, t)
    hh = 0.5 * h
    b0, b1, b2, b3, b4, b5 = _aug_rhs(kind, p, y0 + hh * a0, y1 + hh * a1, y2 + hh * a2,
                                      y3 + hh * a3, y4 + hh * a4, y5 + hh * a5, t + hh)
    c0, c1, c2, c3, c4, c5 = _aug_rhs(kind, p, y0 + hh * b0, y1 + hh * b1, y2 + hh * b2,
                                      y3 + hh * b3, y4 + hh * b4, y5 + hh * b5, t + hh)
    d0, d1, d2, d3, d4, d5 = _aug_rhs(kind, p, y0 + h * c0, y1 + h * c1, y2 + h * c2,
                                      y3 + h * c3, y4 + h * c4, y5 + h * c5, t + h)
    w = h / 6.0
    return (y0 + w * (a0 + 2.0 * b0 + 2.0 * c0 + d0),
            y1 + w * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
            y2 + w * (a2 + 2.0 * b2 + 2.0 * c2 + d2),
            y3 + w * (a3 + 2.0 * b3 + 2.0 * c3 + d3),
            y4 + w * (a4 + 2.0 * b4 + 2.0 * c4 + d4),
            y5 + w * (a5 + 2.0 * b5 + 2.0 * c5 + d5))


@njit(**_JIT)
def pos_step(kind, p, x1, x2, t, h):
    hh = 0.5 * h
    a1, a2, _, _, _, _ = field(kind, p, x1, x2, t)
    b1, b2, _, _, _, _ = field(kind, p, x1 + hh * a1, x2 + hh * a2, t + hh)
    c1, c2, _, _, _, _ = field(kind, p, x1 + hh * b1, x2 + hh * b2, t + hh)
    d1, d2, _, _, _, _ = field(kind, p, x1 + h * c1, x2 + h * c2, t + h)
    w = h / 6.0
    return (x1 + w * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
            x2 + w * (a2 + 2.0 * b2 + 2.0 * c2 + d2))


@njit(**_JIT)
def lam_max(f11, f12, f21, f22):
    c11 = f11 * f11 + f21 * f21
    c12 = f11 * f12 + f21 * f22
    c22 = f12 * f12 + f22 * f22
    return 0.5 * (c11 + c22) + math.hypot(0.5 * (c11 - c22), c12)


@njit(**_JIT)
def strain_margin(kind, p, y0, y1, f11, f12, f21, f22, t):
    """2 <DF e_max, S DF e_max>, i.e. the time derivative of lambda_max(C)."""
    c11 = f11 * f11 + f21 * f21
    c12 = f11 * f12 + f21 * f22
    c22 = f12 * f12 + f22 * f22
    lam = 0.5 * (c11 + c22) + math.hypot(0.5 * (c11 - c22), c12)
    v1a = lam - c22
    v2a = c12
    v1b = c12
    v2b = lam - c11
    if v1a * v1a + v2a * v2a >= v1b * v1b + v2b * v2b:
        e1, e2 = v1a, v2a
    else:
        e1, e2 = v1b, v2b
    nrm = math.hypot(e1, e2)
    if nrm == 0.0:
        e1, e2 = 1.0, 0.0
    else:
        e1 /= nrm
        e2 /= nrm
    w1 = f11 * e1 + f12 * e2
    w2 = f21 * e1 + f22 * e2
    _, _, j11, j12, j21, j22 = field(kind, p, y0, y1, t)
    s12 = 0.5 * (j12 + j21)
    return 2.0 * (w1 * (j11 * w1 + s12 * w2) + w2 * (s12 * w1 + j22 * w2))


@njit(cache=True, nogil=True, parallel=True)
def aug_flow(kind, p, x0, times):
    n = x0.shape[0]
    out = np.empty((n, 6))
    nt = times.shape[0]
    for i in prange(n):
        y0, y1, y2, y3, y4, y5 = x0[i, 0], x0[i, 1], 1.0, 0.0, 0.0, 1.0
        for k in range(nt - 1):
            y0, y1, y2, y3, y4, y5 = aug_step(kind, p, y0, y1, y2, y3, y4, y5,
                                              times[k], times[k + 1] - times[k])
        out[i, 0] = y0
        out[i, 1] = y1
        out[i, 2] = y2
        out[i, 3] = y3
        out[i, 4] = y4
        out[i, 5] = y5
    return out


@njit(**_JIT)
def aug_record(kind, p, x0, times):
    nt = times.shape[0]
    out = np.empty((nt, 6))
    y0, y1, y2, y3, y4, y5 = x0[0], x0[1], 1.0, 0.0, 0.0, 1.0
    out[0, 0] = y0
    out[0, 1] = y1
    out[0, 2] = y2
    out[0, 3] = y3
    out[0, 4] = y4
    out[0, 5] = y5
    for k in range(nt - 1):
        y0, y1, y2, y3, y4, y5 = aug_step(kind, p, y0, y1, y2, y3, y4, y5,
                                          times[k], times[k + 1] - times[k])
        out[k + 1, 0] = y0
        out[k + 1, 1] = y1
        out[k + 1, 2] = y2
        out[k + 1, 3] = y3
        out[k + 1, 4] = y4
        out[k + 1, 5] = y5
    return out


@njit(cache=True, nogil=True, parallel=True)
def isle_scan(kind, p, x0, times, r2, bisect, tol_t):
    """First time lambda_max(C) reaches ``r2`` for each initial point.

    Returns tau (from times[0]), status (0 not crossed, 1 crossed, 3 non-finite),
    margin at the crossing, number of sampled lambda_max peaks before it, and
    the augmented state at the crossing.
    """
    n = x0.shape[0]
    nt = times.shape[0]
    tau = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    margin = np.full(n, np.nan)
    npeaks = np.zeros(n, dtype=np.int64)
    state = np.full((n, 6), np.nan)
    for i in prange(n):
        y0, y1, y2, y3, y4, y5 = x0[i, 0], x0[i, 1], 1.0, 0.0, 0.0, 1.0
        lam_prev2 = np.inf
        lam_prev = lam_max(y2, y3, y4, y5)
        peaks = 0
        hit = -1
        if lam_prev >= r2:
            hit = 0
        k = 0
        while hit < 0 and k < nt - 1:
            z0, z1, z2, z3, z4, z5 = aug_step(kind, p, y0, y1, y2, y3, y4, y5,
                                              times[k], times[k + 1] - times[k])
            lam = lam_max(z2, z3, z4, z5)
            if not math.isfinite(lam) or not math.isfinite(z0) or not math.isfinite(z1):
                status[i] = 3
                break
            if lam_prev > lam_prev2 and lam_prev >= lam:
                peaks += 1
            if lam >= r2:
                hit = k + 1
                if bisect and hit > 0:
                    lo = 0.0
                    hi = times[k + 1] - times[k]
                    w0, w1, w2, w3, w4, w5 = z0, z1, z2, z3, z4, z5
                    while hi - lo > tol_t:
                        mid = 0.5 * (lo + hi)
                        m0, m1, m2, m3, m4, m5 = aug_step(kind, p, y0, y1, y2, y3, y4, y5,
                                                          times[k], mid)
                        if lam_max(m2, m3, m4, m5) >= r2:
                            hi = mid
                            w0, w1, w2, w3, w4, w5 = m0, m1, m2, m3, m4, m5
                        else:
                            lo = mid
                    tc = times[k] + hi
                    z0, z1, z2, z3, z4, z5 = w0, w1, w2, w3, w4, w5
                else:
                    tc = times[k + 1]
                tau[i] = tc - times[0]
                status[i] = 1
                margin[i] = strain_margin(kind, p, z0, z1, z2, z3, z4, z5, tc)
                state[i, 0] = z0
                state[i, 1] = z1
                state[i, 2] = z2
                state[i, 3] = z3
                state[i, 4] = z4
                state[i, 5] = z5
                break
            lam_prev2 = lam_prev
            lam_prev = lam
            y0, y1, y2, y3, y4, y5 = z0, z1, z2, z3, z4, z5
            k += 1
        if hit == 0:
            tau[i] = 0.0
            status[i] = 1
            margin[i] = strain_margin(kind, p, y0, y1, y2, y3, y4, y5, times[0])
            state[i, 0] = y0
            state[i, 1] = y1
            state[i, 2] = y2
            state[i, 3] = y3
            state[i, 4] = y4
            state[i, 5] = y5
        npeaks[i] = peaks
    return tau, status, margin, npeaks, state


@njit(cache=True, nogil=True, parallel=True)
def fsle_scan(kind, p, x0, times, delta0, n_probes, r, bisect, tol_t):
    """First time any probe on the delta0-ring reaches distance r*delta0."""
    n = x0.shape[0]
    nt = times.shape[0]
    thr = (r * delta0) ** 2
    tau = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    m = n_probes + 1
    for i in prange(n):
        px = np.empty(m)
        py = np.empty(m)
        qx = np.empty(m)
        qy = np.empty(m)
        px[0] = x0[i, 0]
        py[0] = x0[i, 1]
        for j in range(n_probes):
            th = 2.0 * math.pi * j / n_probes
            px[j + 1] = x0[i, 0] + delta0 * math.cos(th)
            py[j + 1] = x0[i, 1] + delta0 * math.sin(th)
        k = 0
        while k < nt - 1:
            t = times[k]
            h = times[k + 1] - t
            for j in range(m):
                qx[j], qy[j] = pos_step(kind, p, px[j], py[j], t, h)
            d2 = 0.0
            for j in range(1, m):
                dx = qx[j] - qx[0]
                dy = qy[j] - qy[0]
                dd = dx * dx + dy * dy
                if dd > d2:
                    d2 = dd
            if not math.isfinite(d2) or not math.isfinite(qx[0]) or not math.isfinite(qy[0]):
                status[i] = 3
                break
            if d2 >= thr:
                if bisect:
                    lo = 0.0
                    hi = h
                    while hi - lo > tol_t:
                        mid = 0.5 * (lo + hi)
                        cx, cy = pos_step(kind, p, px[0], py[0], t, mid)
                        dm = 0.0
                        for j in range(1, m):
                            ax, ay = pos_step(kind, p, px[j], py[j], t, mid)
                            dd = (ax - cx) ** 2 + (ay - cy) ** 2
                            if dd > dm:
                                dm = dd
                        if dm >= thr:
                            hi = mid
                        else:
                            lo = mid
                    tau[i] = t + hi - times[0]
                else:
                    tau[i] = times[k + 1] - times[0]
                status[i] = 1
                break
            for j in range(m):
                px[j] = qx[j]
                py[j] = qy[j]
            k += 1
    return tau, status
