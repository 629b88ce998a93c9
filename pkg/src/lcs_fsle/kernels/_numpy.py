"""Pure-numpy kernels, vectorised across initial points instead of looping per point.

Signatures and return conventions mirror :mod:`._numba`.
"""

import numpy as np

from .. import _formulas as fm


def field(kind, p, x1, x2, t):
    if kind == fm.LINEAR_SADDLE:
        return fm.linear_saddle(x1, x2, p[0])
    if kind == fm.RIGID_ROTATION:
        return fm.rigid_rotation(x1, x2, p[0])
    if kind == fm.TRANSIENT_SADDLE:
        return fm.transient_saddle(x1, x2, fm.transition_array(t, p[0], p[1]))
    if kind == fm.TRANSITION_SADDLE:
        return fm.transition_saddle(x1, x2, fm.transition_array(t, p[0], p[1]))
    if kind == fm.DOUBLE_GYRE:
        return fm.double_gyre(x1, x2, p[0])
    return fm.moving_separation(x1, x2, t, p[0], p[1], p[2], p[3], p[4])


def _aug_rhs(kind, p, y, t):
    u1, u2, j11, j12, j21, j22 = field(kind, p, y[0], y[1], t)
    return (u1, u2,
            j11 * y[2] + j12 * y[4], j11 * y[3] + j12 * y[5],
            j21 * y[2] + j22 * y[4], j21 * y[3] + j22 * y[5])


def aug_step(kind, p, y, t, h):
    """One RK4 step of the 6-component (position, DF) system; ``y`` is a tuple of arrays."""
    hh = 0.5 * h
    a = _aug_rhs(kind, p, y, t)
    b = _aug_rhs(kind, p, tuple(yi + hh * ai for yi, ai in zip(y, a)), t + hh)
    c = _aug_rhs(kind, p, tuple(yi + hh * bi for yi, bi in zip(y, b)), t + hh)
    d = _aug_rhs(kind, p, tuple(yi + h * ci for yi, ci in zip(y, c)), t + h)
    w = h / 6.0
    return tuple(yi + w * (ai + 2.0 * bi + 2.0 * ci + di)
                 for yi, ai, bi, ci, di in zip(y, a, b, c, d))


def pos_step(kind, p, x1, x2, t, h):
    hh = 0.5 * h
    a1, a2 = field(kind, p, x1, x2, t)[:2]
    b1, b2 = field(kind, p, x1 + hh * a1, x2 + hh * a2, t + hh)[:2]
    c1, c2 = field(kind, p, x1 + hh * b1, x2 + hh * b2, t + hh)[:2]
    d1, d2 = field(kind, p, x1 + h * c1, x2 + h * c2, t + h)[:2]
    w = h / 6.0
    return (x1 + w * (a1 + 2.0 * b1 + 2.0 * c1 + d1),
            x2 + w * (a2 + 2.0 * b2 + 2.0 * c2 + d2))


def lam_max(f11, f12, f21, f22):
    c11 = f11 * f11 + f21 * f21
    c12 = f11 * f12 + f21 * f22
    c22 = f12 * f12 + f22 * f22
    return 0.5 * (c11 + c22) + np.hypot(0.5 * (c11 - c22), c12)


def strain_margin(kind, p, y, t):
    f11, f12, f21, f22 = y[2], y[3], y[4], y[5]
    c11 = f11 * f11 + f21 * f21
    c12 = f11 * f12 + f21 * f22
    c22 = f12 * f12 + f22 * f22
    lam = 0.5 * (c11 + c22) + np.hypot(0.5 * (c11 - c22), c12)
    use_a = (lam - c22) ** 2 + c12 ** 2 >= c12 ** 2 + (lam - c11) ** 2
    e1 = np.where(use_a, lam - c22, c12)
    e2 = np.where(use_a, c12, lam - c11)
    nrm = np.hypot(e1, e2)
    zero = nrm == 0.0
    nrm = np.where(zero, 1.0, nrm)
    e1 = np.where(zero, 1.0, e1 / nrm)
    e2 = np.where(zero, 0.0, e2 / nrm)
    w1 = f11 * e1 + f12 * e2
    w2 = f21 * e1 + f22 * e2
    _, _, j11, j12, j21, j22 = field(kind, p, y[0], y[1], t)
    s12 = 0.5 * (j12 + j21)
    return 2.0 * (w1 * (j11 * w1 + s12 * w2) + w2 * (s12 * w1 + j22 * w2))


def _init_aug(x0):
    n = x0.shape[0]
    return (x0[:, 0].astype(float), x0[:, 1].astype(float),
            np.ones(n), np.zeros(n), np.zeros(n), np.ones(n))


def aug_flow(kind, p, x0, times):
    y = _init_aug(np.asarray(x0, dtype=float))
    for k in range(times.shape[0] - 1):
        y = aug_step(kind, p, y, times[k], times[k + 1] - times[k])
    return np.stack(y, axis=1)


def aug_record(kind, p, x0, times):
    y = _init_aug(np.asarray(x0, dtype=float).reshape(1, 2))
    out = np.empty((times.shape[0], 6))
    out[0] = np.concatenate(y)
    for k in range(times.shape[0] - 1):
        y = aug_step(kind, p, y, times[k], times[k + 1] - times[k])
        out[k + 1] = np.concatenate(y)
    return out


def _bisect_aug(kind, p, y, tk, h, r2, tol_t):
    lo = np.zeros_like(h)
    hi = h.copy()
    best = aug_step(kind, p, y, tk, hi)
    while np.any(hi - lo > tol_t):
        mid = 0.5 * (lo + hi)
        m = aug_step(kind, p, y, tk, mid)
        up = lam_max(m[2], m[3], m[4], m[5]) >= r2
        active = hi - lo > tol_t
        take = up & active
        hi = np.where(take, mid, hi)
        lo = np.where(~up & active, mid, lo)
        best = tuple(np.where(take, mi, bi) for mi, bi in zip(m, best))
    return tk + hi, best


def isle_scan(kind, p, x0, times, r2, bisect, tol_t):
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    tau = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    margin = np.full(n, np.nan)
    npeaks = np.zeros(n, dtype=np.int64)
    state = np.full((n, 6), np.nan)

    y = _init_aug(x0)
    idx = np.arange(n)
    lam_prev = lam_max(y[2], y[3], y[4], y[5])
    lam_prev2 = np.full(n, np.inf)
    hit0 = lam_prev >= r2
    if np.any(hit0):
        tau[hit0] = 0.0
        status[hit0] = 1
        margin[hit0] = strain_margin(kind, p, tuple(c[hit0] for c in y), times[0])
        state[hit0] = np.stack(y, axis=1)[hit0]
        keep = ~hit0
        idx, y = idx[keep], tuple(c[keep] for c in y)
        lam_prev, lam_prev2 = lam_prev[keep], lam_prev2[keep]

    # crossings are collected per step, refined together afterwards
    cross_idx, cross_y, cross_t, cross_h, cross_z = [], [], [], [], []
    for k in range(times.shape[0] - 1):
        if idx.size == 0:
            break
        tk = times[k]
        h = times[k + 1] - tk
        z = aug_step(kind, p, y, tk, h)
        lam = lam_max(z[2], z[3], z[4], z[5])
        bad = ~(np.isfinite(lam) & np.isfinite(z[0]) & np.isfinite(z[1]))
        npeaks[idx] += ((lam_prev > lam_prev2) & (lam_prev >= lam) & ~bad).astype(np.int64)
        hit = (lam >= r2) & ~bad
        if np.any(bad):
            status[idx[bad]] = 3
        if np.any(hit):
            cross_idx.append(idx[hit])
            cross_y.append(tuple(c[hit] for c in y))
            cross_t.append(np.full(int(hit.sum()), tk))
            cross_h.append(np.full(int(hit.sum()), h))
            cross_z.append(tuple(c[hit] for c in z))
        keep = ~(hit | bad)
        idx = idx[keep]
        y = tuple(c[keep] for c in z)
        lam_prev2 = lam_prev[keep]
        lam_prev = lam[keep]

    if cross_idx:
        ci = np.concatenate(cross_idx)
        cy = tuple(np.concatenate([c[j] for c in cross_y]) for j in range(6))
        ct = np.concatenate(cross_t)
        ch = np.concatenate(cross_h)
        if bisect:
            tc, zc = _bisect_aug(kind, p, cy, ct, ch, r2, tol_t)
        else:
            tc = ct + ch
            zc = tuple(np.concatenate([c[j] for c in cross_z]) for j in range(6))
        tau[ci] = tc - times[0]
        status[ci] = 1
        margin[ci] = strain_margin(kind, p, zc, tc)
        state[ci] = np.stack(zc, axis=1)
    return tau, status, margin, npeaks, state


def _ring_dist2(qx, qy):
    return np.max((qx[:, 1:] - qx[:, :1]) ** 2 + (qy[:, 1:] - qy[:, :1]) ** 2, axis=1)


def fsle_scan(kind, p, x0, times, delta0, n_probes, r, bisect, tol_t):
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    thr = (r * delta0) ** 2
    tau = np.full(n, np.nan)
    status = np.zeros(n, dtype=np.int8)
    th = 2.0 * np.pi * np.arange(n_probes) / n_probes
    px = np.concatenate([x0[:, :1], x0[:, :1] + delta0 * np.cos(th)[None, :]], axis=1)
    py = np.concatenate([x0[:, 1:], x0[:, 1:] + delta0 * np.sin(th)[None, :]], axis=1)
    idx = np.arange(n)
    for k in range(times.shape[0] - 1):
        if idx.size == 0:
            break
        tk = times[k]
        h = times[k + 1] - tk
        qx, qy = pos_step(kind, p, px, py, tk, h)
        d2 = _ring_dist2(qx, qy)
        bad = ~(np.isfinite(d2) & np.isfinite(qx[:, 0]) & np.isfinite(qy[:, 0]))
        hit = (d2 >= thr) & ~bad
        if np.any(bad):
            status[idx[bad]] = 3
        if np.any(hit):
            hi = np.full(int(hit.sum()), h)
            if bisect:
                lo = np.zeros_like(hi)
                sx, sy = px[hit], py[hit]
                while np.any(hi - lo > tol_t):
                    mid = 0.5 * (lo + hi)
                    ax, ay = pos_step(kind, p, sx, sy, tk, mid[:, None])
                    up = _ring_dist2(ax, ay) >= thr
                    active = hi - lo > tol_t
                    hi = np.where(up & active, mid, hi)
                    lo = np.where(~up & active, mid, lo)
            tau[idx[hit]] = tk + hi - times[0]
            status[idx[hit]] = 1
        keep = ~(hit | bad)
        idx = idx[keep]
        px, py = qx[keep], qy[keep]
    return tau, status
