"""Elementwise velocity / velocity-gradient formulas for the analytic flows.

Every function here is plain arithmetic on ``x1, x2`` (floats or arrays) so the
same source is compiled by numba for the per-point kernels and broadcast by
numpy in the vectorised fallback.  Each returns
``(u1, u2, j11, j12, j21, j22)`` with ``j_ik = d u_i / d x_k``.

The time dependence of the saddle flows enters only through the transition
value ``s`` which the caller evaluates (scalar and array versions differ).
"""

import math

import numpy as np

# integer codes shared by both kernel backends
LINEAR_SADDLE = 0
RIGID_ROTATION = 1
TRANSIENT_SADDLE = 2
TRANSITION_SADDLE = 3
DOUBLE_GYRE = 4
MOVING_SEPARATION = 5


def linear_saddle(x1, x2, mu):
    z = 0.0 * x1
    return -mu * x1, mu * x2, z - mu, z, z, z + mu


def rigid_rotation(x1, x2, mu):
    z = 0.0 * x1
    return -mu * x2, mu * x1, z, z - mu, z + mu, z


def transient_saddle(x1, x2, s):
    z = 0.0 * x1
    return (-x1 + s * (1.0 + x1), x2 - s * x2,
            z - 1.0 + s, z, z, z + 1.0 - s)


def transition_saddle(x1, x2, s):
    th = np.tanh(x2)
    sech2 = 1.0 / np.cosh(x2) ** 2
    z = 0.0 * x1
    u1 = -x1 - s * x1 * sech2
    u2 = x2 + s * th
    return u1, u2, -1.0 - s * sech2, 2.0 * s * x1 * sech2 * th, z, 1.0 + s * sech2


def double_gyre(x1, x2, amp):
    pi = math.pi
    s1 = np.sin(pi * x1)
    c1 = np.cos(pi * x1)
    s2 = np.sin(pi * x2)
    c2 = np.cos(pi * x2)
    k = amp * pi * pi
    return (-amp * pi * s1 * c2, amp * pi * c1 * s2,
            -k * c1 * c2, k * s1 * s2, -k * s1 * s2, k * c1 * c2)


def moving_separation(x1, x2, t, strength, q1, q2, speed, sign):
    # stream function H = -L tanh(q2 x2) tanh(q1 (x1 - c t)),
    # u1 = sign * dH/dx2, u2 = -sign * dH/dx1
    th1 = np.tanh(q1 * (x1 - speed * t))
    sh1 = 1.0 - th1 * th1
    th2 = np.tanh(q2 * x2)
    sh2 = 1.0 - th2 * th2
    lk = sign * strength
    u1 = -lk * q2 * sh2 * th1
    u2 = lk * q1 * th2 * sh1
    j11 = -lk * q1 * q2 * sh1 * sh2
    j12 = 2.0 * lk * q2 * q2 * sh2 * th2 * th1
    j21 = -2.0 * lk * q1 * q1 * th2 * sh1 * th1
    j22 = lk * q1 * q2 * sh1 * sh2
    return u1, u2, j11, j12, j21, j22


def transition_scalar(t, a, b):
    """Exp-bump quotient s(t); 0 below ``a``, 1 above ``b``."""
    if t <= a:
        return 0.0
    if t >= b:
        return 1.0
    u = (t - a) / (b - a)
    ga = math.exp(-1.0 / u)
    gb = math.exp(-1.0 / (1.0 - u))
    return ga / (ga + gb)


def transition_array(t, a, b):
    t = np.asarray(t, dtype=float)
    u = np.clip((t - a) / (b - a), 0.0, 1.0)
    inner = (u > 0.0) & (u < 1.0)
    us = np.where(inner, u, 0.5)
    ga = np.exp(-1.0 / us)
    gb = np.exp(-1.0 / (1.0 - us))
    return np.where(inner, ga / (ga + gb), np.where(u >= 1.0, 1.0, 0.0))
