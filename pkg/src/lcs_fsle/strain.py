"""Cauchy-Green tensor, closed-form 2x2 symmetric eigenproblem and FTLE."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEigenvalueError, InvalidHorizonError

DEGENERACY_RTOL = 1e-12


@dataclass(frozen=True)
class SymmetricTensor2:
    c11: float
    c12: float
    c22: float

    @classmethod
    def from_array(cls, a):
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), 0.5 * float(a[0, 1] + a[1, 0]), float(a[1, 1]))

    def as_array(self):
        return np.array([[self.c11, self.c12], [self.c12, self.c22]])

    @property
    def trace(self):
        return self.c11 + self.c22

    @property
    def det(self):
        return self.c11 * self.c22 - self.c12 * self.c12

    def norm(self):
        return float(np.linalg.norm(self.as_array()))


@dataclass(frozen=True)
class EigenPair2:
    lambda_min: float
    lambda_max: float
    e_min: tuple
    e_max: tuple
    degenerate: bool


def _orient(v):
    # first nonzero component positive
    x, y = v
    if x < 0.0 or (x == 0.0 and y < 0.0):
        return (-x, -y)
    return (x, y)


def cauchy_green(df):
    f = np.asarray(df, dtype=float)
    c = f.T @ f
    return SymmetricTensor2(float(c[0, 0]), float(c[0, 1]), float(c[1, 1]))


def eig_sym2(c):
    """Eigenvalues/vectors of a symmetric 2x2 tensor from the characteristic polynomial."""
    half_tr = 0.5 * (c.c11 + c.c22)
    rad = math.hypot(0.5 * (c.c11 - c.c22), c.c12)
    lmax = half_tr + rad
    # smaller root via the determinant when it would cancel
    if half_tr > 0 and lmax != 0.0 and rad < half_tr:
        lmin = min(c.det / lmax, lmax)  # the quotient can overshoot by an ulp
    else:
        lmin = half_tr - rad
    degenerate = abs(lmax - lmin) <= DEGENERACY_RTOL * max(1.0, abs(lmax))
    if degenerate:
        return EigenPair2(lmin, lmax, (0.0, 1.0), (1.0, 0.0), True)
    va = (lmax - c.c22, c.c12)
    vb = (c.c12, lmax - c.c11)
    v = va if va[0] ** 2 + va[1] ** 2 >= vb[0] ** 2 + vb[1] ** 2 else vb
    n = math.hypot(*v)
    e_max = _orient((v[0] / n, v[1] / n))
    e_min = _orient((-e_max[1], e_max[0]))
    return EigenPair2(lmin, lmax, e_min, e_max, False)


def ftle(lambda_max, t0, t):
    if not t > t0:
        raise InvalidHorizonError(f"FTLE needs t > t0 (got t0={t0}, t={t})")
    return math.log(lambda_max) / (2.0 * (t - t0))


def lambda_max_time_derivative(m, sample, t):
    """d/dt lambda_max(C) at the end time ``t`` of ``sample``.

    Uses the Eulerian rate-of-strain S at the current position:
    2 <DF e_max, S DF e_max>.  At a repeated eigenvalue the result is returned
    only when it does not depend on the eigenvector choice.
    """
    from .flows import rate_of_strain

    df = np.asarray(sample.df, dtype=float)
    ep = eig_sym2(cauchy_green(df))
    s = rate_of_strain(m, sample.x1, t).as_array()
    if ep.degenerate:
        # still well defined when DF^T S DF is isotropic (e.g. S = 0)
        q = df.T @ s @ df
        scale = max(1.0, float(np.abs(q).max()))
        if abs(q[0, 1]) <= DEGENERACY_RTOL * scale and abs(q[0, 0] - q[1, 1]) <= DEGENERACY_RTOL * scale:
            return float(q[0, 0] + q[1, 1])
        raise DegenerateEigenvalueError("lambda_max is not simple")
    w = df @ np.asarray(ep.e_max)
    return float(2.0 * w @ s @ w)
