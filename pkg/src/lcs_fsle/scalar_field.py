"""Uniform rectilinear scalar grids: interpolation, derivatives, critical points, file I/O."""

import logging
import math
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridFormatError, MissingDataError, OutOfBoundsError
from .strain import SymmetricTensor2, eig_sym2

log = logging.getLogger(__name__)

HERMITE = "hermite"
CATMULL_ROM = "catmull-rom"
BILINEAR = "bilinear"
METHODS = (HERMITE, CATMULL_ROM, BILINEAR)


@dataclass(frozen=True)
class GridSpec:
    """Node lattice; a single node on an axis is allowed when min == max (transects)."""

    x1min: float
    x1max: float
    x2min: float
    x2max: float
    nx: int
    ny: int

    def __post_init__(self):
        for lo, hi, n, name in ((self.x1min, self.x1max, self.nx, "x1"),
                                (self.x2min, self.x2max, self.ny, "x2")):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"{name} bounds must be finite")
            if int(n) != n or n < 1:
                raise ValueError(f"{name} point count must be a positive integer")
            if n == 1 and lo != hi:
                raise ValueError(f"a single {name} node needs {name}min == {name}max")
            if n >= 2 and not lo < hi:
                raise ValueError(f"{name}min must be < {name}max")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @classmethod
    def parse(cls, text):
        """``"x1min:x1max:nx,x2min:x2max:ny"``."""
        try:
            a, b = text.split(",")
            a1, b1, n1 = a.split(":")
            a2, b2, n2 = b.split(":")
            return cls(float(a1), float(b1), float(a2), float(b2), int(n1), int(n2))
        except ValueError as exc:
            raise ValueError(f"bad grid {text!r}: {exc}") from None

    @property
    def h1(self):
        return (self.x1max - self.x1min) / (self.nx - 1) if self.nx > 1 else 0.0

    @property
    def h2(self):
        return (self.x2max - self.x2min) / (self.ny - 1) if self.ny > 1 else 0.0

    @property
    def size(self):
        return self.nx * self.ny

    def x1(self):
        return np.linspace(self.x1min, self.x1max, self.nx)

    def x2(self):
        return np.linspace(self.x2min, self.x2max, self.ny)

    def points(self):
        """All nodes as (ny*nx, 2), row-major with x1 fastest."""
        g1, g2 = np.meshgrid(self.x1(), self.x2())
        return np.column_stack([g1.ravel(), g2.ravel()])

    def describe(self):
        return (f"nx={self.nx} ny={self.ny} x1min={self.x1min:.17g} x1max={self.x1max:.17g} "
                f"x2min={self.x2min:.17g} x2max={self.x2max:.17g}")


def _slopes(f, h, axis, fourth_order):
    """Nodal derivative along ``axis``; NaN where the stencil touches missing data."""
    n = f.shape[axis]
    if n < 2:
        return np.full_like(f, np.nan)
    if n < 3:
        d = np.diff(f, axis=axis) / h
        return np.concatenate([d, d], axis=axis)
    d = np.gradient(f, h, axis=axis, edge_order=2)
    if fourth_order and n >= 5:
        m = np.moveaxis(f, axis, 0)
        dd = np.moveaxis(d, axis, 0)
        dd[2:-2] = (m[:-4] - 8.0 * m[1:-3] + 8.0 * m[3:-1] - m[4:]) / (12.0 * h)
        # one-sided fourth-order stencils on the two outermost nodes
        dd[0] = (-25.0 * m[0] + 48.0 * m[1] - 36.0 * m[2] + 16.0 * m[3] - 3.0 * m[4]) / (12.0 * h)
        dd[1] = (-3.0 * m[0] - 10.0 * m[1] + 18.0 * m[2] - 6.0 * m[3] + m[4]) / (12.0 * h)
        dd[-1] = (25.0 * m[-1] - 48.0 * m[-2] + 36.0 * m[-3] - 16.0 * m[-4] + 3.0 * m[-5]) / (12.0 * h)
        dd[-2] = (3.0 * m[-1] + 10.0 * m[-2] - 18.0 * m[-3] + 6.0 * m[-4] - m[-5]) / (12.0 * h)
    return d


class ScalarGrid:
    """Immutable field sampled on a :class:`GridSpec`; NaN marks missing values.

    ``values`` has shape (ny, nx); ``values[j, i]`` sits at (x1[i], x2[j]).
    """

    def __init__(self, spec, values):
        v = np.array(values, dtype=float)
        if v.size != spec.size:
            raise ValueError(f"expected {spec.size} values, got {v.size}")
        v = v.reshape(spec.ny, spec.nx)
        v.setflags(write=False)
        self.spec = spec
        self.values = v
        self._slope_cache = {}

    def flat(self):
        return self.values.ravel()

    @property
    def value_range(self):
        fin = self.values[np.isfinite(self.values)]
        return float(fin.max() - fin.min()) if fin.size else 0.0

    def default_tol_grad(self):
        h = min(self.spec.h1, self.spec.h2)
        return 1e-8 * self.value_range / h

    def slopes(self, method=HERMITE):
        """Nodal (fx, fy, fxy) used by the cubic interpolants."""
        if method not in self._slope_cache:
            fourth = method == HERMITE
            s = self.spec
            fx = _slopes(self.values, s.h1, 1, fourth)
            fy = _slopes(self.values, s.h2, 0, fourth)
            fxy = _slopes(fx, s.h2, 0, fourth)
            for a in (fx, fy, fxy):
                a.setflags(write=False)
            self._slope_cache[method] = (fx, fy, fxy)
        return self._slope_cache[method]

    # evaluation -------------------------------------------------------------
    def _locate(self, x):
        s = self.spec
        if s.nx < 2 or s.ny < 2:
            raise ValueError("interpolation needs at least 2 nodes per axis")
        x1, x2 = float(x[0]), float(x[1])
        eps1, eps2 = 1e-12 * (s.x1max - s.x1min), 1e-12 * (s.x2max - s.x2min)
        if not (s.x1min - eps1 <= x1 <= s.x1max + eps1 and s.x2min - eps2 <= x2 <= s.x2max + eps2):
            raise OutOfBoundsError(f"point ({x1}, {x2}) outside grid")
        u = (x1 - s.x1min) / s.h1
        v = (x2 - s.x2min) / s.h2
        i = min(max(int(math.floor(u)), 0), s.nx - 2)
        j = min(max(int(math.floor(v)), 0), s.ny - 2)
        return i, j, u - i, v - j

    def evaluate(self, x, method=HERMITE, order=0):
        """Value, and for ``order`` >= 1 gradient, for ``order`` 2 Hessian (3 entries)."""
        if method not in METHODS:
            raise ValueError(f"unknown interpolation method {method!r}")
        i, j, s, t = self._locate(x)
        h1, h2 = self.spec.h1, self.spec.h2
        f = self.values[j:j + 2, i:i + 2]
        if method == BILINEAR:
            if not np.all(np.isfinite(f)):
                raise MissingDataError("stencil touches missing data")
            return _bilinear(f, s, t, h1, h2, order)
        fx, fy, fxy = (a[j:j + 2, i:i + 2] for a in self.slopes(method))
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(fx))
                and np.all(np.isfinite(fy)) and np.all(np.isfinite(fxy))):
            raise MissingDataError("stencil touches missing data")
        return _hermite(f, fx * h1, fy * h2, fxy * (h1 * h2), s, t, h1, h2, order)


def _basis(s):
    # Hermite basis and its first two derivatives in s: (value, value', local node 0/1)
    s2, s3 = s * s, s * s * s
    a = np.array([2 * s3 - 3 * s2 + 1, -2 * s3 + 3 * s2])
    b = np.array([s3 - 2 * s2 + s, s3 - s2])
    da = np.array([6 * s2 - 6 * s, -6 * s2 + 6 * s])
    db = np.array([3 * s2 - 4 * s + 1, 3 * s2 - 2 * s])
    dda = np.array([12 * s - 6, -12 * s + 6])
    ddb = np.array([6 * s - 4, 6 * s - 2])
    return (a, b), (da, db), (dda, ddb)


def _hermite(f, fx, fy, fxy, s, t, h1, h2, order):
    bs, bt = _basis(s), _basis(t)

    def comb(ks, kt):
        (a_s, b_s), (a_t, b_t) = bs[ks], bt[kt]
        # f[j, i]: j indexes t (x2), i indexes s (x1)
        return (a_t @ f @ a_s + a_t @ fx @ b_s + b_t @ fy @ a_s + b_t @ fxy @ b_s)

    val = float(comb(0, 0))
    if order == 0:
        return val
    grad = np.array([comb(1, 0) / h1, comb(0, 1) / h2])
    if order == 1:
        return val, grad
    hxx = comb(2, 0) / h1 ** 2
    hxy = comb(1, 1) / (h1 * h2)
    hyy = comb(0, 2) / h2 ** 2
    return val, grad, SymmetricTensor2(float(hxx), float(hxy), float(hyy))


def _bilinear(f, s, t, h1, h2, order):
    f00, f10, f01, f11 = f[0, 0], f[0, 1], f[1, 0], f[1, 1]
    val = float((1 - s) * (1 - t) * f00 + s * (1 - t) * f10 + (1 - s) * t * f01 + s * t * f11)
    if order == 0:
        return val
    gx = ((1 - t) * (f10 - f00) + t * (f11 - f01)) / h1
    gy = ((1 - s) * (f01 - f00) + s * (f11 - f10)) / h2
    grad = np.array([gx, gy])
    if order == 1:
        return val, grad
    return val, grad, SymmetricTensor2(0.0, float((f11 - f10 - f01 + f00) / (h1 * h2)), 0.0)


def interpolate(g, x, method=HERMITE):
    """Interpolated value at ``x``; cubic Hermite by default."""
    return g.evaluate(x, method, 0)


def gradient_at(g, x, method=HERMITE):
    return g.evaluate(x, method, 1)[1]


def hessian_at(g, x, method=HERMITE):
    return g.evaluate(x, method, 2)[2]


# critical points ---------------------------------------------------------------

class CriticalKind(str, Enum):
    MAX = "max"
    MIN = "min"
    SADDLE = "saddle"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class CriticalPoint:
    x: tuple
    hessian: SymmetricTensor2
    kind: CriticalKind

    @property
    def eigen(self):
        return eig_sym2(self.hessian)


CLASSIFY_RTOL = 1e-6


def classify(h):
    ep = eig_sym2(h)
    tol = CLASSIFY_RTOL * max(abs(ep.lambda_min), abs(ep.lambda_max))
    if ep.lambda_max < -tol:
        return CriticalKind.MAX
    if ep.lambda_min > tol:
        return CriticalKind.MIN
    if ep.lambda_min < -tol and ep.lambda_max > tol:
        return CriticalKind.SADDLE
    return CriticalKind.DEGENERATE


def _newton_step(hs, grad, cap, rcond=1e-10):
    # pseudo-inverse step, each eigendirection clipped to one cell
    ep = eig_sym2(hs)
    top = max(abs(ep.lambda_min), abs(ep.lambda_max))
    step = np.zeros(2)
    for lam, e in ((ep.lambda_min, ep.e_min), (ep.lambda_max, ep.e_max)):
        if abs(lam) <= rcond * top or lam == 0.0:
            continue
        e = np.asarray(e)
        step += np.clip(float(e @ grad) / lam, -cap, cap) * e
    return step


def newton_critical(g, x, tol_grad, method=HERMITE, max_iter=50, reach=1.5):
    """Newton iteration on the interpolated gradient; None if not converged.

    Each Hessian eigendirection moves at most one cell per iteration and the
    iterate may not leave a box of ``reach`` cells around the start.  If that
    fails, a second pass ignores nearly flat directions, which lands on
    critical lines where the full step slides along the line.
    """
    for rcond in (1e-10, 1e-3):
        x_c = _newton(g, x, tol_grad, method, max_iter, reach, rcond)
        if x_c is not None:
            return x_c
    return None


def _newton(g, x, tol_grad, method, max_iter, reach, rcond):
    s = g.spec
    h = np.array([s.h1, s.h2])
    x = np.asarray(x, dtype=float).copy()
    start = x.copy()
    for _ in range(max_iter + 1):
        try:
            _, grad, hs = g.evaluate(x, method, 2)
        except (OutOfBoundsError, MissingDataError):
            return None
        if np.hypot(*grad) <= tol_grad:
            return x
        x = x - _newton_step(hs, grad, min(s.h1, s.h2), rcond)
        if np.any(np.abs(x - start) > reach * h):
            return None
    return None


def find_critical_points(g, tol_grad=None, method=HERMITE):
    """Critical points of the interpolant, ordered by (x1, x2).

    Candidates are cells whose corner slopes change sign (or vanish to within
    ``tol_grad``) in both components;
    Newton converges each one and duplicates landing in the same cell merge.
    """
    tol = g.default_tol_grad() if tol_grad is None else tol_grad
    s = g.spec
    fx, fy, _ = g.slopes(method)

    def sign_change(a):
        c = np.stack([a[:-1, :-1], a[:-1, 1:], a[1:, :-1], a[1:, 1:]])
        with np.errstate(invalid="ignore"):
            # slopes within the tolerance of zero count as a sign change
            return (np.nanmin(c, axis=0) <= tol) & (np.nanmax(c, axis=0) >= -tol) \
                & np.all(np.isfinite(c), axis=0)

    cand = sign_change(fx) & sign_change(fy)
    found = []
    dropped = 0
    for j, i in zip(*np.nonzero(cand)):
        x0 = (s.x1min + (i + 0.5) * s.h1, s.x2min + (j + 0.5) * s.h2)
        x = newton_critical(g, x0, tol, method)
        if x is None:
            dropped += 1
            continue
        if any(abs(x[0] - c.x[0]) < s.h1 and abs(x[1] - c.x[1]) < s.h2 for c in found):
            continue
        hs = g.evaluate(x, method, 2)[2]
        found.append(CriticalPoint((float(x[0]), float(x[1])), hs, classify(hs)))
    if dropped:
        log.warning("find_critical_points: %d non-converged candidates dropped", dropped)
    find_critical_points.last_dropped = dropped
    return sorted(found, key=lambda c: (c.x[0], c.x[1]))


find_critical_points.last_dropped = 0


# file I/O -------------------------------------------------------------------------

_HEADER = re.compile(
    r"^# grid nx=(\d+) ny=(\d+) x1min=(\S+) x1max=(\S+) x2min=(\S+) x2max=(\S+)$")


def _fmt(v):
    return "nan" if math.isnan(v) else "%.17g" % v


def write_grid(g, path):
    s = g.spec
    pts = s.points()
    vals = g.flat()
    lines = [f"# grid {s.describe()}"]
    lines.extend(f"{_fmt(p[0])},{_fmt(p[1])},{_fmt(v)}" for p, v in zip(pts, vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_grid(path):
    with open(path, "r", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise GridFormatError(f"{path}: empty file")
    m = _HEADER.match(lines[0])
    if not m:
        raise GridFormatError(f"{path}: malformed header {lines[0]!r}")
    try:
        spec = GridSpec(float(m[3]), float(m[4]), float(m[5]), float(m[6]), int(m[1]), int(m[2]))
    except ValueError as exc:
        raise GridFormatError(f"{path}: {exc}") from None
    body = lines[1:]
    if len(body) != spec.size:
        raise GridFormatError(f"{path}: expected {spec.size} data lines, found {len(body)}")
    vals = np.empty(spec.size)
    for k, line in enumerate(body):
        parts = line.split(",")
        if len(parts) != 3:
            raise GridFormatError(f"{path}:{k + 2}: expected x1,x2,value")
        try:
            vals[k] = float(parts[2])
        except ValueError:
            raise GridFormatError(f"{path}:{k + 2}: bad value {parts[2]!r}") from None
    return ScalarGrid(spec, vals)


def image_bytes(g, lo, hi):
    if not lo < hi:
        raise ValueError("image range needs lo < hi")
    v = g.values[::-1]  # top row is x2max
    with np.errstate(invalid="ignore"):
        p = np.clip((v - lo) / (hi - lo), 0.0, 1.0)
    pix = np.where(np.isfinite(v), np.round(255.0 * p), 0.0).astype(np.uint8)
    ny, nx = pix.shape
    return f"P5\n{nx} {ny}\n255\n".encode("ascii") + pix.tobytes()


def write_image(g, path, lo, hi):
    """Binary PGM; missing values map to 0."""
    data = image_bytes(g, lo, hi)
    with open(path, "wb") as fh:
        fh.write(data)
