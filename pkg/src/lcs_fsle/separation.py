"""Separation times, FSLE / ISLE, degeneracy scans and grid field drivers."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import InvalidHorizonError, NonFiniteError
from .scalar_field import GridSpec, ScalarGrid
from .integrator import EventMode, IntegratorConfig, flow_map_batch, step_times

# bisection stops at this fraction of the horizon (well inside the 1e-9 bound)
BISECT_RTOL = 1e-12

# kernel status codes
_NOT_CROSSED, _CROSSED, _NONFINITE = 0, 1, 3


class Status(str, Enum):
    SEPARATED = "separated"
    UNDEFINED = "undefined"
    DEGENERATE = "degenerate"


class FieldKind(str, Enum):
    FTLE = "ftle"
    FSLE = "fsle"
    ISLE = "isle"
    TAU = "tau"          # finite-size separation time
    TAU0 = "tau0"        # infinitesimal separation time
    MARGIN = "margin"    # d/dt lambda_max at the infinitesimal separation time


@dataclass(frozen=True)
class SeparationParams:
    r: float
    delta0: float = 1e-3
    n_probes: int = 8
    horizon: float = 50.0
    event_mode: EventMode = EventMode.BISECT

    def __post_init__(self):
        if not self.r > 1.0:
            raise ValueError("separation factor r must exceed 1")
        if not self.delta0 > 0.0:
            raise ValueError("delta0 must be positive")
        if int(self.n_probes) < 4:
            raise ValueError("n_probes must be at least 4")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        object.__setattr__(self, "n_probes", int(self.n_probes))
        object.__setattr__(self, "event_mode", EventMode.parse(self.event_mode))

    @property
    def tol_deg(self):
        return 1e-6 * self.r ** 2 / self.horizon

    @property
    def tol_t(self):
        return BISECT_RTOL * self.horizon

    @property
    def bisect(self):
        return self.event_mode is EventMode.BISECT


@dataclass(frozen=True)
class SeparationOutcome:
    status: Status
    tau: float = math.nan
    value: float = math.nan
    margin: float = math.nan
    n_peaks: int = 0

    @property
    def defined(self):
        return self.status is not Status.UNDEFINED


@dataclass
class IsleBatch:
    tau: np.ndarray
    status: np.ndarray      # Status values as small ints: 0 separated, 1 undefined, 2 degenerate
    margin: np.ndarray
    n_peaks: np.ndarray
    state: np.ndarray       # augmented state at the crossing
    nonfinite: np.ndarray


STATUS_CODES = {0: Status.SEPARATED, 1: Status.UNDEFINED, 2: Status.DEGENERATE}


def _times(t0, p, cfg):
    return step_times(t0, t0 + p.horizon, cfg.dt, cfg.max_steps)


def isle_batch(m, points, t0, p, cfg=IntegratorConfig()):
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
    k = kernels.get_kernels()
    tau, raw, margin, npeaks, state = k.isle_scan(m.code, m.param_vector(), pts, _times(t0, p, cfg),
                                                  p.r ** 2, p.bisect, p.tol_t)
    status = np.where(raw == _CROSSED, 0, 1).astype(np.int8)
    crossed = raw == _CROSSED
    f = state[:, 2:]
    c11 = f[:, 0] ** 2 + f[:, 2] ** 2
    c12 = f[:, 0] * f[:, 1] + f[:, 2] * f[:, 3]
    c22 = f[:, 1] ** 2 + f[:, 3] ** 2
    gap = 2.0 * np.hypot(0.5 * (c11 - c22), c12)
    with np.errstate(invalid="ignore"):
        eig_degenerate = gap <= 1e-12 * np.maximum(1.0, 0.5 * (c11 + c22) + 0.5 * gap)
        degenerate = crossed & ((np.abs(margin) <= p.tol_deg) | eig_degenerate)
    status[degenerate] = 2
    return IsleBatch(tau, status, margin, npeaks, state, raw == _NONFINITE)


def fsle_batch(m, points, t0, p, cfg=IntegratorConfig()):
    """Finite-size separation times; returns (tau, status codes, nonfinite mask)."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
    k = kernels.get_kernels()
    tau, raw = k.fsle_scan(m.code, m.param_vector(), pts, _times(t0, p, cfg),
                           p.delta0, p.n_probes, p.r, p.bisect, p.tol_t)
    status = np.where(raw == _CROSSED, 0, 1).astype(np.int8)
    return tau, status, raw == _NONFINITE


def isle_tau0(m, x0, t0, p, cfg=IntegratorConfig()):
    """Infinitesimal separation time: first t with lambda_max(C) = r^2."""
    b = isle_batch(m, [x0], t0, p, cfg)
    if b.nonfinite[0]:
        raise NonFiniteError("trajectory left the floating-point range")
    status = STATUS_CODES[int(b.status[0])]
    if status is Status.UNDEFINED:
        return SeparationOutcome(status, n_peaks=int(b.n_peaks[0]))
    tau = float(b.tau[0])
    value = math.log(p.r) / tau if tau > 0 else math.inf
    return SeparationOutcome(status, tau, value, float(b.margin[0]), int(b.n_peaks[0]))


def isle(m, x0, t0, p, cfg=IntegratorConfig()):
    """ISLE value log(r)/tau0 (equal to the FTLE over [t0, t0 + tau0])."""
    return isle_tau0(m, x0, t0, p, cfg)


def fsle_tau(m, x0, t0, p, cfg=IntegratorConfig()):
    tau, status, bad = fsle_batch(m, [x0], t0, p, cfg)
    if bad[0]:
        raise NonFiniteError("trajectory left the floating-point range")
    if status[0] != 0:
        return SeparationOutcome(Status.UNDEFINED)
    t = float(tau[0])
    return SeparationOutcome(Status.SEPARATED, t, math.log(p.r) / t if t > 0 else math.inf)


def fsle(m, x0, t0, p, cfg=IntegratorConfig()):
    """FSLE value log(r)/tau over a ring of ``p.n_probes`` neighbours at distance delta0."""
    return fsle_tau(m, x0, t0, p, cfg)


def ftle_values(m, points, t0, horizon, cfg=IntegratorConfig()):
    if not horizon > 0:
        raise InvalidHorizonError("FTLE horizon must be positive")
    y = flow_map_batch(m, points, t0, t0 + horizon, cfg)
    f = y[:, 2:]
    c11 = f[:, 0] ** 2 + f[:, 2] ** 2
    c12 = f[:, 0] * f[:, 1] + f[:, 2] * f[:, 3]
    c22 = f[:, 1] ** 2 + f[:, 3] ** 2
    lam = 0.5 * (c11 + c22) + np.hypot(0.5 * (c11 - c22), c12)
    return np.log(lam) / (2.0 * horizon)


def compute_field(kind, m, grid, t0, params, cfg=IntegratorConfig(), threads=None):
    """Evaluate one field kind at every node of ``grid``.

    ``params`` is the integration time for ``FieldKind.FTLE`` and a
    :class:`SeparationParams` otherwise.  Undefined and degenerate points are NaN.
    """
    kind = FieldKind(kind)
    kernels.set_threads(threads)
    pts = grid.points()
    if kind is FieldKind.FTLE:
        vals = ftle_values(m, pts, t0, float(params), cfg)
    elif kind in (FieldKind.FSLE, FieldKind.TAU):
        tau, status, _ = fsle_batch(m, pts, t0, params, cfg)
        tau = np.where(status == 0, tau, np.nan)
        vals = tau if kind is FieldKind.TAU else math.log(params.r) / tau
    else:
        b = isle_batch(m, pts, t0, params, cfg)
        ok = b.status == 0
        if kind is FieldKind.TAU0:
            vals = np.where(ok, b.tau, np.nan)
        elif kind is FieldKind.ISLE:
            vals = np.where(ok, math.log(params.r) / np.where(ok, b.tau, 1.0), np.nan)
        else:
            vals = np.where(ok, b.margin, np.nan)
    return ScalarGrid(grid, vals.reshape(grid.ny, grid.nx))


@dataclass(frozen=True)
class DegeneracyFlag:
    """A grid point next to which the infinitesimal separation time jumps.

    ``index`` is the (row, col) of the point whose crossing sits on the vanishing
    excursion of lambda_max(t); ``neighbor`` is the adjacent point across the jump.
    """

    x: tuple
    index: tuple
    neighbor: tuple
    tau0: float
    tau0_neighbor: float
    margin: float           # d/dt lambda_max at t0 + tau0
    d2t_lambda: float       # d2/dt2 lambda_max at t0 + tau0 (centered FD)
    dx_lambda: tuple        # spatial gradient of lambda_max at t0 + tau0 (centered FD)

    @property
    def jump(self):
        return abs(self.tau0_neighbor - self.tau0)


def _lam_at(m, pts, t0, t1, cfg):
    y = flow_map_batch(m, pts, t0, t1, cfg)
    f = y[:, 2:]
    c11 = f[:, 0] ** 2 + f[:, 2] ** 2
    c12 = f[:, 0] * f[:, 1] + f[:, 2] * f[:, 3]
    c22 = f[:, 1] ** 2 + f[:, 3] ** 2
    return 0.5 * (c11 + c22) + np.hypot(0.5 * (c11 - c22), c12)


def degeneracy_scan(m, grid, t0, p, cfg=IntegratorConfig(), time_step=1e-3, min_jump=0.0):
    """Locate jumps of tau0 caused by a vanishing d/dt lambda_max at the crossing.

    Adjacent nodes are flagged when their crossings happen on different
    excursions of lambda_max(t), i.e. the number of lambda_max peaks preceding
    the crossing differs.  ``min_jump`` additionally requires |delta tau0| above
    a threshold.
    """
    b = isle_batch(m, grid.points(), t0, p, cfg)
    ny, nx = grid.ny, grid.nx
    tau = b.tau.reshape(ny, nx)
    ok = (b.status != 1).reshape(ny, nx)
    peaks = b.n_peaks.reshape(ny, nx)
    margin = b.margin.reshape(ny, nx)

    pairs = []
    for (dj, di) in ((0, 1), (1, 0)):
        for j in range(ny - dj):
            for i in range(nx - di):
                a, c = (j, i), (j + dj, i + di)
                if not (ok[a] and ok[c]) or peaks[a] == peaks[c]:
                    continue
                if abs(tau[a] - tau[c]) < min_jump:
                    continue
                first, other = (a, c) if tau[a] <= tau[c] else (c, a)
                pairs.append((first, other))

    seen = {}
    for first, other in pairs:
        if first not in seen or abs(tau[other] - tau[first]) > abs(tau[seen[first]] - tau[first]):
            seen[first] = other

    x1s, x2s = grid.x1(), grid.x2()
    flags = []
    for first in sorted(seen, key=lambda ji: (x2s[ji[0]], x1s[ji[1]])):
        other = seen[first]
        j, i = first
        x = np.array([x1s[i], x2s[j]])
        tc = t0 + float(tau[first])
        ht = time_step
        lam_t = _lam_at(m, np.array([x, x, x]), t0, tc, cfg)[0]
        lp = _lam_at(m, x[None], t0, tc + ht, cfg)[0]
        lm = _lam_at(m, x[None], t0, max(t0, tc - ht), cfg)[0]
        d2t = (lp - 2.0 * lam_t + lm) / ht ** 2
        grad = []
        for axis, h in ((0, grid.h1), (1, grid.h2)):
            if h == 0.0:
                grad.append(math.nan)
                continue
            e = np.zeros(2)
            e[axis] = h
            lx = _lam_at(m, np.array([x + e, x - e]), t0, tc, cfg)
            grad.append(float((lx[0] - lx[1]) / (2.0 * h)))
        flags.append(DegeneracyFlag((float(x[0]), float(x[1])), first, other,
                                    float(tau[first]), float(tau[other]),
                                    float(margin[first]), float(d2t), tuple(grad)))
    return flags
