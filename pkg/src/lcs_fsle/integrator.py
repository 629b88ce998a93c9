"""Fixed-step RK4 flow maps, deformation gradients and threshold-crossing refinement."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import NonFiniteError, NotCrossedError


class EventMode(str, Enum):
    STEP = "step"      # first sample at or above threshold
    BISECT = "bisect"  # bisect inside the first crossing step

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"step": cls.STEP, "stepresolution": cls.STEP,
                   "bisect": cls.BISECT, "bisection": cls.BISECT}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown event mode {value!r} (use 'step' or 'bisect')") from None


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    scheme: str = "RK4"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme.upper() != "RK4":
            raise ValueError(f"unsupported scheme {self.scheme!r}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")


@dataclass(frozen=True)
class FlowSample:
    x1: np.ndarray   # image of x0 under the flow map
    df: np.ndarray   # 2x2 deformation gradient


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray   # (n,)
    states: np.ndarray  # (n, 6): x1, x2, DF11, DF12, DF21, DF22

    def point(self, k):
        return self.states[k, :2]

    def df(self, k):
        return self.states[k, 2:].reshape(2, 2)


def step_times(t0, t1, dt, max_steps=None):
    """Uniform sample times from t0 to t1; the last interval may be shorter."""
    if t1 < t0:
        raise ValueError("backward-time integration is not supported (t1 < t0)")
    span = t1 - t0
    n_full = int(np.floor(span / dt * (1.0 + 1e-12)))
    if max_steps is not None and n_full > max_steps:
        raise ValueError(f"{n_full} steps exceed max_steps={max_steps}")
    times = t0 + dt * np.arange(n_full + 1, dtype=float)
    if times[-1] > t1:
        times[-1] = t1
    elif t1 - times[-1] > 1e-12 * max(1.0, abs(t1)):
        times = np.append(times, t1)
    else:
        times[-1] = t1
    return times


def _check(y):
    if not np.all(np.isfinite(y)):
        raise NonFiniteError("state left the floating-point range")


def flow_map_with_gradient(m, x0, t0, t1, cfg=IntegratorConfig()):
    x0 = np.asarray(x0, dtype=float).reshape(1, 2)
    if t1 == t0:
        return FlowSample(x0[0].copy(), np.eye(2))
    times = step_times(t0, t1, cfg.dt, cfg.max_steps)
    y = kernels.get_kernels().aug_flow(m.code, m.param_vector(), x0, times)[0]
    _check(y)
    return FlowSample(y[:2].copy(), y[2:].reshape(2, 2).copy())


def flow_map(m, x0, t0, t1, cfg=IntegratorConfig()):
    return flow_map_with_gradient(m, x0, t0, t1, cfg).x1


def flow_map_batch(m, x0, t0, t1, cfg=IntegratorConfig()):
    """Augmented end states (N, 6) for many initial points; non-finite rows are NaN."""
    x0 = np.asarray(x0, dtype=float).reshape(-1, 2)
    if t1 == t0:
        out = np.zeros((x0.shape[0], 6))
        out[:, :2] = x0
        out[:, 2] = out[:, 5] = 1.0
        return out
    times = step_times(t0, t1, cfg.dt, cfg.max_steps)
    out = kernels.get_kernels().aug_flow(m.code, m.param_vector(), x0, times)
    out[~np.all(np.isfinite(out), axis=1)] = np.nan
    return out


def record_trajectory(m, x0, t0, horizon, cfg=IntegratorConfig()):
    times = step_times(t0, t0 + horizon, cfg.dt, cfg.max_steps)
    states = kernels.get_kernels().aug_record(m.code, m.param_vector(),
                                              np.asarray(x0, dtype=float).reshape(2), times)
    _check(states)
    states.setflags(write=False)
    times.setflags(write=False)
    return TrajectoryRecord(times, states)


def rk4_substep(m, state, t, h):
    """Single RK4 step of length ``h`` for one augmented state (6,)."""
    from .kernels import _numpy as npk

    y = tuple(np.atleast_1d(float(v)) for v in state)
    z = npk.aug_step(m.code, m.param_vector(), y, t, h)
    return np.array([float(v[0]) for v in z])


def refine_crossing(m, rec, monitor, threshold, mode=EventMode.BISECT, tol=None):
    """Time at which ``monitor(state, t)`` first reaches ``threshold`` along ``rec``.

    ``EventMode.STEP`` returns the first sample time at or above the threshold.
    ``EventMode.BISECT`` re-integrates single RK4 steps of varying length from
    the preceding sample and bisects to ``tol`` (default 1e-12 * record span).
    """
    mode = EventMode.parse(mode)
    times = rec.times
    vals = np.array([monitor(rec.states[k], times[k]) for k in range(times.size)])
    above = np.nonzero(vals >= threshold)[0]
    if above.size == 0:
        raise NotCrossedError(f"monitor stays below {threshold} up to t={times[-1]}")
    k = int(above[0])
    if k == 0 or mode is EventMode.STEP:
        return float(times[k])
    span = times[-1] - times[0]
    tol = 1e-12 * span if tol is None else tol
    t_prev = times[k - 1]
    lo, hi = 0.0, times[k] - t_prev
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        y = rk4_substep(m, rec.states[k - 1], t_prev, mid)
        if monitor(y, t_prev + mid) >= threshold:
            hi = mid
        else:
            lo = mid
    return float(t_prev + hi)


def lambda_max_monitor(state, t):
    """lambda_max of the Cauchy-Green tensor for an augmented state."""
    f = np.asarray(state[2:6], dtype=float).reshape(2, 2)
    c = f.T @ f
    return 0.5 * (c[0, 0] + c[1, 1]) + np.hypot(0.5 * (c[0, 0] - c[1, 1]), c[0, 1])
