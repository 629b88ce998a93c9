"""Analytic 2-D benchmark flows with exact velocity gradients."""

from dataclasses import dataclass, field

import numpy as np

from . import _formulas as fm

FLOW_IDS = {
    "linear-saddle": fm.LINEAR_SADDLE,
    "rigid-rotation": fm.RIGID_ROTATION,
    "transient-saddle": fm.TRANSIENT_SADDLE,
    "transition-saddle": fm.TRANSITION_SADDLE,
    "double-gyre": fm.DOUBLE_GYRE,
    "moving-separation": fm.MOVING_SEPARATION,
}

DEFAULT_PARAMS = {
    "linear-saddle": {"mu": 1.0},
    "rigid-rotation": {"mu": 1.0},
    "transient-saddle": {"a": 0.5, "b": 0.6},
    "transition-saddle": {"a": 0.5, "b": 0.6},
    "double-gyre": {"A": 0.1},
    "moving-separation": {"L": 4.0, "q1": 5.0, "q2": 1.0, "c": 10.0},
}

DOMAINS = {
    "double-gyre": ((0.0, 1.0), (0.0, 1.0)),
}


@dataclass(frozen=True)
class TransitionWindow:
    a: float = 0.5
    b: float = 0.6

    def __post_init__(self):
        if not (0.0 < self.a < self.b):
            raise ValueError(f"transition window needs 0 < a < b, got a={self.a}, b={self.b}")


def smooth_transition(t, w):
    """C-infinity ramp: 0 for t <= a, 1 for t >= b, strictly increasing in between."""
    if np.ndim(t) == 0:
        return fm.transition_scalar(float(t), w.a, w.b)
    return fm.transition_array(t, w.a, w.b)


@dataclass(frozen=True)
class FlowModel:
    """A named analytic velocity field ``v(x, t)``.

    ``flip_hamiltonian`` only affects ``moving-separation`` and reverses the
    stream-function sign convention (u1 = -dH/dx2, u2 = dH/dx1).
    """

    kind: str
    params: dict = field(default_factory=dict)
    flip_hamiltonian: bool = False

    def __post_init__(self):
        if self.kind not in FLOW_IDS:
            raise ValueError(f"unknown flow {self.kind!r}; known: {', '.join(FLOW_IDS)}")
        defaults = DEFAULT_PARAMS[self.kind]
        unknown = set(self.params) - set(defaults)
        if unknown:
            raise ValueError(f"unknown parameter(s) for {self.kind}: {', '.join(sorted(unknown))}")
        merged = {k: float(self.params.get(k, v)) for k, v in defaults.items()}
        object.__setattr__(self, "params", merged)
        if self.kind in ("transient-saddle", "transition-saddle"):
            TransitionWindow(merged["a"], merged["b"])
        if self.kind == "moving-separation" and min(merged["q1"], merged["q2"]) <= 0:
            raise ValueError("q1 and q2 must be positive")

    # convenience constructors
    @classmethod
    def linear_saddle(cls, mu=1.0):
        return cls("linear-saddle", {"mu": mu})

    @classmethod
    def rigid_rotation(cls, mu=1.0):
        return cls("rigid-rotation", {"mu": mu})

    @classmethod
    def transient_saddle(cls, a=0.5, b=0.6):
        return cls("transient-saddle", {"a": a, "b": b})

    @classmethod
    def transition_saddle(cls, a=0.5, b=0.6):
        return cls("transition-saddle", {"a": a, "b": b})

    @classmethod
    def double_gyre(cls, A=0.1):
        return cls("double-gyre", {"A": A})

    @classmethod
    def moving_separation(cls, L=4.0, q1=5.0, q2=1.0, c=10.0, flip_hamiltonian=False):
        return cls("moving-separation", {"L": L, "q1": q1, "q2": q2, "c": c}, flip_hamiltonian)

    @property
    def code(self):
        return FLOW_IDS[self.kind]

    @property
    def window(self):
        if self.kind not in ("transient-saddle", "transition-saddle"):
            return None
        return TransitionWindow(self.params["a"], self.params["b"])

    @property
    def domain(self):
        return DOMAINS.get(self.kind, ((-np.inf, np.inf), (-np.inf, np.inf)))

    def param_vector(self):
        """Packed parameters in the layout the kernels expect."""
        q = self.params
        if self.kind in ("linear-saddle", "rigid-rotation"):
            v = [q["mu"]]
        elif self.kind in ("transient-saddle", "transition-saddle"):
            v = [q["a"], q["b"]]
        elif self.kind == "double-gyre":
            v = [q["A"]]
        else:
            v = [q["L"], q["q1"], q["q2"], q["c"], -1.0 if self.flip_hamiltonian else 1.0]
        return np.array(v, dtype=float)

    def describe(self):
        ps = ",".join(f"{k}={v:g}" for k, v in self.params.items())
        flip = " flip-hamiltonian" if self.flip_hamiltonian else ""
        return f"{self.kind}({ps}){flip}"


def parse_params(text):
    """``"L=4,q1=5"`` -> ``{"L": 4.0, "q1": 5.0}``."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        key, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"parameter {item!r} is not of the form key=value")
        out[key.strip()] = float(val)
    return out


def _evaluate(m, x, t):
    from .kernels import _numpy as npk

    x = np.asarray(x, dtype=float)
    return npk.field(m.code, m.param_vector(), x[..., 0], x[..., 1], t)


def velocity(m, x, t):
    u1, u2, *_ = _evaluate(m, x, t)
    return np.stack(np.broadcast_arrays(u1, u2), axis=-1)


def velocity_gradient(m, x, t):
    """Analytic Jacobian ``[[du1/dx1, du1/dx2], [du2/dx1, du2/dx2]]``."""
    _, _, j11, j12, j21, j22 = _evaluate(m, x, t)
    j11, j12, j21, j22 = np.broadcast_arrays(j11, j12, j21, j22)
    return np.stack([np.stack([j11, j12], -1), np.stack([j21, j22], -1)], -2)


def rate_of_strain(m, x, t):
    from .strain import SymmetricTensor2

    j = velocity_gradient(m, x, t)
    if j.ndim != 2:
        raise ValueError("rate_of_strain takes a single point")
    return SymmetricTensor2(j[0, 0], 0.5 * (j[0, 1] + j[1, 0]), j[1, 1])
