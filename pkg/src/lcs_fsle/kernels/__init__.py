"""Hot-loop kernels with two interchangeable backends.

The backend is chosen by the ``LCS_FSLE_BACKEND`` environment variable
(``numba`` or ``numpy``; default ``numba`` when numba imports).  Both expose
``aug_flow``, ``aug_record``, ``isle_scan`` and ``fsle_scan`` with identical
signatures.  ``set_backend`` switches at runtime, e.g. for cross-checks.
"""

import contextlib
import importlib
import os

BACKENDS = ("numba", "numpy")

_active = None


def _load(name):
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")
    return importlib.import_module(f"{__name__}._{name}")


def _default():
    name = os.environ.get("LCS_FSLE_BACKEND", "numba").strip().lower()
    if name == "numba":
        try:
            return _load("numba")
        except ImportError:
            return _load("numpy")
    return _load(name)


def get_kernels():
    global _active
    if _active is None:
        _active = _default()
    return _active


def backend_name():
    return get_kernels().__name__.rsplit("._", 1)[-1]


def set_backend(name):
    global _active
    _active = _load(name)
    return _active


@contextlib.contextmanager
def use_backend(name):
    global _active
    prev = get_kernels()
    _active = _load(name)
    try:
        yield _active
    finally:
        _active = prev


def set_threads(n):
    """Worker threads for the numba ``prange`` loops; no-op for numpy."""
    if n is None:
        return
    try:
        import numba
    except ImportError:
        return
    numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
