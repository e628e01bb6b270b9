"""Hot inner-loop kernels with a compiled backend and a numpy fallback.

The Cython extension ``palmnut._ckernels`` is used when it was built and
imports cleanly; otherwise the numpy versions in ``palmnut._pykernels`` are
used. Set ``PALMNUT_PURE_PYTHON=1`` before import to force the fallback, or
call :func:`set_backend` at runtime (the benchmark does this).

All wrappers accept arrays of any shape and return arrays of the same shape.
"""
import os
from contextlib import contextmanager

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

if _ckernels is not None and not os.environ.get("PALMNUT_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def available_backends():
    return sorted(_BACKENDS)


def set_backend(name):
    """Select the kernel backend; returns the previously active name."""
    global BACKEND
    if name not in _BACKENDS:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available_backends()}")
    previous, BACKEND = BACKEND, name
    return previous


@contextmanager
def backend(name):
    previous = set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def _as_rows(x):
    return np.ascontiguousarray(x, dtype=np.float64).reshape(-1, x.shape[-1])


def dwt4_last_axis(x, inverse=False):
    """One periodic D4 level along the last axis of a real array."""
    impl = _BACKENDS[BACKEND]
    rows = _as_rows(x)
    fn = impl.dwt4_rows_inverse if inverse else impl.dwt4_rows_forward
    return fn(rows).reshape(x.shape)


def unit_modulus(z):
    """Elementwise ``z / |z|`` with ``0 / 0 = 1``."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    if BACKEND == "cython":
        out = _ckernels.unit_modulus(z.reshape(-1).view(np.float64))
        return out.view(np.complex128).reshape(z.shape)
    return _pykernels.unit_modulus(z)


def huber_weights(mag_sq, xi):
    mag_sq = np.ascontiguousarray(mag_sq, dtype=np.float64)
    impl = _BACKENDS[BACKEND]
    return impl.huber_weights(mag_sq.reshape(-1), float(xi)).reshape(mag_sq.shape)


def huber_sum(mag_sq, xi):
    mag_sq = np.ascontiguousarray(mag_sq, dtype=np.float64)
    return float(_BACKENDS[BACKEND].huber_sum(mag_sq.reshape(-1), float(xi)))


def soft_threshold(a, tau):
    """Shrink the modulus of each entry by ``tau`` (scalar or array)."""
    if BACKEND != "cython":
        return _pykernels.soft_threshold(a, tau)
    tau = np.ascontiguousarray(np.broadcast_to(np.asarray(tau, dtype=np.float64), a.shape))
    tau = tau.reshape(-1)
    if np.iscomplexobj(a):
        a = np.ascontiguousarray(a, dtype=np.complex128)
        out = _ckernels.soft_threshold_complex(a.reshape(-1).view(np.float64), tau)
        return out.view(np.complex128).reshape(a.shape)
    a = np.ascontiguousarray(a, dtype=np.float64)
    return _ckernels.soft_threshold_real(a.reshape(-1), tau).reshape(a.shape)
