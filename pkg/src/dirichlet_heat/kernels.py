"""Kernel selection: compiled extension when importable, numpy/Python otherwise.

Set ``DIRICHLET_HEAT_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_compiled = None
if not os.environ.get("DIRICHLET_HEAT_PURE"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _compiled = None

MAX_COMPILED_K = 1 << 31


def sensor_scan(r_fixed: int, bits: int, K: int, backend: str | None = None):
    """min_{k<=K} k |sin(pi {k r})| with r = r_fixed / 2^bits; returns (value, argmin)."""
    use = backend or BACKEND
    if use == "compiled" and _compiled is not None and bits == 128 and K < MAX_COMPILED_K:
        return _compiled.sensor_scan_128(r_fixed >> 64, r_fixed & ((1 << 64) - 1), K)
    return _kernels_py.sensor_scan(r_fixed, bits, K)


def dirichlet_sup(coeffs, lambdas, times, backend: str | None = None):
    import numpy as np
    args = [np.ascontiguousarray(x, dtype=float) for x in (coeffs, lambdas, times)]
    if (backend or BACKEND) == "compiled" and _compiled is not None:
        return _compiled.dirichlet_sup(*args)
    return _kernels_py.dirichlet_sup(*args)


def dirichlet_sup_many(coeffs, lambdas, times, backend: str | None = None):
    import numpy as np
    c = np.ascontiguousarray(coeffs, dtype=float)
    lam = np.ascontiguousarray(lambdas, dtype=float)
    t = np.ascontiguousarray(times, dtype=float)
    out = np.empty(c.shape[0])
    if (backend or BACKEND) == "compiled" and _compiled is not None:
        _compiled.dirichlet_sup_many(c, lam, t, out)
    else:
        _kernels_py.dirichlet_sup_many(c, lam, t, out)
    return out
