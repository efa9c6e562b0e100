"""Kernel backend selection.

The Monte Carlo engine runs its per-chunk work through one of two
implementations with identical semantics:

* ``numba``: JIT-compiled scalar loop (default when numba imports cleanly).
* ``numpy``: vectorized fallback with no compilation step.

Set the environment variable ``QSEP_BACKEND`` to ``numba`` or ``numpy`` to
force one; ``numba`` raises at import if the JIT stack is unusable. The
``benchmarks/bench_backends.py`` script compares their throughput.
"""

from __future__ import annotations

import os

from .errors import InvalidParameterError

_ENV_VAR = "QSEP_BACKEND"


def _resolve() -> str:
    requested = os.environ.get(_ENV_VAR, "auto").strip().lower() or "auto"
    if requested not in ("auto", "numba", "numpy"):
        raise InvalidParameterError(
            f"{_ENV_VAR} must be 'numba', 'numpy' or unset, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        from . import _kernels_numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


_ACTIVE = _resolve()

if _ACTIVE == "numba":
    from ._kernels_numba import simulate_chunk
else:
    from ._kernels_numpy import simulate_chunk  # noqa: F401


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return _ACTIVE
