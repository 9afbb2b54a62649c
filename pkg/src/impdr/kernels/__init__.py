"""Backend selection for the horizon-rollout kernels.

Two interchangeable implementations exist:

* ``jit``       -- numba-compiled loops (default when numba imports cleanly)
* ``reference`` -- pure NumPy, no compilation

Set the environment variable ``IMPDR_BACKEND`` to ``numba`` or ``numpy``
before import to force one.  ``benchmarks/bench_kernels.py`` times the two
against each other; the test suite checks they agree.
"""

from __future__ import annotations

import os

from . import reference

_requested = os.environ.get("IMPDR_BACKEND", "auto").strip().lower()

if _requested in ("numpy", "python", "reference"):
    _impl = reference
    BACKEND = "numpy"
elif _requested in ("numba", "jit"):
    from . import jit as _impl  # noqa: F401  (hard requirement when forced)

    BACKEND = "numba"
elif _requested == "auto":
    try:
        from . import jit as _impl
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - depends on host
        _impl = reference
        BACKEND = "numpy"
else:
    raise ValueError(
        f"IMPDR_BACKEND={_requested!r} not understood; use 'numba' or 'numpy'"
    )

rollout_forward = _impl.rollout_forward
rollout_backward = _impl.rollout_backward
horizon_cost = _impl.horizon_cost


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND
