"""Selection of the trajectory-kernel backend.

The hot loops (per-step stochastic integration over 10^4..10^5 steps per
trajectory) exist twice: a numba-compiled version and a pure-numpy
reference version.  The environment variable ``PHOTONFILTER_BACKEND``
picks one:

* ``auto`` (default): numba if importable, else numpy
* ``numba``: require numba, fail loudly if missing
* ``numpy``: force the pure-numpy fallback

Both backends implement the same kernel signatures and the same
algorithms; ``photonfilter bench`` compares their speed.
"""

from __future__ import annotations

import os

ENV_VAR = "PHOTONFILTER_BACKEND"


def _detect() -> str:
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ValueError(
            f"{ENV_VAR} must be one of 'auto', 'numba', 'numpy'; got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


_ACTIVE = _detect()


def active_backend() -> str:
    """Name of the backend selected at import time ('numba' or 'numpy')."""
    return _ACTIVE


def get_kernels(name: str | None = None):
    """Return the kernel module for `name` (default: the active backend)."""
    name = name or _ACTIVE
    if name == "numba":
        from . import _kernels_numba as mod
    elif name == "numpy":
        from . import _kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}")
    return mod
