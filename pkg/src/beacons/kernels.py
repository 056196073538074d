"""Hot-kernel selector.

Uses the compiled ``_kernels`` extension when it was built, else the
pure-Python twins. Set ``BEACONS_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("BEACONS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

gini_best_split = _impl.gini_best_split
ap_union_count = _impl.ap_union_count
contention_rates = _impl.contention_rates

__all__ = ["BACKEND", "gini_best_split", "ap_union_count", "contention_rates"]
