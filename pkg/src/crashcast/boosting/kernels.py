"""Kernel backend selection: compiled extension when built, numpy otherwise.

Set CRASHCAST_FORCE_PY_KERNELS=1 to force the numpy fallback (used by the
benchmark to compare both backends in one process).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("CRASHCAST_FORCE_PY_KERNELS") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

scan_best_split = _impl.scan_best_split
predict_margins_one = _impl.predict_margins_one
