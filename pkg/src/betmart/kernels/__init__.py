"""Hot-loop kernels with a compiled core and a pure numpy fallback.

The compiled extension (``betmart.kernels._core``, Cython) is preferred;
set ``BETMART_PURE_PYTHON=1`` to force the fallback. Both backends share
signatures and semantics; ``BACKEND`` names the one in use.
"""

from __future__ import annotations

import os

if os.environ.get("BETMART_PURE_PYTHON"):
    from betmart.kernels import _core_py as _impl

    BACKEND = "python"
else:
    try:
        from betmart.kernels import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from betmart.kernels import _core_py as _impl

        BACKEND = "python"

fold_constant = _impl.fold_constant
first_crossing_constant = _impl.first_crossing_constant
mixture_advance = _impl.mixture_advance
mixture_crossing = _impl.mixture_crossing
dp_two_point = _impl.dp_two_point

__all__ = [
    "BACKEND",
    "fold_constant",
    "first_crossing_constant",
    "mixture_advance",
    "mixture_crossing",
    "dp_two_point",
]
