"""Hot simulation kernels with a compiled core and a pure NumPy fallback.

The compiled Cython extension (``radionet._kernels._core``) and the pure
backend (``radionet._kernels.pure``) implement the same functions with
bit-identical outputs; which one is active is decided once at import time.
Set ``RADIONET_PURE_KERNELS=1`` to force the fallback.
"""

from __future__ import annotations

import os

_NAMES = [
    "keyed_uniforms",
    "keyed_u64",
    "bernoulli_bits",
    "bernoulli_words",
    "nocd_round",
    "beep_round",
    "decay_fixed",
    "fast_decay",
    "decay_parts",
    "intercom",
    "beep_pipeline_up",
    "beep_pipeline_down",
    "beep_bitpairs",
]

if os.environ.get("RADIONET_PURE_KERNELS", "") not in ("", "0"):
    from . import pure as _backend

    BACKEND = "pure"
else:
    try:
        from . import _core as _backend  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        from . import pure as _backend

        BACKEND = "pure"

globals().update({name: getattr(_backend, name) for name in _NAMES})

__all__ = _NAMES + ["BACKEND"]
