"""Kernel selection: compiled extension when built, numpy fallback otherwise.

Set ``SFWG_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _fallback

if os.environ.get("SFWG_PURE_PYTHON", "") not in ("", "0"):
    kernels = _fallback
    COMPILED = False
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:  # extension not built
        kernels = _fallback
        COMPILED = False

fallback = _fallback
