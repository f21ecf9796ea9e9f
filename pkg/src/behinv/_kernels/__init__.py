"""Hot loops, compiled when the Cython extension is built.

The extension is picked at import; set ``BEHINV_PURE_PYTHON=1`` to force the
NumPy fallback. ``BACKEND`` reports which one is active.
"""

import os

from . import _fallback

fallback = _fallback

if os.environ.get("BEHINV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

compiled = _impl if BACKEND == "cython" else None

simulate_lti = _impl.simulate_lti
block_hankel = _impl.block_hankel
admm_box = _impl.admm_box

__all__ = ["BACKEND", "simulate_lti", "block_hankel", "admm_box", "fallback", "compiled"]
