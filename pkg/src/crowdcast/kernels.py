"""Kernel dispatch: compiled extension when available, NumPy fallback otherwise.

Set CROWDCAST_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the kernel-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("CROWDCAST_PURE_PYTHON"):
    _impl = _kernels_py
    HAVE_COMPILED = False
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        HAVE_COMPILED = True
    except ImportError:
        _impl = _kernels_py
        HAVE_COMPILED = False

ses_sse = _impl.ses_sse
holt_sse = _impl.holt_sse
arma_css = _impl.arma_css
arma_fit = _impl.arma_fit
