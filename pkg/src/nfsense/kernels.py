"""Backend selection for the concentrated-likelihood kernel.

The compiled Cython extension is preferred when it imported cleanly; the
numpy fallback is always available. Set NFSENSE_PURE_PYTHON=1 to force the
fallback (used by the benchmark and backend-parity tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("NFSENSE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def objective_terms(qx, qy, x, y, k0_first, k0_step, theta, r, amplitude):
    return _impl.objective_terms(qx, qy, x, y, k0_first, k0_step, theta, r, amplitude)
