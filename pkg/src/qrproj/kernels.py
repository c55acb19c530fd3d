"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``QRPROJ_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the cross-backend tests).
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("QRPROJ_PURE_PYTHON"):
    try:
        from . import _ext as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

apply_1q = _impl.apply_1q
apply_cphase = _impl.apply_cphase
apply_layers = _impl.apply_layers
fwht_rows = _impl.fwht_rows
jacobi_sweeps = _impl.jacobi_sweeps


def compiled():
    """Return the compiled module, or None if it was not built."""
    try:
        from . import _ext
    except ImportError:
        return None
    return _ext
