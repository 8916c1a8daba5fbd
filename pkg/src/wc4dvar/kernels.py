"""Backend selection for the window sweeps.

The compiled extension ``_ckernels`` is used when importable.  Setting
``WC4DVAR_PURE_PYTHON=1`` forces the numpy fallback.  ``BACKEND`` names the
active implementation.
"""
import os

from . import _pykernels as python_backend

try:
    if os.environ.get("WC4DVAR_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python backend requested")
    from . import _ckernels as compiled_backend
except ImportError:
    compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

l96_integrate = _active.l96_integrate
l96_forward = _active.l96_forward
l96_backward = _active.l96_backward
advection_integrate = _active.advection_integrate
advection_forward = _active.advection_forward
advection_backward = _active.advection_backward
