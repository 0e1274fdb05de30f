"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise (or when the
``TSFUZZY_PURE_PYTHON`` environment variable is set) the numpy fallback is
used.  Both expose ``rule_weights`` and ``regressor_matrix``.
"""
import os

from . import _kernels_py

MOVING = _kernels_py.MOVING
MATCHING = _kernels_py.MATCHING

if os.environ.get("TSFUZZY_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

rule_weights = _impl.rule_weights
regressor_matrix = _impl.regressor_matrix


def get_backend(name):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
