"""Hot kernels with a compiled backend and a NumPy fallback.

The Cython extension ``_cimpl`` is used when it has been built; set the
environment variable ``QREL_PURE_PYTHON=1`` to force the NumPy version.
``BACKEND`` names the implementation that was selected at import.
"""
import os

from . import _pyimpl

if os.environ.get("QREL_PURE_PYTHON"):
    _impl = _pyimpl
else:
    try:
        from . import _cimpl as _impl
    except ImportError:
        _impl = _pyimpl

BACKEND = "cython" if _impl is not _pyimpl else "python"

iterate_map = _impl.iterate_map
toeplitz_bilinear = _impl.toeplitz_bilinear

__all__ = ["BACKEND", "iterate_map", "toeplitz_bilinear"]
