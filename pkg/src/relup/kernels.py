"""Backend selection for the numerical kernels.

The compiled Cython module is preferred; the numpy implementation is used
when it is missing or when ``RELUP_PURE_PYTHON`` is set to a true value.
"""
import os

from . import _kernels_py

if os.environ.get("RELUP_PURE_PYTHON", "").lower() in ("1", "true", "yes"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

norm_cdf = _impl.norm_cdf
norm_pdf = _impl.norm_pdf
norm_ppf = _impl.norm_ppf
crack_size = _impl.crack_size
equivalent_lsf = _impl.equivalent_lsf

__all__ = ["BACKEND", "norm_cdf", "norm_pdf", "norm_ppf", "crack_size", "equivalent_lsf"]
