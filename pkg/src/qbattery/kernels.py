"""Backend selection for the hot kernels.

The compiled extension is used when importable; set ``QBATTERY_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("QBATTERY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

pauli_accumulate = _impl.pauli_accumulate
sign_integral = _impl.sign_integral

__all__ = ["BACKEND", "pauli_accumulate", "sign_integral"]
