"""Hot-loop dispatch: compiled kernels when built, numpy otherwise.

Set MULTIPLIER_LAB_PURE=1 to force the numpy path.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "numpy"
if not os.environ.get("MULTIPLIER_LAB_PURE"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

bohr_mask = _impl.bohr_mask
sinc_train = _impl.sinc_train
