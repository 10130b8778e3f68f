"""Training-step kernels: compiled core with a NumPy fallback.

The active kernel is chosen once at import time: the compiled Cython
extension when it is available, the NumPy implementation otherwise.
Set ``CODAIMP_KERNEL=numpy`` or ``CODAIMP_KERNEL=cython`` to force one
(the latter raises if the extension was not built).  Both kernels
implement the identical contract; ``benchmarks/bench_kernels.py``
compares their speed.
"""

import os

from . import numpy_kernel

_choice = os.environ.get("CODAIMP_KERNEL", "auto").strip().lower()
if _choice not in ("auto", "cython", "numpy"):
    raise ValueError(
        f"CODAIMP_KERNEL={_choice!r} not understood; use 'auto', 'cython' or 'numpy'"
    )

if _choice == "numpy":
    _impl = numpy_kernel
else:
    try:
        from . import _fastnet as _impl
    except ImportError:
        if _choice == "cython":
            raise
        _impl = numpy_kernel

KERNEL_NAME = _impl.NAME
train_batch = _impl.train_batch

__all__ = ["KERNEL_NAME", "train_batch", "numpy_kernel"]
