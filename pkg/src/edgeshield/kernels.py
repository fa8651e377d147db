"""Kernel backend selection: compiled extension when available, pure Python otherwise.

Set ``EDGESHIELD_PURE_KERNELS=1`` to force the pure-Python implementation
(used by the benchmark and for debugging).
"""

from __future__ import annotations

import os

if os.environ.get("EDGESHIELD_PURE_KERNELS"):
    from . import _purekernels as _impl

    KERNEL_BACKEND = "pure"
else:
    try:
        from . import _nativekernels as _impl  # type: ignore[no-redef]

        KERNEL_BACKEND = "native"
    except ImportError:
        from . import _purekernels as _impl

        KERNEL_BACKEND = "pure"

softmax = _impl.softmax
log_softmax = _impl.log_softmax
argmax_lowest = _impl.argmax_lowest
cross_entropy_from_logits = _impl.cross_entropy_from_logits
confusion_update = _impl.confusion_update
micro_tallies = _impl.micro_tallies
