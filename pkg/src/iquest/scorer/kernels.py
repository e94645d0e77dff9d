"""Kernel backend selection: compiled extension if available, numpy otherwise.

``IQUEST_KERNELS=numpy`` or ``IQUEST_KERNELS=cython`` forces a backend (the
latter fails loudly when the extension was not built). Both backends expose
``aggregate_batch``, ``mlp_batch`` and ``loss_and_grads`` with identical
semantics; results agree to floating-point roundoff, not bit-for-bit.
"""

from __future__ import annotations

import os

from . import _kernels_np

_requested = os.environ.get("IQUEST_KERNELS", "").strip().lower()

if _requested in ("numpy", "py", "python"):
    _impl = _kernels_np
    BACKEND = "numpy"
elif _requested in ("", "cython", "cy"):
    try:
        from . import _kernels_cy as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested:
            raise ImportError(
                "IQUEST_KERNELS=cython but the compiled extension is not built; "
                "reinstall the package with Cython and a C compiler available"
            )
        _impl = _kernels_np
        BACKEND = "numpy"
else:
    raise ValueError(f"unknown IQUEST_KERNELS value {_requested!r}")

LOG_CLAMP = _kernels_np.LOG_CLAMP

aggregate_batch = _impl.aggregate_batch
mlp_batch = _impl.mlp_batch
loss_and_grads = _impl.loss_and_grads
