"""Backend selection for the numeric kernels.

Prefers the compiled Cython core; falls back to the numpy implementation
when the extension was not built. Set DESOCIAL_KERNELS=python (or =c) to
force a backend; forcing the compiled one raises if it is missing.
"""

from __future__ import annotations

import os

from . import _numpy_impl

_FORCE = os.environ.get("DESOCIAL_KERNELS", "auto").lower()

if _FORCE == "python":
    _impl = _numpy_impl
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _FORCE == "c":
            raise
        _impl = _numpy_impl
        BACKEND = "python"

csr_matmul = _impl.csr_matmul
segment_softmax = _impl.segment_softmax
segment_softmax_backward = _impl.segment_softmax_backward
edge_rowdot = _impl.edge_rowdot
scatter_rows_add = _impl.scatter_rows_add
gat_edge_logits = _impl.gat_edge_logits
gat_edge_logits_backward = _impl.gat_edge_logits_backward

__all__ = [
    "BACKEND",
    "csr_matmul",
    "segment_softmax",
    "segment_softmax_backward",
    "edge_rowdot",
    "scatter_rows_add",
    "gat_edge_logits",
    "gat_edge_logits_backward",
]
