"""Backend selection for the per-edge and per-face kernels.

numba is used when importable unless ``DCSFLOW_DISABLE_NUMBA`` is set to a
truthy value, in which case the vectorised numpy path is used. The choice is
made once at import time; :data:`BACKEND` records it.
"""

from __future__ import annotations

import logging
import os

from . import _kernels_numpy

logger = logging.getLogger(__name__)

_disabled = os.environ.get("DCSFLOW_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

if _disabled:
    _impl = _kernels_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _kernels_numba as _impl  # noqa: F811
        BACKEND = "numba"
    except ImportError:  # pragma: no cover - numba is a declared dependency
        logger.warning("numba unavailable, falling back to numpy kernels")
        _impl = _kernels_numpy
        BACKEND = "numpy"

ACOSH_SLACK = _kernels_numpy.ACOSH_SLACK

degenerate_corner = _impl.degenerate_corner
face_angles = _impl.face_angles
face_jacobians = _impl.face_jacobians
scatter_vertices = _impl.scatter_vertices
assemble_blocks = _impl.assemble_blocks
edge_lengths = _impl.edge_lengths
edge_length_derivatives = _impl.edge_length_derivatives
side_derivatives = _impl.side_derivatives

__all__ = [
    "BACKEND",
    "degenerate_corner",
    "face_angles",
    "face_jacobians",
    "scatter_vertices",
    "assemble_blocks",
    "edge_lengths",
    "edge_length_derivatives",
    "side_derivatives",
]
