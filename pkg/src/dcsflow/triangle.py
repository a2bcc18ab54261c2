"""Per-face geometry: inner angles, their extension by constants, area, and
the angle Jacobian with respect to the flow coordinates ``u``.

Single-face helpers take side lengths ordered opposite the corners, i.e.
``(l_jk, l_ik, l_ij)`` for face ``(i, j, k)``. :func:`evaluate_faces` does the
same work for every face of a mesh at once through the selected kernel
backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import BackgroundGeometry, WeightedSurface
from .metric import ConformalState, df_du, edge_length_derivatives, edge_lengths_from_f, u_to_f


class DegenerateFaceError(ValueError):
    """A face violates a strict triangle inequality where admissibility is required."""

    def __init__(self, message: str, faces=()):
        super().__init__(message)
        self.faces = tuple(int(f) for f in faces)


def _sides(lengths) -> np.ndarray:
    s = np.asarray(lengths, dtype=np.float64).reshape(1, 3)
    if np.any(~(s > 0)):
        raise ValueError(f"side lengths must be positive, got {s.ravel().tolist()}")
    return s


def is_admissible(lengths) -> bool:
    a, b, c = (float(x) for x in lengths)
    return a < b + c and b < a + c and c < a + b


def inner_angles(lengths, geometry) -> tuple[float, float, float]:
    """Inner angles by the (hyperbolic) law of cosines; the face must be admissible."""
    g = BackgroundGeometry.parse(geometry)
    s = _sides(lengths)
    angles, corner = kernels.face_angles(s, g.is_hyperbolic)
    if corner[0] >= 0:
        raise DegenerateFaceError(
            f"side lengths {s.ravel().tolist()} violate the triangle inequality; "
            "use extended_inner_angles"
        )
    return tuple(float(x) for x in angles[0])


def extended_inner_angles(lengths, geometry) -> tuple[float, float, float]:
    """Inner angles extended by constants: ``(pi, 0, 0)`` opposite an over-long side."""
    g = BackgroundGeometry.parse(geometry)
    angles, _ = kernels.face_angles(_sides(lengths), g.is_hyperbolic)
    return tuple(float(x) for x in angles[0])


def hyperbolic_area(angles) -> float:
    return max(float(np.pi - np.sum(angles)), 0.0)


@dataclass(frozen=True, eq=False)
class FaceData:
    """All per-face quantities of one conformal state."""

    u: np.ndarray
    f: np.ndarray
    lengths: np.ndarray  # per edge
    sides: np.ndarray  # (F, 3), opposite each corner
    angles: np.ndarray  # (F, 3), extended
    corner: np.ndarray  # (F,), -1 when admissible
    jacobians: np.ndarray | None = None  # (F, 3, 3), zero on degenerate faces

    @property
    def degenerate(self) -> np.ndarray:
        return np.flatnonzero(self.corner >= 0)

    @property
    def admissible(self) -> bool:
        return not np.any(self.corner >= 0)


def side_derivatives(surface: WeightedSurface, u, f, lengths, geometry) -> np.ndarray:
    """``[f, p, c]`` = d(side p)/d(u at corner c) for every face."""
    t = surface.triangulation
    dl = edge_length_derivatives(surface, f, lengths, geometry)
    return kernels.side_derivatives(t.faces, t.face_sides, t.side_endpoint, dl, df_du(surface, u, geometry))


def evaluate_faces(surface: WeightedSurface, u, geometry, *, jacobian: bool = False) -> FaceData:
    g = BackgroundGeometry.parse(geometry)
    u = np.asarray(u, dtype=np.float64)
    f = u_to_f(surface, u, g)
    lengths = edge_lengths_from_f(surface, f, g)
    sides = lengths[surface.triangulation.face_sides]
    angles, corner = kernels.face_angles(sides, g.is_hyperbolic)
    jac = None
    if jacobian:
        ds = side_derivatives(surface, u, f, lengths, g)
        jac = kernels.face_jacobians(sides, ds, g.is_hyperbolic)
    return FaceData(u, f, lengths, sides, angles, corner, jac)


def angle_jacobian(surface: WeightedSurface, state: ConformalState, face: int) -> np.ndarray:
    """d(theta_i, theta_j, theta_k)/d(u_i, u_j, u_k) for one admissible face.

    Built by the chain rule through the law of cosines, the edge length
    formulas and the f(u) map. Symmetric; negative semi-definite with kernel
    (1,1,1) in Euclidean geometry and negative definite in hyperbolic geometry
    when the structure conditions hold.
    """
    data = evaluate_faces(surface, state.u, state.geometry, jacobian=True)
    if data.corner[face] >= 0:
        raise DegenerateFaceError(f"face {face} is not admissible; its angle Jacobian is undefined", [face])
    return data.jacobians[face].copy()


@dataclass(frozen=True)
class TriangleGeometry:
    face: tuple[int, int, int]
    lengths: tuple[float, float, float]
    admissible: bool
    angles: tuple[float, float, float]
    area: float
    jacobian: np.ndarray | None


def triangle_geometry(surface: WeightedSurface, state: ConformalState, face: int) -> TriangleGeometry:
    data = evaluate_faces(surface, state.u, state.geometry, jacobian=True)
    ok = bool(data.corner[face] < 0)
    angles = tuple(float(x) for x in data.angles[face])
    area = hyperbolic_area(angles) if state.geometry.is_hyperbolic else float("nan")
    return TriangleGeometry(
        face=tuple(int(v) for v in surface.triangulation.faces[face]),
        lengths=tuple(float(x) for x in data.sides[face]),
        admissible=ok,
        angles=angles,
        area=area,
        jacobian=data.jacobians[face].copy() if ok else None,
    )
