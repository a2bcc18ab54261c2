"""Vertex curvatures, the curvature Jacobian, the alpha-Laplacian and flow linearizations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import WeightedSurface, euler_characteristic
from .metric import ConformalState
from .triangle import DegenerateFaceError, FaceData, evaluate_faces

TWO_PI = 2.0 * np.pi
ZERO_EIG_RTOL = 1e-8

LINEARIZABLE = ("ricci", "normalized_ricci", "modified_ricci", "calabi", "modified_calabi")


def _require_admissible(data: FaceData) -> None:
    bad = data.degenerate
    if bad.size:
        raise DegenerateFaceError(
            f"faces {bad.tolist()} are not admissible; pass use_extension=True for extended curvature",
            bad,
        )


def curvature_from_faces(surface: WeightedSurface, data: FaceData) -> np.ndarray:
    t = surface.triangulation
    return TWO_PI - kernels.scatter_vertices(t.faces, data.angles, t.n_vertices)


def gauss_bonnet_residual(surface: WeightedSurface, data: FaceData, K: np.ndarray, hyperbolic: bool) -> float:
    total = 2.0 * np.pi * euler_characteristic(surface.triangulation)
    if hyperbolic:
        total += float(np.sum(np.pi - data.angles.sum(axis=1)))
    return float(np.sum(K) - total)


def classical_curvature(surface: WeightedSurface, state: ConformalState, use_extension: bool = False) -> np.ndarray:
    data = evaluate_faces(surface, state.u, state.geometry)
    if not use_extension:
        _require_admissible(data)
    return curvature_from_faces(surface, data)


def alpha_curvature(surface: WeightedSurface, state: ConformalState, use_extension: bool = False) -> np.ndarray:
    K = classical_curvature(surface, state, use_extension)
    return K * np.exp(-state.alpha * state.u)


def jacobian_from_faces(surface: WeightedSurface, data: FaceData) -> np.ndarray:
    """Lambda assembled from per-face blocks; degenerate faces contribute nothing."""
    t = surface.triangulation
    return -kernels.assemble_blocks(t.faces, data.jacobians, t.n_vertices)


def curvature_jacobian(surface: WeightedSurface, state: ConformalState) -> np.ndarray:
    """Dense ``Lambda = dK/du``."""
    data = evaluate_faces(surface, state.u, state.geometry, jacobian=True)
    _require_admissible(data)
    return jacobian_from_faces(surface, data)


def alpha_laplacian(surface: WeightedSurface, state: ConformalState, g) -> np.ndarray:
    lam = curvature_jacobian(surface, state)
    return -np.exp(-state.alpha * state.u) * (lam @ np.asarray(g, dtype=np.float64))


def _sqrt_psd(q: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (q + q.T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _normalized_average(surface: WeightedSurface, state: ConformalState) -> tuple[float, float]:
    chi = euler_characteristic(surface.triangulation)
    s = float(np.sum(np.exp(state.alpha * state.u)))
    return TWO_PI * chi / s, s


def _check_kind(kind: str, state: ConformalState) -> None:
    if kind not in LINEARIZABLE:
        raise ValueError(f"unknown flow kind {kind!r}; expected one of {LINEARIZABLE}")
    if kind == "normalized_ricci" and state.geometry.is_hyperbolic:
        raise ValueError("normalized_ricci is defined only for Euclidean background geometry")


def flow_jacobian(surface: WeightedSurface, state: ConformalState, kind: str) -> np.ndarray:
    """Jacobian of the flow field at ``state`` (non-symmetric in general).

    For the Calabi kinds the terms carrying derivatives of Lambda and of the
    ``e^{-alpha u}`` prefactor are dropped; both vanish at fixed points.
    """
    _check_kind(kind, state)
    a = state.alpha
    lam = curvature_jacobian(surface, state)
    w = np.exp(-a * state.u)
    R = classical_curvature(surface, state) * w
    dR = w[:, None] * lam - a * np.diag(R)  # dR_alpha/du
    if kind in ("ricci", "modified_ricci"):
        return -dR
    if kind == "normalized_ricci":
        r_av, s = _normalized_average(surface, state)
        r = np.exp(a * state.u)
        return -dR - (a * r_av / s) * np.outer(np.ones_like(r), r)
    return -(w[:, None] * lam) @ dR


def linearization_spectrum(
    surface: WeightedSurface,
    state: ConformalState,
    kind: str,
    alpha: float | None = None,
    target=None,
) -> np.ndarray:
    """Ascending eigenvalues of the flow linearization, through a symmetric similarity.

    ``alpha`` defaults to ``state.alpha``. ``target`` is accepted for the
    modified kinds for interface symmetry; at a fixed point it coincides with
    the current alpha-curvature, which is what the derivative uses.
    """
    if alpha is not None and float(alpha) != state.alpha:
        state = ConformalState(state.f, state.u, state.geometry, float(alpha))
    _check_kind(kind, state)
    a = state.alpha
    lam = curvature_jacobian(surface, state)
    half = np.exp(-0.5 * a * state.u)
    q = half[:, None] * lam * half[None, :]
    R = classical_curvature(surface, state) * np.exp(-a * state.u)
    if kind in ("ricci", "modified_ricci"):
        m = -q + a * np.diag(R)
    elif kind == "normalized_ricci":
        r_av, s = _normalized_average(surface, state)
        rh = np.exp(0.5 * a * state.u)
        m = -q + a * np.diag(R) - (a * r_av / s) * np.outer(rh, rh)
    else:
        root = _sqrt_psd(q)
        m = -root @ (q - a * np.diag(R)) @ root
    return np.linalg.eigvalsh(0.5 * (m + m.T))


def classify_spectrum(eigs, rtol: float = ZERO_EIG_RTOL) -> dict[str, int]:
    eigs = np.asarray(eigs)
    scale = float(np.max(np.abs(eigs))) if eigs.size else 0.0
    zero = np.abs(eigs) < rtol * scale
    return {
        "negative": int(np.sum((eigs < 0) & ~zero)),
        "zero": int(np.sum(zero)),
        "positive": int(np.sum((eigs > 0) & ~zero)),
    }


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    K: np.ndarray
    R_alpha: np.ndarray
    extended: np.ndarray  # per face, True where the extension was used
    jacobian: np.ndarray | None
    gauss_bonnet_residual: float
    alpha: float
    geometry: str
    eigenvalues: np.ndarray | None = None

    @property
    def admissible(self) -> bool:
        return not bool(np.any(self.extended))

    def to_dict(self) -> dict:
        out = {
            "geometry": self.geometry,
            "alpha": self.alpha,
            "admissible": self.admissible,
            "degenerate_faces": np.flatnonzero(self.extended).tolist(),
            "gauss_bonnet_residual": self.gauss_bonnet_residual,
            "K": self.K.tolist(),
            "R_alpha": self.R_alpha.tolist(),
        }
        if self.eigenvalues is not None:
            out["eigenvalues"] = self.eigenvalues.tolist()
            out["eigenvalue_signs"] = classify_spectrum(self.eigenvalues)
        return out


def curvature_report(
    surface: WeightedSurface,
    state: ConformalState,
    *,
    use_extension: bool = True,
    jacobian: bool = False,
    spectrum: bool = False,
) -> CurvatureReport:
    """K, R_alpha and the Gauss-Bonnet residual; with ``spectrum`` the eigenvalues of Lambda."""
    data = evaluate_faces(surface, state.u, state.geometry, jacobian=jacobian or spectrum)
    if not use_extension:
        _require_admissible(data)
    K = curvature_from_faces(surface, data)
    lam = eigs = None
    if jacobian or spectrum:
        _require_admissible(data)
        lam = jacobian_from_faces(surface, data)
        if spectrum:
            eigs = np.linalg.eigvalsh(lam)
    return CurvatureReport(
        K=K,
        R_alpha=K * np.exp(-state.alpha * state.u),
        extended=data.corner >= 0,
        jacobian=lam if jacobian else None,
        gauss_bonnet_residual=gauss_bonnet_residual(surface, data, K, state.geometry.is_hyperbolic),
        alpha=state.alpha,
        geometry=state.geometry.value,
        eigenvalues=eigs,
    )
