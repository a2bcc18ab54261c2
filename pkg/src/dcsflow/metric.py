"""Edge lengths from discrete conformal factors, and the f <-> u coordinate maps.

Flows and solvers work in ``u``. In Euclidean geometry ``u = f``. In
hyperbolic geometry ``u = f`` on vertices with ``epsilon = 0`` while on
``epsilon = 1`` vertices ``u = -asinh(exp(-f)) < 0``, so ``exp(f) = sinh(r)``
with ``u = ln tanh(r/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import BackgroundGeometry, WeightedSurface

ACOSH_SLACK = kernels.ACOSH_SLACK


class InvalidMetricError(ValueError):
    """An edge length formula left its domain (structure condition (1) fails)."""

    def __init__(self, message: str, edge: tuple[int, int] | None = None):
        super().__init__(message)
        self.edge = edge


class DomainExitError(ValueError):
    """A hyperbolic epsilon=1 vertex reached u >= 0 (essential singularity)."""

    def __init__(self, message: str, vertices=()):
        super().__init__(message)
        self.vertices = tuple(int(v) for v in vertices)


def _geom(geometry) -> BackgroundGeometry:
    return BackgroundGeometry.parse(geometry)


def f_to_u(surface: WeightedSurface, f, geometry) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if not _geom(geometry).is_hyperbolic:
        return f.copy()
    u = f.copy()
    m = surface.epsilon == 1
    # equals 0.5*ln((sqrt(1+e^{2f})-1)/(sqrt(1+e^{2f})+1)) without the cancellation
    u[m] = -np.arcsinh(np.exp(-f[m]))
    return u


def check_domain(surface: WeightedSurface, u, geometry) -> None:
    if not _geom(geometry).is_hyperbolic:
        return
    u = np.asarray(u)
    bad = np.flatnonzero((surface.epsilon == 1) & ~(u < 0))
    if bad.size:
        raise DomainExitError(
            f"domain exit: u >= 0 at epsilon=1 vertices {bad.tolist()}", vertices=bad
        )


def u_to_f(surface: WeightedSurface, u, geometry) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if not _geom(geometry).is_hyperbolic:
        return u.copy()
    check_domain(surface, u, geometry)
    f = u.copy()
    m = surface.epsilon == 1
    um = u[m]
    # e^f = 2 e^u / (1 - e^{2u})
    f[m] = np.log(2.0) + um - np.log1p(-np.exp(2.0 * um))
    return f


def df_du(surface: WeightedSurface, u, geometry) -> np.ndarray:
    """Diagonal of the Jacobian df/du."""
    u = np.asarray(u, dtype=np.float64)
    out = np.ones_like(u)
    if _geom(geometry).is_hyperbolic:
        m = surface.epsilon == 1
        out[m] = 1.0 / np.tanh(-u[m])  # = sqrt(1 + e^{2f})
    return out


@dataclass(frozen=True, eq=False)
class ConformalState:
    f: np.ndarray
    u: np.ndarray
    geometry: BackgroundGeometry
    alpha: float = 0.0

    @classmethod
    def from_u(cls, surface: WeightedSurface, u, geometry, alpha: float = 0.0) -> "ConformalState":
        g = _geom(geometry)
        u = np.array(u, dtype=np.float64)
        if u.shape != (surface.n_vertices,):
            raise ValueError(f"u needs {surface.n_vertices} entries, got {u.shape}")
        return cls(u_to_f(surface, u, g), u, g, float(alpha))

    @classmethod
    def from_f(cls, surface: WeightedSurface, f, geometry, alpha: float = 0.0) -> "ConformalState":
        g = _geom(geometry)
        f = np.array(f, dtype=np.float64)
        if f.shape != (surface.n_vertices,):
            raise ValueError(f"f needs {surface.n_vertices} entries, got {f.shape}")
        return cls(f, f_to_u(surface, f, g), g, float(alpha))

    @classmethod
    def zeros(cls, surface: WeightedSurface, geometry, alpha: float = 0.0) -> "ConformalState":
        return cls.from_f(surface, np.zeros(surface.n_vertices), geometry, alpha)

    def with_u(self, surface: WeightedSurface, u) -> "ConformalState":
        return ConformalState.from_u(surface, u, self.geometry, self.alpha)


def _edge_arguments(eps_i, eps_j, eta, fi, fj, hyperbolic):
    if hyperbolic:
        root = np.sqrt((1.0 + eps_i * np.exp(2 * fi)) * (1.0 + eps_j * np.exp(2 * fj)))
        return root + eta * np.exp(fi + fj), root
    d = fi - fj
    inner = eps_i * np.exp(d) + eps_j * np.exp(-d) + 2.0 * eta
    return inner * np.exp(fi + fj), inner


def edge_lengths_from_f(surface: WeightedSurface, f, geometry) -> np.ndarray:
    """Lengths of all edges, ordered like ``surface.triangulation.edges``."""
    g = _geom(geometry)
    f = np.ascontiguousarray(f, dtype=np.float64)
    t = surface.triangulation
    lengths, bad = kernels.edge_lengths(t.edge_i, t.edge_j, surface.epsilon, surface.eta, f, g.is_hyperbolic)
    if bad >= 0:
        edge = tuple(t.edges[bad].tolist())
        i, j = edge
        arg, aux = _edge_arguments(surface.epsilon[i], surface.epsilon[j], surface.eta[bad], f[i], f[j], g.is_hyperbolic)
        what = f"arccosh argument {arg:.17g} < 1" if g.is_hyperbolic else f"squared length {arg:.17g} <= 0"
        raise InvalidMetricError(f"invalid metric on edge {edge}: {what}", edge)
    return lengths


def edge_lengths(surface: WeightedSurface, state: ConformalState) -> np.ndarray:
    return edge_lengths_from_f(surface, state.f, state.geometry)


def edge_length(surface: WeightedSurface, state: ConformalState, edge) -> float:
    i, j = edge
    t = surface.triangulation
    t.edge_index(i, j)
    eps = surface.epsilon
    eta = surface.eta_of(i, j)
    hyper = state.geometry.is_hyperbolic
    arg, aux = _edge_arguments(eps[i], eps[j], eta, state.f[i], state.f[j], hyper)
    if hyper:
        if not arg >= 1.0 - ACOSH_SLACK:
            raise InvalidMetricError(f"invalid metric on edge {(i, j)}: arccosh argument {arg:.17g} < 1", (i, j))
        return float(np.arccosh(max(arg, 1.0)))
    if not aux > 0:
        raise InvalidMetricError(f"invalid metric on edge {(i, j)}: squared length {arg:.17g} <= 0", (i, j))
    return float(np.exp(0.5 * (state.f[i] + state.f[j])) * np.sqrt(aux))


def edge_length_derivatives(surface: WeightedSurface, f, lengths, geometry) -> np.ndarray:
    """``out[e, 0] = dl_e/df_i`` and ``out[e, 1] = dl_e/df_j`` for edge ``e = (i, j)``."""
    t = surface.triangulation
    return kernels.edge_length_derivatives(
        t.edge_i, t.edge_j, surface.epsilon, surface.eta,
        np.ascontiguousarray(f, dtype=np.float64), lengths, _geom(geometry).is_hyperbolic,
    )
