"""Extended Ricci energy, its gradient and Hessian, and a damped Newton solver
for prescribed alpha-curvature.

The energy is the line integral of a closed 1-form, so it is evaluated along
the straight segment from a base point; any base point in the coordinate
domain changes it by a constant only.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .curvature import curvature_from_faces, jacobian_from_faces
from .mesh import WeightedSurface, euler_characteristic
from .metric import ConformalState, DomainExitError, InvalidMetricError, check_domain
from .triangle import evaluate_faces

logger = logging.getLogger(__name__)

QUAD_TOL = 1e-10
DIVERGENCE_BOUND = 50.0
GAUGES = ("mean", "preserve")


class QuadratureError(RuntimeError):
    def __init__(self, message: str, face: int | None = None):
        super().__init__(message)
        self.face = face


class SolverError(RuntimeError):
    pass


class MaxIterationError(SolverError):
    pass


class SingularHessianError(SolverError):
    pass


class GaugeRequiredError(SolverError, ValueError):
    pass


def adaptive_simpson(func, a: float, b: float, tol: float = QUAD_TOL, max_depth: int = 40) -> float:
    """Adaptive Simpson with Richardson correction; raises QuadratureError past ``max_depth``.

    The local tolerance halves with each bisection but never drops below
    ``tol * 1e-6``: square-root kinks (angles near a degeneration) would
    otherwise need ~2 log2(1/tol) levels. Intervals accepted on the floor are
    few (a handful per kink and level), so their total stays far below ``tol``.
    """
    floor = tol * 1e-6
    fa, fm, fb = func(a), func(0.5 * (a + b)), func(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = func(0.5 * (lo + mid)), func(0.5 * (mid + hi))
        left = (mid - lo) * (flo + 4.0 * fl + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * fr + fhi) / 6.0
        delta = left + right - est
        if abs(delta) <= 15.0 * max(eps, floor) or (depth >= 6 and hi - lo < 1e-15):
            total += left + right + delta / 15.0
        elif depth >= max_depth:
            raise QuadratureError(f"adaptive Simpson did not converge on [{lo}, {hi}]")
        else:
            stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps, depth + 1))
    return total


def _segment(base: ConformalState, state: ConformalState) -> tuple[np.ndarray, np.ndarray]:
    if base.geometry is not state.geometry:
        raise ValueError("base and state use different background geometries")
    return base.u, state.u - base.u


def triangle_energy(
    surface: WeightedSurface, state: ConformalState, face: int, base_state: ConformalState, tol: float = QUAD_TOL
) -> float:
    """Integral of the extended angle 1-form of one face from ``base_state`` to ``state``."""
    u0, du = _segment(base_state, state)
    check_domain(surface, u0, state.geometry)
    verts = surface.triangulation.faces[face]
    dloc = du[verts]

    def integrand(s: float) -> float:
        data = evaluate_faces(surface, u0 + s * du, state.geometry)
        return float(data.angles[face] @ dloc)

    if not np.any(dloc):
        return 0.0
    try:
        return adaptive_simpson(integrand, 0.0, 1.0, tol)
    except QuadratureError as exc:
        raise QuadratureError(f"face {face}: {exc}", face) from None


def _vertex_term(u, u0, alpha: float, target) -> np.ndarray:
    if alpha == 0.0:
        return (2.0 * np.pi - target) * (u - u0)
    return 2.0 * np.pi * (u - u0) - target * (np.exp(alpha * u) - np.exp(alpha * u0)) / alpha


def _target(surface: WeightedSurface, target) -> np.ndarray:
    r = np.broadcast_to(np.asarray(target, dtype=np.float64), (surface.n_vertices,)).copy()
    if not np.all(np.isfinite(r)):
        raise ValueError("target curvature must be finite")
    return r


@dataclass(frozen=True, eq=False)
class EnergyEvaluation:
    value: float
    gradient: np.ndarray
    base_point: np.ndarray


def energy_gradient(surface: WeightedSurface, state: ConformalState, target, alpha: float | None = None) -> np.ndarray:
    a = state.alpha if alpha is None else float(alpha)
    data = evaluate_faces(surface, state.u, state.geometry)
    return curvature_from_faces(surface, data) - _target(surface, target) * np.exp(a * state.u)


def energy_hessian(surface: WeightedSurface, state: ConformalState, target, alpha: float | None = None) -> np.ndarray:
    """``Lambda - alpha diag(target e^{alpha u})``; degenerate faces contribute zero blocks."""
    a = state.alpha if alpha is None else float(alpha)
    data = evaluate_faces(surface, state.u, state.geometry, jacobian=True)
    return jacobian_from_faces(surface, data) - a * np.diag(_target(surface, target) * np.exp(a * state.u))


def total_energy(
    surface: WeightedSurface,
    state: ConformalState,
    alpha: float,
    target,
    base_state: ConformalState,
    tol: float = QUAD_TOL,
) -> EnergyEvaluation:
    """Extended energy at ``state`` measured from ``base_state``.

    The face sum and the ``2 pi`` part of the vertex integral combine into the
    line integral of ``K~ . du``; the target part has a closed form.
    """
    u0, du = _segment(base_state, state)
    check_domain(surface, u0, state.geometry)
    r = _target(surface, target)
    a = float(alpha)

    def integrand(s: float) -> float:
        data = evaluate_faces(surface, u0 + s * du, state.geometry)
        return float(curvature_from_faces(surface, data) @ du)

    curv = adaptive_simpson(integrand, 0.0, 1.0, tol) if np.any(du) else 0.0
    closed = _vertex_term(state.u, u0, a, r) - 2.0 * np.pi * du
    value = curv + float(np.sum(closed))
    return EnergyEvaluation(value, energy_gradient(surface, state, r, a), u0.copy())


@dataclass(frozen=True, eq=False)
class NewtonResult:
    state: ConformalState
    iterations: int
    residual: float
    gauge: str | None
    history: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual": self.residual,
            "gauge": self.gauge,
            "residual_history": list(self.history),
            "warnings": list(self.warnings),
        }


def needs_gauge(state: ConformalState, target: np.ndarray) -> bool:
    return not state.geometry.is_hyperbolic and bool(np.all(state.alpha * target == 0.0))


def _apply_gauge(u: np.ndarray, gauge: str, alpha: float, level: float) -> np.ndarray:
    if gauge == "mean" or alpha == 0.0:
        return u - (np.sum(u) - level) / u.size
    return u + np.log(level / np.sum(np.exp(alpha * u))) / alpha


def newton_solve(
    surface: WeightedSurface,
    initial: ConformalState,
    alpha: float,
    target,
    gauge: str | None = None,
    *,
    tol: float = 1e-11,
    max_iter: int = 100,
    max_halvings: int = 30,
) -> NewtonResult:
    """Minimize the extended energy by damped Newton until ``max|R~_alpha - target| < tol``.

    ``gauge`` is required in the Euclidean case with ``alpha * target == 0``:
    ``"mean"`` pins ``sum(u) = 0`` and ``"preserve"`` keeps the initial value of
    ``sum(u)`` (alpha = 0) or ``sum(exp(alpha u))``.
    """
    a = float(alpha)
    r = _target(surface, target)
    state = ConformalState.from_u(surface, initial.u, initial.geometry, a)
    notes: list[str] = []
    if np.any(a * r > 0):
        msg = "alpha * target > 0 at some vertex: uniqueness not guaranteed"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    kernel = needs_gauge(state, r)
    if kernel:
        if gauge is None:
            raise GaugeRequiredError("gauge required: Euclidean problem with alpha * target == 0 has a 1-dimensional kernel")
        if gauge not in GAUGES:
            raise ValueError(f"unknown gauge {gauge!r}; expected one of {GAUGES}")
        if a == 0.0:
            gb = 2.0 * np.pi * euler_characteristic(surface.triangulation) - float(np.sum(r))
            if abs(gb) > 1e-9 * max(1.0, float(np.sum(np.abs(r)))):
                raise SolverError(f"infeasible target: sum of target differs from 2*pi*chi by {gb:.3e}")
        level = 0.0 if gauge == "mean" else (float(np.sum(state.u)) if a == 0.0 else float(np.sum(np.exp(a * state.u))))
        state = state.with_u(surface, _apply_gauge(state.u, gauge, a, level))
    used_gauge = gauge if kernel else None

    def resid(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        data = evaluate_faces(surface, u, state.geometry, jacobian=True)
        g = curvature_from_faces(surface, data) - r * np.exp(a * u)
        return g, data

    u = state.u
    g, data = resid(u)
    history = []
    for it in range(max_iter + 1):
        res = float(np.max(np.abs(g * np.exp(-a * u))))
        history.append(res)
        logger.debug("newton iter %d residual %.3e", it, res)
        if res < tol:
            return NewtonResult(state.with_u(surface, u), it, res, used_gauge, history, notes)
        if it == max_iter:
            break
        hess = jacobian_from_faces(surface, data) - a * np.diag(r * np.exp(a * u))
        if kernel:
            hess = hess + np.ones_like(hess) / u.size
        try:
            step = np.linalg.solve(hess, -g)
        except np.linalg.LinAlgError:
            raise SingularHessianError(f"singular Hessian at iteration {it}") from None
        if not np.all(np.isfinite(step)) or np.linalg.cond(hess) > 1e14:
            raise SingularHessianError(f"Hessian is numerically singular at iteration {it}")

        gnorm = float(np.linalg.norm(g))
        t = 1.0
        domain_hit = None
        for _ in range(max_halvings + 1):
            cand = u + t * step
            if kernel:
                cand = _apply_gauge(cand, gauge, a, level)
            if np.max(np.abs(cand)) > DIVERGENCE_BOUND:
                t *= 0.5
                continue
            try:
                check_domain(surface, cand, state.geometry)
                with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                    g_new, data_new = resid(cand)
            except DomainExitError as exc:
                domain_hit = exc
                t *= 0.5
                continue
            except InvalidMetricError:
                t *= 0.5
                continue
            gn = float(np.linalg.norm(g_new))
            if np.isfinite(gn) and gn < gnorm:
                break
            t *= 0.5
        else:
            if domain_hit is not None:
                raise DomainExitError(f"domain exit during Newton line search: {domain_hit}", domain_hit.vertices)
            # no decrease at round-off level: accept if already close
            if res < 10 * tol:
                return NewtonResult(state.with_u(surface, u), it, res, used_gauge, history, notes)
            raise SolverError(f"line search failed after {max_halvings} halvings at iteration {it} (residual {res:.3e})")
        u, g, data = cand, g_new, data_new
        if np.max(np.abs(u)) > DIVERGENCE_BOUND:
            raise SolverError(f"iterates diverged (max|u| > {DIVERGENCE_BOUND}); the target is likely infeasible")
    raise MaxIterationError(f"no convergence in {max_iter} iterations (residual {history[-1]:.3e})")
