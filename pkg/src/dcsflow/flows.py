"""Combinatorial alpha-Ricci and alpha-Calabi flows with explicit integrators.

Flow kinds and their fields ``du/dt``:

==================  ===========================================
ricci               ``-R``
normalized_ricci    ``R_av - R`` with ``R_av = 2 pi chi / sum(e^{alpha u})`` (Euclidean)
modified_ricci      ``target - R``
calabi              ``Delta_alpha R``
modified_calabi     ``Delta_alpha (R - target)``
==================  ===========================================

``R`` is the alpha-curvature, replaced by its extension through degenerate
faces when ``extended`` is set (Ricci kinds only).

With ``alpha != 0`` the normalized Ricci and Calabi flows are stepped in
``r = e^{alpha u}``, where their invariant ``sum(r)`` is linear and therefore
kept by the integrator up to rounding. All other flows are stepped in ``u``.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .curvature import curvature_from_faces, jacobian_from_faces
from .mesh import BackgroundGeometry, WeightedSurface, euler_characteristic
from .metric import ConformalState, DomainExitError
from .triangle import DegenerateFaceError, evaluate_faces

logger = logging.getLogger(__name__)

KINDS = ("ricci", "normalized_ricci", "modified_ricci", "calabi", "modified_calabi")
RICCI_KINDS = ("ricci", "normalized_ricci", "modified_ricci")
INTEGRATORS = ("rk4", "euler")
ESCAPE_BOUND = 50.0
_NONE = np.empty(0, dtype=np.int64)
_EMPTY: frozenset = frozenset()


class FlowError(RuntimeError):
    def __init__(self, message: str, trace: "FlowTrace | None" = None):
        super().__init__(message)
        self.trace = trace


class RemovableSingularityError(FlowError):
    """A face degenerated along a non-extended flow."""


class EssentialSingularityError(FlowError):
    """``u`` escaped to infinity or left the hyperbolic coordinate domain."""


@dataclass(frozen=True, eq=False)
class FlowSpec:
    kind: str
    alpha: float = 0.0
    geometry: BackgroundGeometry = BackgroundGeometry.EUCLIDEAN
    extended: bool = False
    target: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "geometry", BackgroundGeometry.parse(self.geometry))
        object.__setattr__(self, "alpha", float(self.alpha))
        if self.kind not in KINDS:
            raise ValueError(f"unknown flow kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "normalized_ricci" and self.geometry.is_hyperbolic:
            raise ValueError("normalized_ricci is defined only for Euclidean background geometry")
        if self.extended and self.kind not in RICCI_KINDS:
            raise ValueError(f"{self.kind} cannot be extended; only Ricci-type flows admit the extension")
        if self.kind.startswith("modified"):
            if self.target is None:
                raise ValueError(f"{self.kind} requires a target curvature")
            object.__setattr__(self, "target", np.array(self.target, dtype=np.float64))
        elif self.target is not None:
            raise ValueError(f"{self.kind} does not take a target curvature")

    def target_for(self, n: int) -> np.ndarray:
        r = np.broadcast_to(self.target, (n,)).astype(np.float64)
        if not np.all(np.isfinite(r)):
            raise ValueError("target curvature must be finite")
        return r


def conserved_quantity(u, alpha: float) -> float:
    u = np.asarray(u, dtype=np.float64)
    if alpha == 0.0:
        return float(np.sum(u))
    return float(np.sum(np.exp(alpha * u)))


@dataclass(frozen=True, eq=False)
class FieldValue:
    du: np.ndarray
    residual: float
    degenerate: frozenset


def _evaluate(surface: WeightedSurface, u: np.ndarray, spec: FlowSpec) -> FieldValue:
    a = spec.alpha
    calabi = spec.kind in ("calabi", "modified_calabi")
    data = evaluate_faces(surface, u, spec.geometry, jacobian=calabi)
    bad = data.degenerate if data.corner.max() >= 0 else _NONE
    if bad.size and not spec.extended:
        raise DegenerateFaceError(f"faces {bad.tolist()} degenerated; the non-extended flow is undefined here", bad)
    w = np.exp(-a * u)
    R = curvature_from_faces(surface, data) * w
    n = u.size
    if spec.kind == "ricci":
        du = -R
        ref = np.zeros(n)
    elif spec.kind == "normalized_ricci":
        ref = np.full(n, 2.0 * np.pi * euler_characteristic(surface.triangulation) / np.sum(np.exp(a * u)))
        du = ref - R
    elif spec.kind == "modified_ricci":
        ref = spec.target_for(n)
        du = ref - R
    else:
        lam = jacobian_from_faces(surface, data)
        if spec.kind == "modified_calabi":
            ref = spec.target_for(n)
        elif spec.geometry.is_hyperbolic:
            ref = np.zeros(n)
        else:
            ref = np.full(n, 2.0 * np.pi * euler_characteristic(surface.triangulation) / np.sum(np.exp(a * u)))
        du = -w * (lam @ (R - ref))
    residual = float(np.max(np.abs(R - ref)))
    return FieldValue(du, residual, frozenset(bad.tolist()) if bad.size else _EMPTY)


def flow_field(surface: WeightedSurface, state: ConformalState, spec: FlowSpec) -> np.ndarray:
    """``du/dt`` of ``spec`` at ``state``; raises DegenerateFaceError for non-extended kinds."""
    return _evaluate(surface, state.u, spec).du


@dataclass(frozen=True, eq=False)
class FlowState:
    """One sample. ``residual`` is the curvature residual of the flow's fixed-point equation."""

    t: float
    u: np.ndarray
    residual: float
    conserved: float
    degenerate_faces: frozenset = frozenset()


@dataclass(frozen=True)
class FlowEvent:
    time: float
    face: int
    kind: str  # degenerate_enter | degenerate_exit | domain_exit


def _guard(surface: WeightedSurface, u: np.ndarray, spec: FlowSpec) -> None:
    if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > ESCAPE_BOUND:
        raise EssentialSingularityError(f"conformal factors escaped (max|u| > {ESCAPE_BOUND})")
    if spec.geometry.is_hyperbolic:
        bad = np.flatnonzero((surface.epsilon == 1) & ~(u < 0))
        if bad.size:
            raise DomainExitError(f"domain exit: u >= 0 at epsilon=1 vertices {bad.tolist()}", bad)


def _conservative(spec: FlowSpec) -> bool:
    """Flows whose invariant sum(e^{alpha u}) is linear in r = e^{alpha u}."""
    return spec.alpha != 0.0 and spec.kind in ("normalized_ricci", "calabi")


def _advance(surface: WeightedSurface, u: np.ndarray, spec: FlowSpec, h: float, integrator: str, k1=None) -> np.ndarray:
    a = spec.alpha
    if _conservative(spec):
        # step in r = e^{alpha u}: Runge-Kutta methods keep linear invariants exactly
        def rhs(x):
            if not np.all(x > 0):
                raise EssentialSingularityError("conformal factors escaped (e^{alpha u} reached 0)")
            y = np.log(x) / a
            _guard(surface, y, spec)
            return a * x * _evaluate(surface, y, spec).du

        x = np.exp(a * u)
        if k1 is not None:
            k1 = a * x * k1
    else:
        def rhs(x):
            _guard(surface, x, spec)
            return _evaluate(surface, x, spec).du

        x = u
    if k1 is None:
        k1 = rhs(x)
    if integrator == "euler":
        out = x + h * k1
    else:
        k2 = rhs(x + 0.5 * h * k1)
        k3 = rhs(x + 0.5 * h * k2)
        k4 = rhs(x + h * k3)
        out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if x is u:
        return out
    if not np.all(out > 0):
        raise EssentialSingularityError("conformal factors escaped (e^{alpha u} reached 0)")
    return np.log(out) / a


def _sample(surface: WeightedSurface, t: float, u: np.ndarray, spec: FlowSpec) -> tuple[FlowState, np.ndarray]:
    _guard(surface, u, spec)
    fv = _evaluate(surface, u, spec)
    return FlowState(t, u, fv.residual, conserved_quantity(u, spec.alpha), fv.degenerate), fv.du


def step(
    surface: WeightedSurface, state: FlowState | ConformalState, spec: FlowSpec, h: float = 1e-2, integrator: str = "rk4"
) -> FlowState:
    """One explicit step of size ``h``; ``state`` is a FlowState or a ConformalState (taken at t = 0)."""
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}; expected one of {INTEGRATORS}")
    u = _advance(surface, np.asarray(state.u, dtype=np.float64), spec, h, integrator)
    return _sample(surface, getattr(state, "t", 0.0) + h, u, spec)[0]


@dataclass(eq=False)
class FlowTrace:
    spec: FlowSpec
    states: list[FlowState] = field(default_factory=list)
    events: list[FlowEvent] = field(default_factory=list)
    converged: bool = False
    status: str = "running"

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([s.residual for s in self.states])

    @property
    def u(self) -> np.ndarray:
        return np.array([s.u for s in self.states])

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    def conservation_drift(self) -> float:
        c = np.array([s.conserved for s in self.states])
        return float(np.max(np.abs(c - c[0])))

    def domain_margin(self, surface: WeightedSurface) -> float | None:
        """``min_t min_i -u_i`` over epsilon=1 vertices in hyperbolic runs."""
        if not self.spec.geometry.is_hyperbolic or not np.any(surface.epsilon == 1):
            return None
        return float(-np.max(self.u[:, surface.epsilon == 1]))

    def exponential_rate(self) -> tuple[float, float]:
        return fit_exponential_rate(self.times, self.residuals)

    def summary(self, surface: WeightedSurface | None = None) -> dict:
        slope, r2 = self.exponential_rate()
        out = {
            "kind": self.spec.kind,
            "extended": self.spec.extended,
            "alpha": self.spec.alpha,
            "geometry": self.spec.geometry.value,
            "status": self.status,
            "converged": self.converged,
            "t_final": self.final.t,
            "final_residual": self.final.residual,
            "rate": slope,
            "rate_r2": r2,
            "conservation_drift": self.conservation_drift(),
            "num_events": len(self.events),
            "event_kinds": sorted({e.kind for e in self.events}),
        }
        if surface is not None:
            out["domain_margin"] = self.domain_margin(surface)
        return out

    def write_csv(self, path: str | Path) -> None:
        n = self.states[0].u.size if self.states else 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "residual", "conserved", "num_degenerate_faces"] + [f"u_{i + 1}" for i in range(n)])
            for s in self.states:
                w.writerow(
                    [f"{s.t:.17g}", f"{s.residual:.17g}", f"{s.conserved:.17g}", len(s.degenerate_faces)]
                    + [f"{x:.17g}" for x in s.u]
                )

    def write_events_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "face", "kind"])
            for e in self.events:
                w.writerow([f"{e.time:.17g}", e.face, e.kind])


def fit_exponential_rate(times, residuals, fraction: float = 0.5) -> tuple[float, float]:
    """Least-squares slope of ``log(residual)`` against ``t`` over the last ``fraction`` of the run, and its R^2."""
    t = np.asarray(times, dtype=np.float64)
    r = np.asarray(residuals, dtype=np.float64)
    if t.size < 3:
        return float("nan"), float("nan")
    keep = (t >= t[0] + (1.0 - fraction) * (t[-1] - t[0])) & (r > 0)
    t, y = t[keep], np.log(r[keep])
    if t.size < 3 or np.ptp(t) == 0:
        return float("nan"), float("nan")
    slope, icpt = np.polyfit(t, y, 1)
    ss_res = float(np.sum((y - (slope * t + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def _record_transition(trace: FlowTrace, before: frozenset, after: frozenset, t: float) -> None:
    for f in sorted(after - before):
        trace.events.append(FlowEvent(t, f, "degenerate_enter"))
    for f in sorted(before - after):
        trace.events.append(FlowEvent(t, f, "degenerate_exit"))


def run(
    surface: WeightedSurface,
    initial: ConformalState,
    spec: FlowSpec,
    *,
    h: float = 1e-2,
    integrator: str = "rk4",
    residual_tol: float = 1e-10,
    t_max: float = 100.0,
    adaptive: bool = False,
    local_tol: float = 1e-12,
    max_refine: int = 30,
    record_every: int = 1,
) -> FlowTrace:
    """Integrate from ``initial`` until the residual drops below ``residual_tol`` or ``t_max``.

    Samples are taken at multiples of ``h``. With ``adaptive`` each interval
    of length ``h`` is covered by step doubling: a step is accepted when one
    step and two half steps agree to ``local_tol`` in max norm, otherwise it
    is split, at most ``max_refine`` times.
    """
    if integrator not in INTEGRATORS:
        raise ValueError(f"unknown integrator {integrator!r}; expected one of {INTEGRATORS}")
    if h <= 0 or t_max < 0:
        raise ValueError("need h > 0 and t_max >= 0")
    if initial.geometry is not spec.geometry:
        raise ValueError("initial state and flow spec use different background geometries")
    trace = FlowTrace(spec)
    u = np.array(initial.u, dtype=np.float64)
    t = 0.0

    def fail(exc_type, msg, faces=(), kind=None):
        for f in faces:
            trace.events.append(FlowEvent(t, int(f), kind))
        trace.status = "essential_singularity" if exc_type is EssentialSingularityError else "removable_singularity"
        return exc_type(msg, trace)

    try:
        current, k1 = _sample(surface, t, u, spec)
    except DomainExitError as exc:
        raise fail(EssentialSingularityError, str(exc), exc.vertices, "domain_exit") from exc
    except DegenerateFaceError as exc:
        raise fail(RemovableSingularityError, str(exc), exc.faces, "degenerate_enter") from exc
    except EssentialSingularityError as exc:
        raise fail(EssentialSingularityError, str(exc)) from exc
    trace.states.append(current)
    if current.degenerate_faces:
        _record_transition(trace, frozenset(), current.degenerate_faces, t)

    n_steps = int(np.floor(t_max / h + 1e-9))
    degenerate = current.degenerate_faces
    for k in range(1, n_steps + 1):
        if current.residual < residual_tol:
            break
        t_next = k * h
        try:
            if adaptive:
                u, degenerate = _adaptive_interval(
                    surface, u, k1, spec, t, t_next - t, integrator, local_tol, max_refine, trace, degenerate
                )
            else:
                u = _advance(surface, u, spec, t_next - t, integrator, k1)
            t = t_next
            current, k1 = _sample(surface, t, u, spec)
        except DomainExitError as exc:
            raise fail(EssentialSingularityError, str(exc), exc.vertices, "domain_exit") from exc
        except DegenerateFaceError as exc:
            raise fail(RemovableSingularityError, f"removable singularity near t={t:.6g}: {exc}", exc.faces, "degenerate_enter") from exc
        except EssentialSingularityError as exc:
            raise fail(EssentialSingularityError, f"essential singularity near t={t:.6g}: {exc}") from exc
        _record_transition(trace, degenerate, current.degenerate_faces, t)
        degenerate = current.degenerate_faces
        if k % record_every == 0 or current.residual < residual_tol:
            trace.states.append(current)
    if trace.states[-1] is not current:
        trace.states.append(current)
    trace.converged = current.residual < residual_tol
    trace.status = "converged" if trace.converged else "t_max_reached"
    if not trace.converged:
        logger.warning("flow did not converge by t=%.6g (residual %.3e)", t, current.residual)
    return trace


def _adaptive_interval(surface, u, k1, spec, t0, length, integrator, tol, max_refine, trace, degenerate):
    # explicit stack of (start, length, depth); intervals are processed left to right
    stack = [(t0, length, 0)]
    while stack:
        s, H, depth = stack.pop()
        if k1 is None:
            _guard(surface, u, spec)
            k1 = _evaluate(surface, u, spec).du
        whole = _advance(surface, u, spec, H, integrator, k1)
        mid = _advance(surface, u, spec, 0.5 * H, integrator, k1)
        halves = _advance(surface, mid, spec, 0.5 * H, integrator)
        if depth < max_refine and float(np.max(np.abs(whole - halves))) > tol:
            stack.append((s + 0.5 * H, 0.5 * H, depth + 1))
            stack.append((s, 0.5 * H, depth + 1))
            continue
        u = halves
        k1 = None
        if depth > 0:
            now = frozenset(int(f) for f in evaluate_faces(surface, u, spec.geometry).degenerate)
            _record_transition(trace, degenerate, now, s + H)
            degenerate = now
    return u, degenerate
