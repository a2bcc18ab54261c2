"""Weighted triangulations of closed surfaces.

A :class:`Triangulation` stores only combinatorics; vertex coordinates in
mesh files are read past and discarded. A :class:`WeightedSurface` adds the
per-vertex scheme coefficient ``epsilon`` (0 or 1) and the per-edge weight
``eta`` that together determine edge lengths from conformal factors.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class MeshError(ValueError):
    """Raised for malformed or non-closed triangle meshes."""


class WeightsError(ValueError):
    """Raised for missing, malformed or unsupported weight assignments."""


class BackgroundGeometry(enum.Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"

    @property
    def lam(self) -> int:
        """Curvature sign of the model plane (0 or -1)."""
        return 0 if self is BackgroundGeometry.EUCLIDEAN else -1

    @property
    def is_hyperbolic(self) -> bool:
        return self is BackgroundGeometry.HYPERBOLIC

    @classmethod
    def parse(cls, value: "BackgroundGeometry | str") -> "BackgroundGeometry":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("spherical", "sphere", "s2"):
            raise WeightsError("spherical background geometry is not supported")
        aliases = {"e": "euclidean", "euc": "euclidean", "h": "hyperbolic", "hyp": "hyperbolic"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise WeightsError(f"unknown background geometry {value!r}") from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Combinatorial closed triangulated surface.

    Attributes
    ----------
    n_vertices : int
    faces : ndarray, shape (F, 3)
        Vertex triples in file order.
    edges : ndarray, shape (E, 2)
        Canonical ``(min, max)`` vertex pairs, lexicographically sorted.
    face_sides : ndarray, shape (F, 3)
        ``face_sides[f, c]`` is the edge index of the side opposite corner
        ``c`` of face ``f``.
    edge_faces : ndarray, shape (E, 2)
        The two faces bordering each edge.
    """

    n_vertices: int
    faces: np.ndarray
    edges: np.ndarray = field(init=False)
    face_sides: np.ndarray = field(init=False)
    edge_faces: np.ndarray = field(init=False)
    _edge_index: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        faces = np.asarray(self.faces, dtype=np.int64)
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError("non-triangle face")
        if faces.size == 0:
            raise MeshError("mesh has no faces")
        if faces.min() < 0 or faces.max() >= self.n_vertices:
            raise MeshError("face references a vertex index out of range")
        for f in faces:
            if len(set(f.tolist())) != 3:
                raise MeshError(f"face {tuple(f.tolist())} has repeated vertices")

        incident: dict[tuple[int, int], list[int]] = {}
        for fi, (i, j, k) in enumerate(faces.tolist()):
            for a, b in ((j, k), (i, k), (i, j)):
                incident.setdefault((min(a, b), max(a, b)), []).append(fi)
        bad = [e for e, fs in incident.items() if len(fs) != 2]
        if bad:
            raise MeshError(
                f"boundary or non-manifold edge {bad[0]} borders {len(incident[bad[0]])} face(s)"
            )
        keys = sorted(incident)
        index = {e: n for n, e in enumerate(keys)}
        sides = np.empty_like(faces)
        for fi, (i, j, k) in enumerate(faces.tolist()):
            for c, (a, b) in enumerate(((j, k), (i, k), (i, j))):
                sides[fi, c] = index[(min(a, b), max(a, b))]

        used = np.unique(faces)
        if used.size != self.n_vertices:
            raise MeshError("mesh has isolated vertices")
        if not _faces_connected(faces, keys, incident):
            raise MeshError("mesh is disconnected")

        object.__setattr__(self, "faces", _frozen(faces))
        object.__setattr__(self, "edges", _frozen(np.array(keys, dtype=np.int64)))
        object.__setattr__(self, "face_sides", _frozen(sides))
        object.__setattr__(
            self, "edge_faces", _frozen(np.array([incident[e] for e in keys], dtype=np.int64))
        )
        object.__setattr__(self, "_edge_index", index)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edge_index(self, i: int, j: int) -> int:
        try:
            return self._edge_index[(min(i, j), max(i, j))]
        except KeyError:
            raise KeyError(f"{{{i},{j}}} is not an edge") from None

    def vertex_degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def vertex_faces(self, i: int) -> np.ndarray:
        return np.flatnonzero((self.faces == i).any(axis=1))

    @cached_property
    def edge_i(self) -> np.ndarray:
        return _frozen(self.edges[:, 0].copy())

    @cached_property
    def edge_j(self) -> np.ndarray:
        return _frozen(self.edges[:, 1].copy())

    @cached_property
    def side_endpoint(self) -> np.ndarray:
        """``[f, p, c]``: which end (0/1) of side ``p`` is corner ``c``; -1 when ``c == p``."""
        out = np.full((self.n_faces, 3, 3), -1, dtype=np.int64)
        for p in range(3):
            ends = self.edges[self.face_sides[:, p]]
            for c in range(3):
                if c != p:
                    out[:, p, c] = (ends[:, 1] == self.faces[:, c]).astype(np.int64)
        return _frozen(out)


def _faces_connected(faces: np.ndarray, keys, incident) -> bool:
    n = len(faces)
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in keys:
        a, b = incident[e]
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(x) for x in range(n)}) == 1


def euler_characteristic(t: Triangulation) -> int:
    return t.n_vertices - t.n_edges + t.n_faces


@dataclass(frozen=True, eq=False)
class WeightedSurface:
    triangulation: Triangulation
    epsilon: np.ndarray
    eta: np.ndarray

    def __post_init__(self) -> None:
        t = self.triangulation
        eps = np.asarray(self.epsilon)
        if eps.shape != (t.n_vertices,):
            raise WeightsError(f"epsilon needs {t.n_vertices} entries, got {eps.shape}")
        if np.any(eps == -1):
            raise WeightsError("epsilon = -1 selects spherical geometry, which is unsupported")
        if not np.all(np.isin(eps, (0, 1))):
            raise WeightsError("epsilon entries must be 0 or 1")
        eta = np.asarray(self.eta, dtype=np.float64)
        if eta.shape != (t.n_edges,):
            raise WeightsError(f"eta needs {t.n_edges} entries, got {eta.shape}")
        if not np.all(np.isfinite(eta)):
            raise WeightsError("eta must be finite")
        object.__setattr__(self, "epsilon", _frozen(eps.astype(np.int64)))
        object.__setattr__(self, "eta", _frozen(eta))

    @property
    def n_vertices(self) -> int:
        return self.triangulation.n_vertices

    @classmethod
    def uniform(cls, t: Triangulation, epsilon: int, eta: float) -> "WeightedSurface":
        return cls(t, np.full(t.n_vertices, epsilon), np.full(t.n_edges, float(eta)))

    def eta_of(self, i: int, j: int) -> float:
        return float(self.eta[self.triangulation.edge_index(i, j)])


@dataclass(frozen=True)
class StructureViolation:
    condition: int  # 1: per-edge, 2: per-corner
    face: tuple[int, int, int] | None
    vertices: tuple[int, ...]
    value: float

    def describe(self) -> str:
        if self.condition == 1:
            s, t = self.vertices
            return f"condition (1) fails on edge {{{s},{t}}}: eps_s*eps_t + eta_st = {self.value:.6g} <= 0"
        q, s, t = self.vertices
        return (
            f"condition (2) fails at corner {q} of face {self.face}: "
            f"eps_q*eta_st + eta_qs*eta_qt = {self.value:.6g} < 0"
        )


def check_structure_conditions(surface: WeightedSurface) -> list[StructureViolation]:
    """Return every edge and face corner violating the structure conditions.

    Condition (1) is ``eps_s*eps_t + eta_st > 0`` on each edge ``{s,t}``;
    condition (2) is ``eps_q*eta_st + eta_qs*eta_qt >= 0`` for every corner
    ``q`` of every face ``{q,s,t}``. An empty list means both hold.
    """
    t = surface.triangulation
    eps, eta = surface.epsilon, surface.eta
    out: list[StructureViolation] = []
    for e, (s, v) in enumerate(t.edges.tolist()):
        val = eps[s] * eps[v] + eta[e]
        if not val > 0:
            out.append(StructureViolation(1, None, (s, v), float(val)))
    for face, sides in zip(t.faces.tolist(), t.face_sides.tolist()):
        key = tuple(sorted(face))
        for c in range(3):
            q = face[c]
            s, v = face[(c + 1) % 3], face[(c + 2) % 3]
            eta_st = eta[sides[c]]
            eta_qs = eta[sides[(c + 2) % 3]]  # side opposite v joins q and s
            eta_qv = eta[sides[(c + 1) % 3]]
            val = eps[q] * eta_st + eta_qs * eta_qv
            if val < 0:
                out.append(StructureViolation(2, key, (q, min(s, v), max(s, v)), float(val)))
    return out


# ---------------------------------------------------------------- file I/O


def parse_off(text: str) -> Triangulation:
    tokens: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens.append(line)
    if not tokens:
        raise MeshError("empty OFF file")
    header = tokens[0].split()
    if not header[0].endswith("OFF"):
        raise MeshError("missing OFF header")
    rest = header[1:]
    lines = tokens[1:]
    if not rest:
        if not lines:
            raise MeshError("missing OFF counts line")
        rest, lines = lines[0].split(), lines[1:]
    try:
        nv, nf = int(rest[0]), int(rest[1])
    except (IndexError, ValueError):
        raise MeshError("malformed OFF counts line") from None
    if len(lines) < nv + nf:
        raise MeshError(f"OFF file truncated: expected {nv} vertices and {nf} faces")
    faces = []
    for line in lines[nv : nv + nf]:
        parts = line.split()
        try:
            k = int(parts[0])
            idx = [int(p) for p in parts[1 : 1 + k]]
        except (IndexError, ValueError):
            raise MeshError(f"malformed face line {line!r}") from None
        if k != 3 or len(idx) != 3:
            raise MeshError("non-triangle face")
        faces.append(idx)
    return Triangulation(nv, np.array(faces, dtype=np.int64).reshape(-1, 3))


def load_mesh(path: str | Path) -> Triangulation:
    """Read an ASCII OFF triangle mesh describing a closed connected surface."""
    text = Path(path).read_text()
    return parse_off(text)


def write_off(t: Triangulation, path: str | Path) -> None:
    lines = ["OFF", f"{t.n_vertices} {t.n_faces} {t.n_edges}"]
    lines += ["0 0 0"] * t.n_vertices
    lines += [f"3 {i} {j} {k}" for i, j, k in t.faces.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def builtin_mesh(name: str) -> Triangulation:
    """Bundled meshes: ``tetrahedron``, ``torus7`` and ``genus2``."""
    ref = resources.files("dcsflow") / "data" / f"{name}.off"
    if not ref.is_file():
        raise MeshError(f"no bundled mesh named {name!r}")
    return parse_off(ref.read_text())


def weights_from_dict(t: Triangulation, data: dict) -> WeightedSurface:
    if "epsilon" not in data or "eta" not in data:
        raise WeightsError("weights need both 'epsilon' and 'eta'")
    eps = np.asarray(data["epsilon"])
    if eps.ndim != 1 or not np.all(np.equal(np.mod(eps, 1), 0)):
        raise WeightsError("epsilon must be a list of integers")
    if eps.shape[0] != t.n_vertices:
        raise WeightsError(f"epsilon has {eps.shape[0]} entries for {t.n_vertices} vertices")
    if np.any(eps == -1):
        raise WeightsError("epsilon = -1 selects spherical geometry, which is unsupported")
    eta = np.full(t.n_edges, np.nan)
    for entry in data["eta"]:
        try:
            i, j = entry["edge"]
            value = float(entry["value"])
        except (KeyError, TypeError, ValueError):
            raise WeightsError(f"malformed eta entry {entry!r}") from None
        try:
            e = t.edge_index(int(i), int(j))
        except KeyError as exc:
            raise WeightsError(str(exc)) from None
        if not np.isnan(eta[e]):
            raise WeightsError(f"duplicate eta entry for edge {{{i},{j}}}")
        eta[e] = value
    missing = np.flatnonzero(np.isnan(eta))
    if missing.size:
        i, j = t.edges[missing[0]]
        raise WeightsError(f"missing eta for {missing.size} edge(s), first {{{i},{j}}}")
    return WeightedSurface(t, eps.astype(np.int64), eta)


def weights_to_dict(surface: WeightedSurface) -> dict:
    return {
        "epsilon": surface.epsilon.tolist(),
        "eta": [
            {"edge": [int(i), int(j)], "value": float(v)}
            for (i, j), v in zip(surface.triangulation.edges.tolist(), surface.eta)
        ],
    }


def load_weights(t: Triangulation, path: str | Path) -> WeightedSurface:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise WeightsError(f"weights file is not valid JSON: {exc}") from None
    return weights_from_dict(t, data)


def save_weights(surface: WeightedSurface, path: str | Path) -> None:
    Path(path).write_text(json.dumps(weights_to_dict(surface), indent=1) + "\n")
