import math

import numpy as np
import pytest

from dcsflow.mesh import WeightedSurface, builtin_mesh
from dcsflow.metric import ConformalState, u_to_f
from dcsflow.triangle import evaluate_faces

MESHES = ("tetrahedron", "torus7", "genus2")
GEOMETRIES = ("euclidean", "hyperbolic")


@pytest.fixture(scope="session")
def meshes():
    return {name: builtin_mesh(name) for name in MESHES}


def random_weights(t, rng, scheme):
    n, m = t.n_vertices, t.n_edges
    if scheme == "tangential":
        return WeightedSurface.uniform(t, 1, 1.0)
    if scheme == "inversive":
        return WeightedSurface(t, np.ones(n, int), rng.uniform(0.0, 1.0, m))
    if scheme == "scaling":
        return WeightedSurface(t, np.zeros(n, int), rng.uniform(0.8, 1.2, m))
    if scheme == "mixed":
        return WeightedSurface(t, rng.integers(0, 2, n), rng.uniform(0.5, 1.0, m))
    raise ValueError(scheme)


def random_admissible_state(surface, geometry, rng, spread=0.5, alpha=0.0, tries=500):
    """Rejection-sample f uniformly in [-spread, spread] until every face is admissible."""
    for _ in range(tries):
        st = ConformalState.from_f(surface, rng.uniform(-spread, spread, surface.n_vertices), geometry, alpha)
        if evaluate_faces(surface, st.u, st.geometry).degenerate.size == 0:
            return st
    raise RuntimeError("no admissible sample found")


def fd_jacobian(func, u, h=1e-5):
    u = np.asarray(u, dtype=float)
    cols = []
    for j in range(u.size):
        e = np.zeros_like(u)
        e[j] = h
        cols.append((func(u + e) - func(u - e)) / (2 * h))
    return np.array(cols).T


def oracle_angles(surface, u, geometry, face):
    """Law of cosines with math.acos on lengths from the literal edge formulas."""
    f = u_to_f(surface, u, geometry)
    eps = surface.epsilon
    i, j, k = (int(v) for v in surface.triangulation.faces[face])

    def length(a, b):
        eta = surface.eta_of(a, b)
        if geometry == "euclidean":
            return math.sqrt(eps[a] * math.exp(2 * f[a]) + eps[b] * math.exp(2 * f[b]) + 2 * eta * math.exp(f[a] + f[b]))
        x = math.sqrt((1 + eps[a] * math.exp(2 * f[a])) * (1 + eps[b] * math.exp(2 * f[b]))) + eta * math.exp(f[a] + f[b])
        return math.acosh(x)

    a, b, c = length(j, k), length(i, k), length(i, j)

    def corner(opp, s1, s2):
        if geometry == "euclidean":
            return math.acos((s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2))
        return math.acos((math.cosh(s1) * math.cosh(s2) - math.cosh(opp)) / (math.sinh(s1) * math.sinh(s2)))

    return np.array([corner(a, b, c), corner(b, a, c), corner(c, a, b)])


def oracle_curvature(surface, u, geometry):
    K = np.full(surface.n_vertices, 2 * math.pi)
    for face, verts in enumerate(surface.triangulation.faces):
        K[verts] -= oracle_angles(surface, u, geometry, face)
    return K


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
