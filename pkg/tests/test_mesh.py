import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsflow.mesh import (
    BackgroundGeometry,
    MeshError,
    Triangulation,
    WeightedSurface,
    WeightsError,
    builtin_mesh,
    check_structure_conditions,
    euler_characteristic,
    load_mesh,
    load_weights,
    parse_off,
    save_weights,
    weights_from_dict,
    weights_to_dict,
    write_off,
)

TETRA_OFF = """OFF
4 4 6
0 0 0
1 0 0
0 1 0
0 0 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
"""


def _count_edges(faces):
    return len({tuple(sorted(p)) for f in faces for p in itertools.combinations(f, 2)})


def test_tetrahedron_counts():
    t = parse_off(TETRA_OFF)
    assert t.n_edges == 6
    assert euler_characteristic(t) == 2


@pytest.mark.parametrize("name,nv,ne,nf,chi", [
    ("tetrahedron", 4, 6, 4, 2),
    ("torus7", 7, 21, 14, 0),
    ("genus2", 10, 36, 24, -2),
])
def test_builtin_meshes(name, nv, ne, nf, chi):
    t = builtin_mesh(name)
    # independent edge count straight from the face list
    assert _count_edges(t.faces.tolist()) == ne
    assert (t.n_vertices, t.n_edges, t.n_faces) == (nv, ne, nf)
    assert euler_characteristic(t) == chi
    assert 3 * t.n_faces == 2 * t.n_edges


def test_edges_canonical_and_incidence(meshes):
    for t in meshes.values():
        assert np.all(t.edges[:, 0] < t.edges[:, 1])
        for e, (f0, f1) in enumerate(t.edge_faces):
            i, j = t.edges[e]
            for f in (f0, f1):
                assert {int(i), int(j)} <= set(t.faces[f].tolist())
        for f, sides in enumerate(t.face_sides):
            for c in range(3):
                assert t.faces[f, c] not in t.edges[sides[c]]


def test_quad_face_rejected():
    with pytest.raises(MeshError, match="non-triangle face"):
        parse_off("OFF\n4 1 4\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")


def test_boundary_edge_rejected():
    with pytest.raises(MeshError, match="boundary"):
        Triangulation(4, [[0, 1, 2], [0, 2, 3]])


def test_disconnected_rejected():
    faces = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    faces += [[a + 4 for a in f] for f in faces]
    with pytest.raises(MeshError, match="disconnected"):
        Triangulation(8, faces)


def test_off_round_trip(tmp_path, meshes):
    for name, t in meshes.items():
        path = tmp_path / f"{name}.off"
        write_off(t, path)
        t2 = load_mesh(path)
        assert np.array_equal(t.faces, t2.faces)
        assert np.array_equal(t.edges, t2.edges)


def test_geometry_tags():
    assert BackgroundGeometry.parse("Euclidean").lam == 0
    assert BackgroundGeometry.parse("hyperbolic").lam == -1
    with pytest.raises(WeightsError):
        BackgroundGeometry.parse("spherical")


@pytest.mark.parametrize("eps,eta", [(1, 1.0), (0, 1.0)])
def test_structure_conditions_hold(meshes, eps, eta):
    for t in meshes.values():
        assert check_structure_conditions(WeightedSurface.uniform(t, eps, eta)) == []


def test_structure_condition_one_violation(meshes):
    t = meshes["tetrahedron"]
    eta = np.ones(t.n_edges)
    eta[2] = -1.0
    v = check_structure_conditions(WeightedSurface(t, np.ones(4, int), eta))
    ones = [x for x in v if x.condition == 1]
    assert len(ones) == 1
    assert ones[0].vertices == tuple(t.edges[2].tolist())
    assert ones[0].value == 0.0


def test_structure_condition_two_violation(meshes):
    # vertex scaling with one negative eta: the corner opposite that edge stays
    # fine (eps_q = 0 times eta) but corners using it in the product fail
    t = meshes["tetrahedron"]
    eta = np.ones(t.n_edges)
    eta[0] = -0.5
    v = check_structure_conditions(WeightedSurface(t, np.zeros(4, int), eta))
    assert any(x.condition == 1 for x in v)
    assert sum(x.condition == 2 for x in v) == 4  # two faces, two corners each


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(["tetrahedron", "torus7", "genus2"]))
def test_structure_conditions_order_independent(seed, name):
    rng = np.random.default_rng(seed)
    t = builtin_mesh(name)
    eps = rng.integers(0, 2, t.n_vertices)
    eta = rng.uniform(-1.2, 1.2, t.n_edges)
    faces = np.array([rng.permutation(f) for f in t.faces])
    t2 = Triangulation(t.n_vertices, faces)
    assert np.array_equal(t.edges, t2.edges)
    key = lambda v: (v.condition, v.face, v.vertices, v.value)  # noqa: E731
    a = sorted(map(key, check_structure_conditions(WeightedSurface(t, eps, eta))))
    b = sorted(map(key, check_structure_conditions(WeightedSurface(t2, eps, eta))))
    assert a == b


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_passing_circle_packing_weights_exceed_minus_one(seed):
    rng = np.random.default_rng(seed)
    t = builtin_mesh("torus7")
    s = WeightedSurface(t, np.ones(7, int), rng.uniform(-1.5, 1.5, t.n_edges))
    if not check_structure_conditions(s):
        assert np.all(s.eta > -1)


def test_weights_round_trip(tmp_path, meshes):
    rng = np.random.default_rng(3)
    t = meshes["genus2"]
    s = WeightedSurface(t, rng.integers(0, 2, t.n_vertices), rng.normal(size=t.n_edges))
    save_weights(s, tmp_path / "w.json")
    s2 = load_weights(t, tmp_path / "w.json")
    assert np.array_equal(s.epsilon, s2.epsilon)
    assert np.array_equal(s.eta, s2.eta)


def test_weights_validation(meshes):
    t = meshes["tetrahedron"]
    good = weights_to_dict(WeightedSurface.uniform(t, 1, 1.0))
    missing = dict(good, eta=good["eta"][:-1])
    with pytest.raises(WeightsError, match="missing eta"):
        weights_from_dict(t, missing)
    with pytest.raises(WeightsError, match="spherical"):
        weights_from_dict(t, dict(good, epsilon=[1, 1, -1, 1]))
    with pytest.raises(WeightsError):
        weights_from_dict(t, dict(good, epsilon=[1, 1, 2, 1]))
    dup = dict(good, eta=good["eta"] + [good["eta"][0]])
    with pytest.raises(WeightsError, match="duplicate"):
        weights_from_dict(t, dup)
