import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fd_jacobian, oracle_curvature, random_admissible_state, random_weights
from dcsflow.curvature import (
    alpha_curvature,
    alpha_laplacian,
    classical_curvature,
    classify_spectrum,
    curvature_jacobian,
    curvature_report,
    flow_jacobian,
    linearization_spectrum,
)
from dcsflow.energy import newton_solve
from dcsflow.flows import FlowSpec, flow_field
from dcsflow.mesh import WeightedSurface, builtin_mesh, euler_characteristic
from dcsflow.metric import ConformalState
from dcsflow.triangle import DegenerateFaceError

PI = math.pi


@pytest.fixture
def tetra():
    return WeightedSurface.uniform(builtin_mesh("tetrahedron"), 1, 1.0)


def test_symmetric_tetrahedron(tetra):
    K = classical_curvature(tetra, ConformalState.zeros(tetra, "euclidean"))
    assert np.allclose(K, PI, atol=1e-15)
    assert K.sum() == pytest.approx(4 * PI, abs=1e-14)


def test_flat_torus():
    s = WeightedSurface.uniform(builtin_mesh("torus7"), 0, 0.5)
    assert np.allclose(classical_curvature(s, ConformalState.zeros(s, "euclidean")), 0, atol=1e-14)


def test_extended_gauss_bonnet_on_degenerate_tetrahedron():
    s = WeightedSurface.uniform(builtin_mesh("tetrahedron"), 0, 1.0)
    st_ = ConformalState.from_f(s, [2.0, -2.0, 0.0, 0.0], "euclidean")
    with pytest.raises(DegenerateFaceError):
        classical_curvature(s, st_)
    K = classical_curvature(s, st_, use_extension=True)
    assert K.sum() == pytest.approx(4 * PI, abs=1e-12)
    rep = curvature_report(s, st_)
    assert not rep.admissible and rep.extended.sum() >= 1
    assert abs(rep.gauss_bonnet_residual) < 1e-12


def test_alpha_curvature_reductions(tetra):
    rng = np.random.default_rng(0)
    st0 = ConformalState.from_u(tetra, rng.uniform(-0.5, 0.5, 4), "euclidean", 0.0)
    assert np.array_equal(alpha_curvature(tetra, st0), classical_curvature(tetra, st0))
    for a in (-2.0, -1.0, 0.5, 3.0):
        assert np.allclose(alpha_curvature(tetra, ConformalState.zeros(tetra, "euclidean", a)), PI, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.2, 5.0), alpha=st.floats(-2, 2))
def test_euclidean_scaling_law(seed, lam, alpha):
    rng = np.random.default_rng(seed)
    s = random_weights(builtin_mesh("torus7"), rng, "mixed")
    a = random_admissible_state(s, "euclidean", rng, alpha=alpha)
    b = a.with_u(s, a.u + math.log(lam))
    assert np.allclose(classical_curvature(s, b), classical_curvature(s, a), atol=1e-12, rtol=0)
    assert np.allclose(alpha_curvature(s, b), lam ** -alpha * alpha_curvature(s, a), atol=1e-11, rtol=1e-12)


def test_tetrahedron_jacobian(tetra):
    lam = curvature_jacobian(tetra, ConformalState.zeros(tetra, "euclidean"))
    assert np.max(np.abs(lam @ np.ones(4))) < 1e-10
    w = np.linalg.eigvalsh(lam)
    assert abs(w[0]) < 1e-12 and w[1] > 0


def test_hyperbolic_genus2_positive_definite():
    rng = np.random.default_rng(11)
    s = random_weights(builtin_mesh("genus2"), rng, "mixed")
    st_ = random_admissible_state(s, "hyperbolic", rng)
    assert np.linalg.eigvalsh(curvature_jacobian(s, st_))[0] > 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), geometry=st.sampled_from(["euclidean", "hyperbolic"]),
       name=st.sampled_from(["tetrahedron", "torus7", "genus2"]),
       scheme=st.sampled_from(["tangential", "inversive", "scaling", "mixed"]))
def test_jacobian_against_oracle(seed, geometry, name, scheme):
    rng = np.random.default_rng(seed)
    s = random_weights(builtin_mesh(name), rng, scheme)
    st_ = random_admissible_state(s, geometry, rng)
    assert np.allclose(classical_curvature(s, st_), oracle_curvature(s, st_.u, geometry), atol=1e-11, rtol=0)
    lam = curvature_jacobian(s, st_)
    fd = fd_jacobian(lambda u: oracle_curvature(s, u, geometry), st_.u)
    assert np.max(np.abs(lam - fd)) < 1e-5
    assert np.max(np.abs(lam - lam.T)) < 1e-9
    w = np.linalg.eigvalsh(lam)
    if geometry == "euclidean":
        assert np.max(np.abs(lam @ np.ones(s.n_vertices))) < 1e-10
        assert classify_spectrum(w) == {"negative": 0, "zero": 1, "positive": s.n_vertices - 1}
    else:
        assert w[0] > 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), geometry=st.sampled_from(["euclidean", "hyperbolic"]))
def test_gauss_bonnet(seed, geometry):
    rng = np.random.default_rng(seed)
    s = random_weights(builtin_mesh("genus2"), rng, "inversive")
    st_ = random_admissible_state(s, geometry, rng)
    rep = curvature_report(s, st_)
    assert abs(rep.gauss_bonnet_residual) < 1e-9
    assert np.all(rep.K < 2 * PI)
    if geometry == "hyperbolic":
        # the area term is positive, so the plain sum overshoots 2 pi chi
        assert rep.K.sum() > 2 * PI * euler_characteristic(s.triangulation)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(-2, 2))
def test_alpha_laplacian(seed, alpha):
    rng = np.random.default_rng(seed)
    s = random_weights(builtin_mesh("torus7"), rng, "inversive")
    st_ = random_admissible_state(s, "euclidean", rng, alpha=alpha)
    g = rng.normal(size=7)
    lam = curvature_jacobian(s, st_)
    assert np.allclose(alpha_laplacian(s, st_, g), -np.exp(-alpha * st_.u) * (lam @ g), rtol=1e-14, atol=0)
    assert np.max(np.abs(alpha_laplacian(s, st_, np.full(7, 2.5)))) < 1e-10
    st0 = ConformalState.from_u(s, st_.u, "euclidean", 0.0)
    assert np.allclose(alpha_laplacian(s, st0, g), -curvature_jacobian(s, st0) @ g, rtol=1e-14, atol=0)


def test_laplacian_kills_constant_curvature(tetra):
    st_ = ConformalState.zeros(tetra, "euclidean", 1.5)
    assert np.max(np.abs(alpha_laplacian(tetra, st_, alpha_curvature(tetra, st_)))) < 1e-10


def test_normalized_spectrum_at_symmetric_state(tetra):
    st_ = ConformalState.zeros(tetra, "euclidean", -1.0)
    w = linearization_spectrum(tetra, st_, "normalized_ricci")
    assert classify_spectrum(w) == {"negative": 3, "zero": 1, "positive": 0}


def test_hyperbolic_modified_spectrum_negative():
    s = WeightedSurface.uniform(builtin_mesh("genus2"), 1, 1.0)
    res = newton_solve(s, ConformalState.from_u(s, -np.ones(10), "hyperbolic", 1.0), 1.0, np.full(10, -0.4))
    target = alpha_curvature(s, res.state)
    assert np.allclose(target, -0.4, atol=1e-9)
    w = linearization_spectrum(s, res.state, "modified_ricci", target=target)
    assert np.all(w < 0)
    w = linearization_spectrum(s, res.state, "modified_calabi", target=target)
    assert np.all(w < 0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_alpha_zero_calabi_spectrum(seed):
    rng = np.random.default_rng(seed)
    s = random_weights(builtin_mesh("genus2"), rng, "mixed")
    st_ = random_admissible_state(s, "euclidean", rng)
    w = linearization_spectrum(s, st_, "calabi")
    lam = curvature_jacobian(s, st_)
    direct = np.linalg.eigvalsh(-lam @ lam)
    scale = np.max(np.abs(direct))
    assert np.all(w <= 1e-10 * scale)
    assert np.allclose(w, direct, atol=1e-9 * scale, rtol=0)


@pytest.mark.parametrize("kind,geometry,alpha", [
    ("ricci", "hyperbolic", 0.7),
    ("modified_ricci", "euclidean", -1.0),
    ("normalized_ricci", "euclidean", -0.5),
    ("normalized_ricci", "euclidean", 0.0),
])
def test_spectrum_against_raw_and_finite_difference(kind, geometry, alpha):
    """Three routes: symmetric similarity, raw Jacobian eigenvalues, and FD of the field."""
    rng = np.random.default_rng(2)
    s = random_weights(builtin_mesh("torus7"), rng, "inversive")
    st_ = random_admissible_state(s, geometry, rng, alpha=alpha)
    sym = linearization_spectrum(s, st_, kind)
    raw = flow_jacobian(s, st_, kind)
    raw_eigs = np.sort(np.linalg.eigvals(raw).real)
    assert np.allclose(sym, raw_eigs, atol=1e-9)
    target = alpha_curvature(s, st_) if kind.startswith("modified") else None
    spec = FlowSpec(kind, alpha, geometry, target=target)
    fd = fd_jacobian(lambda u: flow_field(s, st_.with_u(s, u), spec), st_.u, h=1e-6)
    assert np.max(np.abs(fd - raw)) < 1e-6


def test_calabi_spectrum_at_fixed_point_matches_field():
    # at a fixed point the dropped terms vanish, so FD of the field gives the same matrix
    s = WeightedSurface.uniform(builtin_mesh("tetrahedron"), 1, 1.0)
    st_ = ConformalState.zeros(s, "euclidean", -1.0)
    raw = flow_jacobian(s, st_, "calabi")
    fd = fd_jacobian(lambda u: flow_field(s, st_.with_u(s, u), FlowSpec("calabi", -1.0)), st_.u, h=1e-6)
    assert np.max(np.abs(fd - raw)) < 1e-6
    sym = linearization_spectrum(s, st_, "calabi")
    assert np.allclose(sym, np.sort(np.linalg.eigvals(raw).real), atol=1e-9)


def test_normalized_rejects_hyperbolic(tetra):
    with pytest.raises(ValueError, match="Euclidean"):
        linearization_spectrum(tetra, ConformalState.zeros(tetra, "hyperbolic"), "normalized_ricci")


def test_report_spectrum_counts():
    s = WeightedSurface.uniform(builtin_mesh("genus2"), 1, 1.0)
    rep = curvature_report(s, ConformalState.zeros(s, "euclidean"), spectrum=True)
    d = rep.to_dict()
    assert len(d["eigenvalues"]) == 10
    assert d["eigenvalue_signs"] == {"negative": 0, "zero": 1, "positive": 9}
