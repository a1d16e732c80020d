import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hct import linalg
from hct.derham import assemble_complex
from hct.errors import ComplexPropertyViolated, ShapeMismatch
from hct.generators import generate_mesh
from hct.mesh import mark_boundary
from hct.samples import random_complex, random_operator, random_space
from hct.toolbox import (
    BoundedOperator,
    InnerProductSpace,
    adjoint,
    combined_estimate_margins,
    decompose_element,
    decomposition_residuals,
    kernel,
    long_complex_ends,
    make_complex,
    mini_fat,
    reduced_constant,
    refined_helmholtz,
)


def E(n):
    return InnerProductSpace.euclidean(n)


def test_space_rejects_bad_gram():
    with pytest.raises(ShapeMismatch):
        InnerProductSpace(3, np.eye(2))


def test_operator_shape_checked():
    with pytest.raises(ShapeMismatch):
        BoundedOperator(E(2), E(3), np.ones((2, 3)))


def test_adjoint_euclidean_is_transpose(rng):
    A = BoundedOperator(E(3), E(4), rng.standard_normal((4, 3)))
    np.testing.assert_allclose(adjoint(A).matrix, A.matrix.T, atol=1e-15)


@pytest.mark.parametrize("seed", range(10))
def test_adjoint_pairing_and_involution(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_space(5, rng), random_space(4, rng)
    A = random_operator(X, Y, rng)
    As = A.adjoint
    for _ in range(100):
        x, y = rng.standard_normal(5), rng.standard_normal(4)
        lhs, rhs = Y.inner(A(x), y), X.inner(x, As(y))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, X.norm(x) * Y.norm(y) * A.norm())
    assert np.allclose(As.adjoint.matrix, A.matrix, rtol=0, atol=1e-12 * np.abs(A.matrix).max())


def test_make_complex_accepts_incidence_pair(annulus):
    D0, D1 = annulus.incidence(0), annulus.incidence(1)
    S = [E(annulus.n_simplices(q)) for q in range(3)]
    cp = make_complex(BoundedOperator(S[0], S[1], D0.astype(float)), BoundedOperator(S[1], S[2], D1.astype(float)))
    assert cp.composition_residual == 0.0 and cp.dual_residual == 0.0


def test_make_complex_rejects_generic(rng):
    X, Y, Z = E(3), E(4), E(3)
    with pytest.raises(ComplexPropertyViolated) as info:
        make_complex(random_operator(X, Y, rng), random_operator(Y, Z, rng))
    assert info.value.residual > 1e-3


def test_make_complex_accepts_projected(rng):
    cp = random_complex(seed=7)
    assert cp.composition_residual <= 1e-10 and cp.dual_residual <= 1e-10


def test_reduced_constant_diagonal():
    A = BoundedOperator(E(3), E(3), np.diag([2.0, 5.0, 0.0]))
    assert reduced_constant(A).c == pytest.approx(0.5)


def test_reduced_constant_zero_is_sentinel():
    rc = reduced_constant(BoundedOperator.zero(E(2), E(2)))
    assert rc.no_reduced_part and math.isinf(rc.c)


@pytest.mark.parametrize("seed", range(50))
def test_best_constants_equal(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_space(6, rng, cond=100), random_space(5, rng, cond=100)
    A = random_operator(X, Y, rng, rank=3)
    c, cs = reduced_constant(A).c, reduced_constant(A.adjoint).c
    assert abs(c - cs) <= 1e-10 * c


@pytest.mark.parametrize("seed", range(5))
def test_reduced_constant_inequality_and_pseudoinverse_norm(seed):
    rng = np.random.default_rng(seed)
    X, Y = random_space(6, rng), random_space(5, rng)
    A = random_operator(X, Y, rng, rank=3)
    c = reduced_constant(A).c
    Pk = kernel(A).projector
    for _ in range(100):
        x = rng.standard_normal(6)
        x -= Pk @ x
        assert X.norm(x) <= (c + 1e-9) * Y.norm(A(x))
    Ap = linalg.weighted_pseudoinverse(A.matrix, X.gram, Y.gram)
    assert linalg.weighted_norm(Ap, Y.gram, X.gram) == pytest.approx(c, rel=1e-10)


def test_dirichlet_gradient_1d_constant():
    mesh = generate_mesh("interval", {"n": 64})
    dr = assemble_complex(mesh, mark_boundary(mesh, lambda c: True))
    c = reduced_constant(dr.operators[0]).c
    assert abs(c - 1 / math.pi) <= 0.02 / math.pi


def test_helmholtz_zero_complex():
    cp = make_complex(BoundedOperator.zero(E(1), E(1)), BoundedOperator.zero(E(1), E(1)))
    h = refined_helmholtz(cp)
    np.testing.assert_allclose(h.P_N01, np.eye(1))
    assert not np.any(h.P_R0) and not np.any(h.P_R1star)


def test_helmholtz_interval_rank_nullity():
    mesh = generate_mesh("interval", {"n": 5})
    dr = assemble_complex(mesh)
    dims0, dims1 = dr.pair(0).helmholtz.dims, dr.pair(1).helmholtz.dims
    assert dims0 == (0, 1, 5)  # constants at degree 0
    assert dims1 == (5, 0, 0)
    assert sum(dims1) == dr.spaces[1].dim


@given(seed=st.integers(0, 10_000), n1=st.integers(2, 9), r0=st.integers(0, 4), r1=st.integers(0, 4))
@settings(max_examples=40, deadline=None)
def test_helmholtz_projectors(seed, n1, r0, r1):
    if r0 + r1 > n1:
        r1 = n1 - r0 if n1 >= r0 else 0
        r0 = min(r0, n1)
    cp = random_complex((max(r0, 1) + 1, n1, max(r1, 1) + 1), (r0, r1), seed=seed)
    h = cp.helmholtz
    assert h.residuals["sum_minus_identity"] <= 1e-10
    assert h.residuals["pairwise_products"] <= 1e-10
    assert h.residuals["self_adjointness"] <= 1e-10
    assert h.dims == (r0, n1 - r0 - r1, r1)
    cc = cp.harmonic_cross_check
    assert cc["dim_stacked"] == cc["dim_laplacian"]


def test_decompose_element_special_cases(rng):
    cp = random_complex(seed=3)
    y = rng.standard_normal(cp.H0.dim)
    x = cp.A0(y)
    a, b, c = decompose_element(cp, x)
    np.testing.assert_allclose(a, x, atol=1e-10)
    assert np.allclose(b, 0, atol=1e-10) and np.allclose(c, 0, atol=1e-10)
    h = cp.harmonic.columns[:, 0]
    a, b, c = decompose_element(cp, h)
    np.testing.assert_allclose(b, h, atol=1e-10)
    with pytest.raises(ShapeMismatch):
        decompose_element(cp, np.ones(cp.H1.dim + 1))


@pytest.mark.parametrize("seed", range(5))
def test_decompose_element_least_squares_oracle(seed):
    """Components from three independent weighted least-squares problems."""
    cp = random_complex(seed=seed)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(cp.H1.dim)
    parts = decompose_element(cp, x)
    G1 = cp.H1.gram
    L = np.linalg.cholesky(G1)

    def proj(M):
        # G1-orthogonal projection of x onto span(M) via whitened lstsq
        coef, *_ = np.linalg.lstsq(L.T @ M, L.T @ x, rcond=None)
        return M @ coef

    a = proj(cp.A0.dense)
    c = proj(np.linalg.solve(G1, cp.A1.dense.T))  # R(A1*) = G1^{-1} R(A1^T)
    np.testing.assert_allclose(parts.x_R, a, atol=1e-9)
    np.testing.assert_allclose(parts.x_Rstar, c, atol=1e-9)
    np.testing.assert_allclose(parts.x_H, x - a - c, atol=1e-9)
    res = decomposition_residuals(cp, x, parts)
    assert res["reconstruction"] <= 1e-12 and res["orthogonality"] <= 1e-10


def test_mini_fat_zero_complex():
    cp = make_complex(BoundedOperator.zero(E(1), E(1)), BoundedOperator.zero(E(1), E(1)))
    rep = mini_fat(cp)
    assert rep.cohomology_dim == 1
    assert "A0: NoReducedPart" in rep.notes and "A1: NoReducedPart" in rep.notes
    assert rep.passed


def test_mini_fat_square_and_annulus(square_complex, annulus_complex):
    assert mini_fat(square_complex.pair(1)).cohomology_dim == 0
    rep = mini_fat(annulus_complex.pair(1))
    assert rep.cohomology_dim == 1
    assert rep.combined_estimate_margin >= -1e-9
    assert rep.c_A0 > 0 and rep.c_A1 > 0
    assert rep.passed


@pytest.mark.parametrize("seed", range(10))
def test_combined_estimate_random(seed):
    margins = combined_estimate_margins(random_complex(seed=seed), n_samples=100, seed=seed)
    assert len(margins) == 100 and margins.min() >= -1e-9


def test_long_complex_ends(annulus):
    dr = assemble_complex(annulus, mark_boundary(annulus, lambda c: False))
    ends = long_complex_ends(dr.chain)
    assert ends.iota_left.domain.dim == 1  # constants
    assert ends.end_cohomology == (0, 0)
    assert max(ends.projector_residuals) <= 1e-10
    dr = assemble_complex(annulus, mark_boundary(annulus, lambda c: c[0] < 1e-9))
    assert long_complex_ends(dr.chain).iota_left.domain.dim == 0


def test_long_complex_ends_rejects_non_complex(rng):
    X, Y, Z = E(3), E(4), E(3)
    with pytest.raises(ComplexPropertyViolated):
        long_complex_ends([random_operator(X, Y, rng), random_operator(Y, Z, rng)])
