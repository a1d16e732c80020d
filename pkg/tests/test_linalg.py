import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hct import linalg
from hct.errors import BasisNotOrthonormal, NotPositiveDefinite, NotSymmetric, ShapeMismatch, SizeLimitExceeded
from hct.samples import random_spd


def test_whiten_identity():
    F = linalg.cholesky_whiten(np.eye(3))
    np.testing.assert_array_equal(F.lower_factor, np.eye(3))


def test_whiten_diagonal():
    F = linalg.cholesky_whiten(np.diag([4.0, 9.0]))
    np.testing.assert_allclose(F.lower_factor, np.diag([2.0, 3.0]))


@pytest.mark.parametrize("seed", range(5))
def test_whiten_reconstruction(seed):
    G = random_spd(8, np.random.default_rng(seed), cond=1e3)
    L = linalg.cholesky_whiten(G).lower_factor
    assert np.allclose(L, np.tril(L))
    assert np.all(np.diag(L) > 0)
    assert np.linalg.norm(L @ L.T - G) / np.linalg.norm(G) <= 1e-12


def test_whiten_rejects_bad_input():
    with pytest.raises(NotSymmetric):
        linalg.cholesky_whiten(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(NotPositiveDefinite):
        linalg.cholesky_whiten(np.diag([1.0, -1.0]))


def test_whiten_warns_when_ill_conditioned():
    with pytest.warns(UserWarning, match="ill-conditioned"):
        linalg.cholesky_whiten(np.diag([1.0, 1e-14]))


def test_size_guard():
    with pytest.raises(SizeLimitExceeded):
        linalg.as_dense(sp.identity(30, format="csr"), max_dim=20)


def test_svd_zero_operator():
    s = linalg.weighted_svd(np.zeros((3, 2)), np.eye(2), np.eye(3))
    assert s.rank == 0
    assert not np.any(s.singular_values)


def test_svd_diagonal():
    s = linalg.weighted_svd(np.diag([2.0, 5.0]), np.eye(2), np.eye(2))
    np.testing.assert_allclose(s.singular_values, [5.0, 2.0])


def test_svd_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        linalg.weighted_svd(np.ones((3, 2)), np.eye(3), np.eye(3))


def _adjoint(A, G0, G1):
    return np.linalg.solve(G0, A.T @ G1)


@pytest.mark.parametrize("seed", range(50))
def test_singular_values_of_adjoint(seed):
    rng = np.random.default_rng(seed)
    G0, G1 = random_spd(7, rng), random_spd(5, rng)
    A = rng.standard_normal((5, 7))
    s = linalg.weighted_svd(A, G0, G1).singular_values
    t = linalg.weighted_svd(_adjoint(A, G0, G1), G1, G0).singular_values
    np.testing.assert_allclose(np.sort(s), np.sort(t)[-len(s):], rtol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_svd_bases_and_reconstruction(seed):
    rng = np.random.default_rng(seed)
    G0, G1 = random_spd(6, rng), random_spd(4, rng)
    A = rng.standard_normal((4, 6))
    s = linalg.weighted_svd(A, G0, G1)
    U, V = s.left_basis, s.right_basis
    assert np.allclose(U.T @ G1 @ U, np.eye(4), atol=1e-10)
    assert np.allclose(V.T @ G0 @ V, np.eye(6), atol=1e-10)
    r = len(s.singular_values)
    recon = (U[:, :r] * s.singular_values) @ (V[:, :r].T @ G0)
    assert np.linalg.norm(recon - A) <= 1e-10 * np.linalg.norm(A)


def test_kernel_range_identity():
    K, R, r = linalg.kernel_range_bases(linalg.weighted_svd(np.eye(3), np.eye(3), np.eye(3)))
    assert (K.shape[1], R.shape[1], r) == (0, 3, 3)


def test_kernel_rank_one():
    K, _, r = linalg.kernel_range_bases(linalg.weighted_svd(np.ones((2, 2)), np.eye(2), np.eye(2)))
    assert r == 1
    k = K[:, 0] * np.sign(K[0, 0])
    np.testing.assert_allclose(k, np.array([1.0, -1.0]) / np.sqrt(2))


def test_kernel_path_graph_gradient():
    D = np.zeros((3, 4))
    for i in range(3):
        D[i, i], D[i, i + 1] = -1, 1
    K, _, r = linalg.kernel_range_bases(linalg.weighted_svd(D, np.eye(4), np.eye(3)))
    assert r == 3 and K.shape[1] == 1
    assert np.ptp(K[:, 0]) < 1e-12


def test_projector_examples():
    G = np.eye(2)
    np.testing.assert_array_equal(linalg.orthogonal_projector(np.zeros((2, 0)), G), np.zeros((2, 2)))
    np.testing.assert_allclose(linalg.orthogonal_projector(np.eye(2), G), np.eye(2))
    np.testing.assert_allclose(linalg.orthogonal_projector(np.array([[1.0], [0.0]]), G), np.diag([1.0, 0.0]))
    with pytest.raises(BasisNotOrthonormal):
        linalg.orthogonal_projector(np.array([[2.0], [0.0]]), G)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8), k=st.integers(0, 8))
@settings(max_examples=60, deadline=None)
def test_projector_algebra(seed, n, k):
    rng = np.random.default_rng(seed)
    k = min(k, n)
    G = random_spd(n, rng)
    B = linalg.gram_orthonormalize(rng.standard_normal((n, k)), G)
    P = linalg.orthogonal_projector(B, G)
    assert np.allclose(P @ P, P, atol=1e-10)
    assert np.allclose(G @ P, P.T @ G, atol=1e-10)
    assert np.allclose(P @ B, B, atol=1e-10)
    Q = np.eye(n) - P
    assert np.allclose(B.T @ G @ Q, 0, atol=1e-10)


def test_pseudoinverse_examples():
    np.testing.assert_allclose(linalg.weighted_pseudoinverse(np.diag([2.0, 0.0]), np.eye(2), np.eye(2)),
                               np.diag([0.5, 0.0]))
    A = np.array([[2.0, 1.0], [1.0, 3.0]])
    G0, G1 = np.diag([1.0, 2.0]), np.diag([3.0, 1.0])
    np.testing.assert_allclose(linalg.weighted_pseudoinverse(A, G0, G1), np.linalg.inv(A), atol=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_pseudoinverse_identities(seed):
    rng = np.random.default_rng(seed)
    G0, G1 = random_spd(6, rng), random_spd(5, rng)
    A = rng.standard_normal((5, 2)) @ rng.standard_normal((2, 6))
    Ap = linalg.weighted_pseudoinverse(A, G0, G1)
    assert np.allclose(A @ Ap @ A, A, atol=1e-10)
    assert np.allclose(Ap @ A @ Ap, Ap, atol=1e-10)
    PR = A @ Ap
    PN = Ap @ A
    assert np.allclose(G1 @ PR, PR.T @ G1, atol=1e-10)
    assert np.allclose(G0 @ PN, PN.T @ G0, atol=1e-10)
    # A+ annihilates R(A)^perp
    y = rng.standard_normal(5)
    y_perp = y - PR @ y
    assert np.allclose(Ap @ y_perp, 0, atol=1e-10)


def test_weighted_norm_matches_svd(rng):
    G0, G1 = random_spd(4, rng), random_spd(3, rng)
    A = rng.standard_normal((3, 4))
    assert np.isclose(linalg.weighted_norm(A, G0, G1), linalg.weighted_svd(A, G0, G1).sigma_max, rtol=1e-12)


def test_canonical_basis_independent_of_input(rng):
    G = random_spd(6, rng)
    X = rng.standard_normal((6, 2))
    B1 = linalg.canonical_basis(linalg.gram_orthonormalize(X, G), G)
    B2 = linalg.canonical_basis(linalg.gram_orthonormalize(X @ rng.standard_normal((2, 2)), G), G)
    np.testing.assert_allclose(B1, B2, atol=1e-10)
