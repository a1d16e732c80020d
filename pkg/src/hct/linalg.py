"""Gram-metric linear algebra: whitening, weighted SVD, projectors, pseudoinverses.

Every routine works on plain arrays. A Gram matrix ``G`` defines the inner
product ``<x, y> = x.T @ G @ y``; all bases returned here are orthonormal in
that inner product, not in the Euclidean one.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (
    BasisNotOrthonormal,
    NotPositiveDefinite,
    NotSymmetric,
    ShapeMismatch,
    SizeLimitExceeded,
)

MAX_DENSE_DIM = 20_000
DEFAULT_TOL_FACTOR = 100.0
SYMMETRY_RTOL = 1e-12
CONDITION_WARN = 1e12


def as_dense(M, max_dim: int = MAX_DENSE_DIM) -> np.ndarray:
    """Return ``M`` as a dense float array, refusing anything above ``max_dim``."""
    if max(M.shape, default=0) > max_dim:
        raise SizeLimitExceeded(
            f"matrix of shape {M.shape} exceeds the dense size guard ({max_dim})"
        )
    if sp.issparse(M):
        return M.toarray().astype(float)
    return np.asarray(M, dtype=float)


@dataclass(frozen=True, eq=False)
class GramFactor:
    """Cholesky factor ``L`` with ``G = L @ L.T``."""

    space_dim: int
    lower_factor: np.ndarray
    condition_estimate: float = 1.0
    matrix: np.ndarray | None = None

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Apply ``G^{-1}``."""
        if self.space_dim == 0:
            return np.zeros_like(b, dtype=float)
        return sla.cho_solve((self.lower_factor, True), b)

    def whiten(self, x: np.ndarray) -> np.ndarray:
        """Map Gram coordinates to Euclidean ones: ``x -> L.T @ x``."""
        return self.lower_factor.T @ x

    def solve_lower(self, y: np.ndarray) -> np.ndarray:
        """``y -> L^{-1} @ y``."""
        if self.space_dim == 0:
            return np.zeros_like(y, dtype=float)
        return sla.solve_triangular(self.lower_factor, y, lower=True)

    def unwhiten(self, y: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`whiten`: ``y -> L^{-T} @ y``."""
        if self.space_dim == 0:
            return np.zeros_like(y, dtype=float)
        return sla.solve_triangular(self.lower_factor, y, lower=True, trans="T")

    @property
    def gram(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return self.lower_factor @ self.lower_factor.T


def cholesky_whiten(G) -> GramFactor:
    """Factor an SPD Gram matrix.

    Raises:
        NotSymmetric: if ``G`` is not symmetric to 1e-12 relative (Frobenius).
        NotPositiveDefinite: if the factorization meets a nonpositive pivot.
    """
    G = as_dense(G)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ShapeMismatch(f"Gram matrix must be square, got {G.shape}")
    n = G.shape[0]
    if n == 0:
        return GramFactor(0, np.zeros((0, 0)), 1.0, np.zeros((0, 0)))
    scale = np.linalg.norm(G)
    if np.linalg.norm(G - G.T) > SYMMETRY_RTOL * scale:
        raise NotSymmetric("Gram matrix is not symmetric")
    try:
        L = sla.cholesky(G, lower=True, check_finite=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    d = np.diag(L)
    if np.any(d <= 0):
        raise NotPositiveDefinite("nonpositive pivot")
    # (max/min pivot)^2 is a lower bound for cond_2(G); cheap and enough for a warning.
    cond = float((d.max() / d.min()) ** 2)
    if cond > CONDITION_WARN:
        warnings.warn(f"Gram matrix is ill-conditioned (estimate {cond:.2e})", stacklevel=2)
    return GramFactor(n, L, cond, G)


def _factor(G) -> GramFactor:
    return G if isinstance(G, GramFactor) else cholesky_whiten(G)


@dataclass(frozen=True, eq=False)
class WeightedSVD:
    """SVD of ``A : (R^n, G0) -> (R^m, G1)``.

    ``A = U @ diag(s) @ V.T @ G0`` with ``U.T G1 U = I`` and ``V.T G0 V = I``.
    ``left_basis``/``right_basis`` are full square bases; only the leading
    ``rank`` columns belong to the range / co-kernel.
    """

    left_basis: np.ndarray
    singular_values: np.ndarray
    right_basis: np.ndarray
    rank_tolerance: float

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.singular_values > self.rank_tolerance))

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    @property
    def sigma_min_positive(self) -> float:
        r = self.rank
        return float(self.singular_values[r - 1]) if r else 0.0

    @property
    def rank_gap(self) -> float:
        """Ratio of the smallest kept singular value to the cutoff (inf if the cutoff is 0)."""
        if self.rank == 0:
            return 0.0
        if self.rank_tolerance == 0:
            return np.inf
        return self.sigma_min_positive / self.rank_tolerance


def rank_tolerance(sigma_max: float, shape: tuple[int, int], tol_factor: float = DEFAULT_TOL_FACTOR) -> float:
    return tol_factor * sigma_max * np.finfo(float).eps * max(shape, default=0)


def weighted_svd(A, G0, G1, tol_factor: float = DEFAULT_TOL_FACTOR) -> WeightedSVD:
    """Singular value decomposition of ``A`` between two Gram metrics.

    The Euclidean SVD of ``B = L1.T @ A @ L0^{-T}`` is mapped back to
    Gram-orthonormal bases.
    """
    F0, F1 = _factor(G0), _factor(G1)
    A = as_dense(A)
    m, n = A.shape
    if n != F0.space_dim or m != F1.space_dim:
        raise ShapeMismatch(
            f"operator shape {A.shape} does not match Gram sizes ({F1.space_dim}, {F0.space_dim})"
        )
    if m == 0 or n == 0:
        Ub, s, Vb = np.eye(m), np.zeros(0), np.eye(n)
    else:
        B = F1.whiten(F0.solve_lower(A.T).T)
        Ub, s, Vbt = np.linalg.svd(B, full_matrices=True)
        Vb = Vbt.T
    smax = float(s[0]) if s.size else 0.0
    return WeightedSVD(
        left_basis=F1.unwhiten(Ub),
        singular_values=s,
        right_basis=F0.unwhiten(Vb),
        rank_tolerance=rank_tolerance(smax, (m, n), tol_factor),
    )


def kernel_range_bases(svd: WeightedSVD) -> tuple[np.ndarray, np.ndarray, int]:
    """Gram-orthonormal bases ``(kernel, range, rank)`` read off a weighted SVD."""
    r = svd.rank
    return svd.right_basis[:, r:], svd.left_basis[:, :r], r


def check_orthonormal(basis: np.ndarray, G, tol: float = 1e-10) -> float:
    G = as_dense(G)
    k = basis.shape[1]
    err = float(np.max(np.abs(basis.T @ G @ basis - np.eye(k)), initial=0.0))
    if err > tol:
        raise BasisNotOrthonormal(f"basis is not Gram-orthonormal (max deviation {err:.2e})")
    return err


def orthogonal_projector(basis: np.ndarray, G) -> np.ndarray:
    """``P = B @ B.T @ G``: the G-orthogonal projector onto ``span(B)``."""
    G = as_dense(G)
    basis = np.asarray(basis, dtype=float).reshape(G.shape[0], -1)
    check_orthonormal(basis, G)
    return basis @ (basis.T @ G)


def weighted_pseudoinverse(A, G0, G1, tol_factor: float = DEFAULT_TOL_FACTOR) -> np.ndarray:
    """Inverse of the reduced operator, extended by zero on ``R(A)^perp``.

    ``A @ A_plus`` is the G1-orthogonal projector onto ``R(A)`` and
    ``A_plus @ A`` the G0-orthogonal projector onto ``N(A)^perp``.
    """
    F1 = _factor(G1)
    svd = weighted_svd(A, G0, F1, tol_factor)
    r = svd.rank
    V = svd.right_basis[:, :r]
    U = svd.left_basis[:, :r]
    return (V / svd.singular_values[:r]) @ (U.T @ F1.gram)


def weighted_norm(M, G_domain, G_codomain) -> float:
    """Operator norm of ``M`` from ``(R^n, G_domain)`` to ``(R^m, G_codomain)``."""
    F0, F1 = _factor(G_domain), _factor(G_codomain)
    M = as_dense(M)
    if M.size == 0:
        return 0.0
    B = F1.whiten(F0.solve_lower(M.T).T)
    return float(np.linalg.norm(B, 2))


def gram_orthonormalize(X: np.ndarray, G, tol_factor: float = DEFAULT_TOL_FACTOR) -> np.ndarray:
    """G-orthonormal basis of ``span(X)`` (rank-revealing, drops dependent columns)."""
    F = _factor(G)
    X = np.asarray(X, dtype=float).reshape(F.space_dim, -1)
    if X.shape[1] == 0:
        return np.zeros((F.space_dim, 0))
    W = F.whiten(X)
    U, s, _ = np.linalg.svd(W, full_matrices=False)
    tol = rank_tolerance(float(s[0]) if s.size else 0.0, W.shape, tol_factor)
    r = int(np.count_nonzero(s > tol))
    return F.unwhiten(U[:, :r])


def canonical_basis(basis: np.ndarray, G) -> np.ndarray:
    """Deterministic G-orthonormal basis of ``span(basis)``.

    Rows (entities) are chosen by pivoted QR, the subspace is put in echelon
    form on those rows, then Gram-Schmidt runs in pivot order. The result
    depends only on the subspace, not on the input basis, up to rounding.
    """
    F = _factor(G)
    k = basis.shape[1]
    if k == 0:
        return basis.copy()
    _, _, piv = sla.qr(basis.T, pivoting=True, mode="economic")
    rows = np.sort(piv[:k])
    C = basis @ np.linalg.solve(basis[rows, :], np.eye(k))
    Gd = F.gram
    out = np.empty_like(C)
    for j in range(k):
        v = C[:, j].copy()
        for _ in range(2):
            v -= out[:, :j] @ (out[:, :j].T @ (Gd @ v))
        v /= np.sqrt(v @ Gd @ v)
        i = int(np.argmax(np.abs(v) > 1e-12 * np.abs(v).max()))
        out[:, j] = v if v[i] > 0 else -v
    return out
