"""Seeded random instances: SPD Gram matrices and abstract complexes."""
from __future__ import annotations

import numpy as np

from .toolbox import BoundedOperator, ComplexPair, InnerProductSpace, make_complex


def random_spd(n: int, rng: np.random.Generator, cond: float = 10.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues spread log-uniformly in ``[1, cond]``."""
    if n == 0:
        return np.zeros((0, 0))
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.exp(rng.uniform(0.0, np.log(cond), n))
    G = (Q * lam) @ Q.T
    return 0.5 * (G + G.T)


def random_low_rank(m: int, n: int, rank: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n))


def random_space(n: int, rng: np.random.Generator, label: str = "", cond: float = 10.0) -> InnerProductSpace:
    return InnerProductSpace(n, random_spd(n, rng, cond), label)


def random_operator(X: InnerProductSpace, Y: InnerProductSpace, rng: np.random.Generator,
                    rank: int | None = None) -> BoundedOperator:
    r = min(X.dim, Y.dim) if rank is None else rank
    return BoundedOperator(X, Y, random_low_rank(Y.dim, X.dim, r, rng))


def random_complex(dims=(4, 7, 5), ranks=(2, 3), seed: int = 0, cond: float = 10.0) -> ComplexPair:
    """Random weighted pair with ``dim N01 = dims[1] - ranks[0] - ranks[1]``.

    ``A1`` is built as a random map precomposed with the G1-orthogonal
    projector onto ``R(A0)^perp``, so ``A1 A0 = 0`` up to rounding.
    """
    rng = np.random.default_rng(seed)
    n0, n1, n2 = dims
    r0, r1 = ranks
    if r0 + r1 > n1 or r0 > n0 or r1 > n2:
        raise ValueError("ranks incompatible with dimensions")
    H0 = random_space(n0, rng, "H0", cond)
    H1 = random_space(n1, rng, "H1", cond)
    H2 = random_space(n2, rng, "H2", cond)
    A0 = random_low_rank(n1, n0, r0, rng)
    # G1-orthonormal basis of R(A0), then the complementary projector
    L = np.linalg.cholesky(H1.gram)
    W = L.T @ A0
    U, s, _ = np.linalg.svd(W, full_matrices=False)
    U = U[:, :r0]
    R = np.linalg.solve(L.T, U)
    P_perp = np.eye(n1) - R @ R.T @ H1.gram
    A1 = random_low_rank(n2, n1, r1 + r0, rng) @ P_perp
    # A1 has rank <= n1 - r0 after projection; trim to r1 by a further low-rank factor
    Uq, sq, Vq = np.linalg.svd(A1, full_matrices=False)
    A1 = (Uq[:, :r1] * sq[:r1]) @ Vq[:r1]
    return make_complex(BoundedOperator(H0, H1, A0), BoundedOperator(H1, H2, A1))
