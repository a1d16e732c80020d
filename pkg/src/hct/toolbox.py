"""Finite-dimensional Hilbert complexes.

Spaces carry an SPD Gram matrix, operators are matrices between spaces, and a
:class:`ComplexPair` is a segment ``H0 --A0--> H1 --A1--> H2`` with
``A1 @ A0 = 0``. On top of that sit adjoints, reduced constants, the refined
Helmholtz decomposition of ``H1`` and its cohomology ``N(A1) & N(A0*)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from . import linalg
from .errors import ComplexPropertyViolated, ShapeMismatch

COMPLEX_TOL = 1e-10
PROJECTOR_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class InnerProductSpace:
    """``R^dim`` with the inner product ``<x, y> = x.T @ gram @ y``."""

    dim: int
    gram: np.ndarray
    label: str = ""

    def __post_init__(self):
        g = linalg.as_dense(self.gram)
        if g.shape != (self.dim, self.dim):
            raise ShapeMismatch(f"{self.label or 'space'}: gram {g.shape} != ({self.dim}, {self.dim})")
        object.__setattr__(self, "gram", g)
        # factor eagerly: construction is where an indefinite Gram must fail
        object.__setattr__(self, "_factor", linalg.cholesky_whiten(g))

    @classmethod
    def euclidean(cls, dim: int, label: str = "") -> "InnerProductSpace":
        return cls(dim, np.eye(dim), label)

    @property
    def factor(self) -> linalg.GramFactor:
        return self._factor

    def inner(self, x, y) -> float:
        return float(np.asarray(x) @ (self.gram @ np.asarray(y)))

    def norm(self, x) -> float:
        return math.sqrt(max(self.inner(x, x), 0.0))

    def same_as(self, other: "InnerProductSpace") -> bool:
        if self is other:
            return True
        return self.dim == other.dim and np.array_equal(self.gram, other.gram)

    def __repr__(self):
        return f"InnerProductSpace(dim={self.dim}, label={self.label!r})"


@dataclass(frozen=True, eq=False)
class BoundedOperator:
    """A linear map ``domain -> codomain`` stored as a ``codomain.dim x domain.dim`` matrix."""

    domain: InnerProductSpace
    codomain: InnerProductSpace
    matrix: object

    def __post_init__(self):
        shape = tuple(self.matrix.shape)
        if shape != (self.codomain.dim, self.domain.dim):
            raise ShapeMismatch(
                f"matrix shape {shape} != ({self.codomain.dim}, {self.domain.dim})"
            )

    @classmethod
    def zero(cls, domain: InnerProductSpace, codomain: InnerProductSpace) -> "BoundedOperator":
        return cls(domain, codomain, np.zeros((codomain.dim, domain.dim)))

    @classmethod
    def identity(cls, space: InnerProductSpace) -> "BoundedOperator":
        return cls(space, space, np.eye(space.dim))

    @cached_property
    def dense(self) -> np.ndarray:
        return linalg.as_dense(self.matrix)

    @property
    def shape(self):
        return self.matrix.shape

    def __call__(self, x):
        return self.matrix @ x

    def __matmul__(self, other: "BoundedOperator") -> "BoundedOperator":
        if not self.domain.same_as(other.codomain):
            raise ShapeMismatch("cannot compose: spaces differ")
        return BoundedOperator(other.domain, self.codomain, self.matrix @ other.matrix)

    @cached_property
    def svd(self) -> linalg.WeightedSVD:
        return linalg.weighted_svd(self.dense, self.domain.factor, self.codomain.factor)

    def norm(self) -> float:
        """Operator norm in the two Gram metrics."""
        return self.svd.sigma_max

    @property
    def rank(self) -> int:
        return self.svd.rank

    @cached_property
    def adjoint(self) -> "BoundedOperator":
        return adjoint(self)

    def is_zero(self) -> bool:
        if sp.issparse(self.matrix):
            return self.matrix.count_nonzero() == 0
        return not np.any(self.matrix)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Gram-orthonormal columns spanning a subspace of ``space``."""

    space: InnerProductSpace
    columns: np.ndarray
    kind: str = "other"  # kernel | range | cohomology | prebasis | other

    def __post_init__(self):
        cols = np.asarray(self.columns, dtype=float)
        cols = np.zeros((0, 0)) if self.space.dim == 0 else cols.reshape(self.space.dim, -1)
        object.__setattr__(self, "columns", cols)
        linalg.check_orthonormal(cols, self.space.gram)

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    @cached_property
    def projector(self) -> np.ndarray:
        return linalg.orthogonal_projector(self.columns, self.space.gram)

    def coordinates(self, x) -> np.ndarray:
        return self.columns.T @ (self.space.gram @ x)


def adjoint(A: BoundedOperator) -> BoundedOperator:
    """``A* = G0^{-1} A.T G1``, the adjoint with respect to both Gram metrics."""
    At_G1 = linalg.as_dense(A.matrix.T @ A.codomain.gram)
    return BoundedOperator(A.codomain, A.domain, A.domain.factor.solve(At_G1))


def kernel(A: BoundedOperator) -> SubspaceBasis:
    K, _, _ = linalg.kernel_range_bases(A.svd)
    return SubspaceBasis(A.domain, K, "kernel")


def range_basis(A: BoundedOperator) -> SubspaceBasis:
    _, R, _ = linalg.kernel_range_bases(A.svd)
    return SubspaceBasis(A.codomain, R, "range")


class ReducedConstant(NamedTuple):
    c: float
    sigma_min_positive: float

    @property
    def no_reduced_part(self) -> bool:
        return math.isinf(self.c)


NO_REDUCED_PART = ReducedConstant(math.inf, 0.0)


def reduced_constant(A: BoundedOperator) -> ReducedConstant:
    """Best constant ``c_A`` with ``|x| <= c_A |A x|`` on ``N(A)^perp``.

    Returns :data:`NO_REDUCED_PART` (``c = inf``) for the zero operator.
    """
    s = A.svd.sigma_min_positive
    if A.svd.rank == 0:
        return NO_REDUCED_PART
    return ReducedConstant(1.0 / s, s)


def _relative_composition(A: BoundedOperator, B: BoundedOperator) -> float:
    """``|A @ B| / (|A| |B|)`` in the weighted norms, 0 when the product is exactly 0."""
    prod = A.matrix @ B.matrix
    if sp.issparse(prod):
        prod = prod.toarray()
    if not np.any(prod):
        return 0.0
    na, nb = A.norm(), B.norm()
    num = linalg.weighted_norm(prod, B.domain.factor, A.codomain.factor)
    return num / (na * nb) if na * nb > 0 else math.inf


@dataclass(frozen=True, eq=False)
class ComplexPair:
    A0: BoundedOperator
    A1: BoundedOperator
    composition_residual: float = 0.0
    dual_residual: float = 0.0

    @property
    def H0(self) -> InnerProductSpace:
        return self.A0.domain

    @property
    def H1(self) -> InnerProductSpace:
        return self.A0.codomain

    @property
    def H2(self) -> InnerProductSpace:
        return self.A1.codomain

    @cached_property
    def _harmonic(self):
        return _harmonic(self)

    @property
    def harmonic(self) -> SubspaceBasis:
        """Cohomology ``N01 = N(A1) & N(A0*)`` from the kernel of ``[A1; A0*]``."""
        return self._harmonic[0]

    @property
    def harmonic_cross_check(self) -> dict:
        """Agreement of the stacked-kernel and Hodge-Laplacian routes to ``N01``."""
        return self._harmonic[1]

    @property
    def cohomology_dim(self) -> int:
        return self.harmonic.dim

    @cached_property
    def helmholtz(self) -> "HelmholtzProjectors":
        return refined_helmholtz(self)

    def dual(self) -> "ComplexPair":
        """The adjoint pair ``H2 --A1*--> H1 --A0*--> H0``."""
        return make_complex(self.A1.adjoint, self.A0.adjoint)


def make_complex(A0: BoundedOperator, A1: BoundedOperator, tol: float = COMPLEX_TOL) -> ComplexPair:
    """Check ``A1 A0 = 0`` (and ``A0* A1* = 0``) and bundle the pair."""
    if not A0.codomain.same_as(A1.domain):
        raise ShapeMismatch("codomain of A0 must be the domain of A1")
    res = _relative_composition(A1, A0)
    if res > tol:
        raise ComplexPropertyViolated(res, tol)
    dual = _relative_composition(A0.adjoint, A1.adjoint)
    if dual > tol:
        raise ComplexPropertyViolated(dual, tol, "A0* A1*")
    return ComplexPair(A0, A1, res, dual)


def _harmonic(cp: ComplexPair, tol_factor: float = linalg.DEFAULT_TOL_FACTOR):
    H0, H1, H2 = cp.H0, cp.H1, cp.H2
    n = H1.dim
    A1 = cp.A1.dense
    A0s = cp.A0.adjoint.dense
    stacked = np.vstack([A1, A0s])
    G = np.zeros((H2.dim + H0.dim,) * 2)
    G[: H2.dim, : H2.dim] = H2.gram
    G[H2.dim :, H2.dim :] = H0.gram
    svd = linalg.weighted_svd(stacked, H1.factor, G, tol_factor)
    K, _, _ = linalg.kernel_range_bases(svd)
    K = linalg.canonical_basis(K, H1.gram)

    # second route: kernel of the Hodge-Laplacian A0 A0* + A1* A1
    F = H1.factor
    lap = cp.A0.dense @ A0s + cp.A1.adjoint.dense @ A1
    W = F.whiten(F.solve_lower(lap.T).T)
    W = 0.5 * (W + W.T)
    if n:
        lam, vec = np.linalg.eigh(W)
        cut = tol_factor * np.finfo(float).eps * n * max(abs(lam).max(), 0.0)
        K2 = F.unwhiten(vec[:, lam <= cut])
    else:
        K2 = np.zeros((0, 0))
    P1 = K @ (K.T @ H1.gram)
    P2 = K2 @ (K2.T @ H1.gram)
    check = {
        "dim_stacked": K.shape[1],
        "dim_laplacian": K2.shape[1],
        "projector_gap": float(np.max(np.abs(P1 - P2), initial=0.0)),
        "rank_gap": svd.rank_gap,
    }
    return SubspaceBasis(H1, K, "cohomology"), check


@dataclass(frozen=True, eq=False)
class HelmholtzProjectors:
    """``H1 = R(A0) (+) N01 (+) R(A1*)`` as three G1-orthogonal projectors."""

    P_R0: np.ndarray
    P_N01: np.ndarray
    P_R1star: np.ndarray
    range_A0: SubspaceBasis
    harmonic: SubspaceBasis
    range_A1star: SubspaceBasis
    residuals: dict = field(default_factory=dict)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.range_A0.dim, self.harmonic.dim, self.range_A1star.dim


def refined_helmholtz(cp: ComplexPair) -> HelmholtzProjectors:
    H1 = cp.H1
    R0 = range_basis(cp.A0)
    R1s = SubspaceBasis(H1, cp.A1.svd.right_basis[:, : cp.A1.svd.rank], "range")
    N = cp.harmonic
    P0, PN, P1 = R0.projector, N.projector, R1s.projector
    G = H1.gram
    eye = np.eye(H1.dim)
    res = {
        "sum_minus_identity": _maxabs(P0 + PN + P1 - eye),
        "pairwise_products": max(
            _maxabs(P0 @ PN), _maxabs(P0 @ P1), _maxabs(PN @ P1),
            _maxabs(PN @ P0), _maxabs(P1 @ P0), _maxabs(P1 @ PN),
        ),
        "self_adjointness": max(_maxabs(G @ P - P.T @ G) for P in (P0, PN, P1)) / max(_maxabs(G), 1.0),
        "dimension_defect": H1.dim - (R0.dim + N.dim + R1s.dim),
    }
    return HelmholtzProjectors(P0, PN, P1, R0, N, R1s, res)


def _maxabs(M) -> float:
    return float(np.max(np.abs(M), initial=0.0))


class Decomposition(NamedTuple):
    x_R: np.ndarray
    x_H: np.ndarray
    x_Rstar: np.ndarray


def decompose_element(cp: ComplexPair, x) -> Decomposition:
    """Split ``x`` into its ``R(A0)``, ``N01`` and ``R(A1*)`` components."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cp.H1.dim,):
        raise ShapeMismatch(f"expected a vector of length {cp.H1.dim}, got {x.shape}")
    h = cp.helmholtz
    return Decomposition(h.P_R0 @ x, h.P_N01 @ x, h.P_R1star @ x)


def decomposition_residuals(cp: ComplexPair, x, parts: Decomposition) -> dict:
    """Relative reconstruction and mutual-orthogonality residuals."""
    H1 = cp.H1
    nx2 = H1.inner(x, x)
    if nx2 == 0:
        return {"reconstruction": 0.0, "orthogonality": 0.0, "pythagoras": 0.0}
    a, b, c = parts
    return {
        "reconstruction": H1.norm(x - a - b - c) / math.sqrt(nx2),
        "orthogonality": max(abs(H1.inner(a, b)), abs(H1.inner(a, c)), abs(H1.inner(b, c))) / nx2,
        "pythagoras": abs(H1.inner(a, a) + H1.inner(b, b) + H1.inner(c, c) - nx2) / nx2,
    }


@dataclass
class MiniFatReport:
    ranges_closed: bool
    rank_gaps: dict
    cohomology_dim: int
    c_A0: float
    c_A1: float
    helmholtz_residuals: dict
    combined_estimate_margin: float
    checks: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "ranges_closed": self.ranges_closed,
            "rank_gaps": self.rank_gaps,
            "cohomology_dim": self.cohomology_dim,
            "c_A0": self.c_A0,
            "c_A1": self.c_A1,
            "helmholtz_residuals": self.helmholtz_residuals,
            "combined_estimate_margin": self.combined_estimate_margin,
            "checks": self.checks,
            "notes": self.notes,
        }


def combined_estimate_margins(cp: ComplexPair, n_samples: int = 100, seed: int = 0) -> np.ndarray:
    """Relative margins of ``|y|^2 <= c0^2 |A0* y|^2 + c1^2 |A1 y|^2`` for random ``y`` orthogonal to ``N01``."""
    H1 = cp.H1
    if H1.dim == 0:
        return np.zeros(0)
    rng = np.random.default_rng(seed)
    c0 = reduced_constant(cp.A0).c
    c1 = reduced_constant(cp.A1).c
    # an operator without reduced part contributes nothing: its range is {0}
    c0 = 0.0 if math.isinf(c0) else c0
    c1 = 0.0 if math.isinf(c1) else c1
    Y = rng.standard_normal((H1.dim, n_samples))
    Y = Y - cp.helmholtz.P_N01 @ Y
    A0s, A1 = cp.A0.adjoint.dense, cp.A1.dense
    margins = []
    for y in Y.T:
        ny2 = H1.inner(y, y)
        if ny2 == 0:
            continue
        rhs = c0**2 * cp.H0.inner(A0s @ y, A0s @ y) + c1**2 * cp.H2.inner(A1 @ y, A1 @ y)
        margins.append((rhs - ny2) / ny2)
    return np.array(margins)


def mini_fat(cp: ComplexPair, n_samples: int = 100, seed: int = 0, tol: float = 1e-9) -> MiniFatReport:
    """Collect closed-range gaps, constants, cohomology and the combined estimate for a pair."""
    h = cp.helmholtz
    c0 = reduced_constant(cp.A0)
    c1 = reduced_constant(cp.A1)
    margins = combined_estimate_margins(cp, n_samples, seed)
    worst = float(margins.min()) if margins.size else 0.0
    notes = ["compact embeddings hold trivially in finite dimension"]
    if c0.no_reduced_part:
        notes.append("A0: NoReducedPart")
    if c1.no_reduced_part:
        notes.append("A1: NoReducedPart")
    cc = cp.harmonic_cross_check
    checks = {
        "helmholtz_sum": h.residuals["sum_minus_identity"] <= PROJECTOR_TOL,
        "helmholtz_orthogonal": h.residuals["pairwise_products"] <= PROJECTOR_TOL,
        "helmholtz_dimensions": h.residuals["dimension_defect"] == 0,
        "harmonic_cross_check": cc["dim_stacked"] == cc["dim_laplacian"],
        "combined_estimate": worst >= -tol,
    }
    return MiniFatReport(
        ranges_closed=True,
        rank_gaps={"A0": cp.A0.svd.rank_gap, "A1": cp.A1.svd.rank_gap},
        cohomology_dim=cp.cohomology_dim,
        c_A0=c0.c,
        c_A1=c1.c,
        helmholtz_residuals=dict(h.residuals),
        combined_estimate_margin=worst,
        checks=checks,
        notes=notes,
    )


@dataclass(frozen=True, eq=False)
class LongComplexEnds:
    """Embeddings/projections closing a chain at both ends.

    ``iota_left : N(A_first) -> H_first`` and ``pi_left = iota_left*``;
    ``iota_right : N(A_last*) -> H_last`` and ``pi_right = iota_right*``.
    """

    iota_left: BoundedOperator
    pi_left: BoundedOperator
    pi_right: BoundedOperator
    iota_right: BoundedOperator
    end_cohomology: tuple[int, int]
    projector_residuals: tuple[float, float]


def check_chain(chain: Sequence[BoundedOperator], tol: float = COMPLEX_TOL) -> list[ComplexPair]:
    return [make_complex(a, b, tol) for a, b in zip(chain[:-1], chain[1:])]


def long_complex_ends(chain: Sequence[BoundedOperator], tol: float = COMPLEX_TOL) -> LongComplexEnds:
    if not chain:
        raise ShapeMismatch("empty chain")
    check_chain(chain, tol)
    first, last = chain[0], chain[-1]

    Kl = kernel(first)
    Nl = InnerProductSpace.euclidean(Kl.dim, f"N({first.domain.label or 'A_first'})")
    iota_l = BoundedOperator(Nl, first.domain, Kl.columns)
    pi_l = iota_l.adjoint

    last_star = last.adjoint
    Kr = kernel(last_star)
    Nr = InnerProductSpace.euclidean(Kr.dim, f"N({last.codomain.label or 'A_last'}*)")
    iota_r = BoundedOperator(Nr, last.codomain, Kr.columns)
    pi_r = iota_r.adjoint

    res_l = _maxabs(iota_l.dense @ pi_l.dense - Kl.projector)
    res_r = _maxabs(iota_r.dense @ pi_r.dense - Kr.projector)
    left = make_complex(iota_l, first, tol)
    right = make_complex(last, pi_r, tol)
    return LongComplexEnds(
        iota_l, pi_l, pi_r, iota_r,
        (left.cohomology_dim, right.cohomology_dim),
        (res_l, res_r),
    )
