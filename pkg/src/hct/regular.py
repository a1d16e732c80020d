"""Regular decompositions, potential operators and pre-bases.

Conventions for a complex pair ``H0 --A0--> H1 --A1--> H2``:

* a regular decomposition is a pair ``(Q1, Q0)`` with ``Q1 + A0 Q0 = id``;
* a potential of ``A1`` is a right inverse ``P`` on ``R(A1)``;
* ``pi_delta`` is the orthogonal projector onto ``N(A0*)``, ``pi_d`` the one
  onto ``N(A1)``; a d-pre-basis is a family in ``N(A1)`` whose ``pi_delta``
  images form a basis of the cohomology ``N01``.

Regular subspaces have no intrinsic meaning in finite dimension; they are
modeled as caller-designated subspaces and default to the whole space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import (
    DecompositionMismatch,
    DecompositionResidualTooLarge,
    NoReducedPart,
    NotAPreBasis,
    NotExact,
    ShapeMismatch,
)
from .toolbox import (
    BoundedOperator,
    ComplexPair,
    kernel,
    make_complex,
    range_basis,
)

IDENTITY_TOL = 1e-9
RESIDUAL_TOL = 1e-10


def _maxabs(M) -> float:
    return float(np.max(np.abs(M), initial=0.0))


def _rank(M, G_rows=None) -> int:
    """Rank of the column span of ``M`` (Gram-aware when ``G_rows`` is given)."""
    if M.shape[1] == 0:
        return 0
    G = np.eye(M.shape[0]) if G_rows is None else G_rows
    return linalg.gram_orthonormalize(M, G).shape[1]


@dataclass(frozen=True, eq=False)
class RegularDecomposition:
    """``Q1 + A0 Q0 = id`` on ``H1``.

    ``regular_bases`` optionally holds Gram-orthonormal bases of the designated
    regular subspaces ``(H0+, H1+)``; ``None`` means the whole space.
    """

    complex: ComplexPair
    Q1: BoundedOperator
    Q0: BoundedOperator
    residual: float
    regular_bases: tuple | None = None

    @property
    def norms(self) -> dict:
        """Computed operator norms, standing in for the boundedness constants."""
        return {"Q1": self.Q1.norm(), "Q0": self.Q0.norm()}


def make_regular_decomposition(cp: ComplexPair, Q1, Q0, regular_bases=None,
                               tol: float = RESIDUAL_TOL) -> RegularDecomposition:
    """Validate ``Q1 + A0 Q0 = id`` (and the regular-subspace ranges) and wrap."""
    H0, H1 = cp.H0, cp.H1
    Q1 = Q1 if isinstance(Q1, BoundedOperator) else BoundedOperator(H1, H1, np.asarray(Q1, float))
    Q0 = Q0 if isinstance(Q0, BoundedOperator) else BoundedOperator(H1, H0, np.asarray(Q0, float))
    total = Q1.dense + cp.A0.dense @ Q0.dense
    scale = max(1.0, _maxabs(Q1.dense), _maxabs(cp.A0.dense @ Q0.dense))
    res = _maxabs(total - np.eye(H1.dim)) / scale
    if res > tol:
        raise DecompositionResidualTooLarge(f"|Q1 + A0 Q0 - I| = {res:.2e} > {tol:.1e}")
    if regular_bases is not None:
        for Q, B, G in ((Q0, regular_bases[0], H0.gram), (Q1, regular_bases[1], H1.gram)):
            if B is None:
                continue
            P = linalg.orthogonal_projector(B, G)
            out = _maxabs(Q.dense - P @ Q.dense) / max(_maxabs(Q.dense), 1.0)
            if out > tol:
                raise DecompositionResidualTooLarge(
                    f"decomposition operator leaves its regular subspace ({out:.2e})"
                )
    return RegularDecomposition(cp, Q1, Q0, res, regular_bases)


def trivial_decomposition(cp: ComplexPair) -> RegularDecomposition:
    """``Q1 = id``, ``Q0 = 0``."""
    return make_regular_decomposition(cp, np.eye(cp.H1.dim), np.zeros((cp.H0.dim, cp.H1.dim)))


def random_decomposition(cp: ComplexPair, seed: int = 0) -> RegularDecomposition:
    """``Q0`` random, ``Q1 = id - A0 Q0``: a generic oblique decomposition for testing."""
    rng = np.random.default_rng(seed)
    Q0 = rng.standard_normal((cp.H0.dim, cp.H1.dim))
    return make_regular_decomposition(cp, np.eye(cp.H1.dim) - cp.A0.dense @ Q0, Q0)


@dataclass(frozen=True, eq=False)
class PotentialOperator:
    """Right inverse ``P`` of ``target`` on its range (``target @ P = id`` on ``R(target)``).

    ``matrix`` acts on the whole codomain of ``target``; only its action on the
    range is constrained.
    """

    target: BoundedOperator
    matrix: np.ndarray

    def __call__(self, r):
        return self.matrix @ r

    @property
    def operator(self) -> BoundedOperator:
        return BoundedOperator(self.target.codomain, self.target.domain, self.matrix)

    def right_inverse_residual(self) -> float:
        R = range_basis(self.target).columns
        if R.shape[1] == 0:
            return 0.0
        return _maxabs(self.target.dense @ self.matrix @ R - R) / max(_maxabs(R), 1.0)


def pseudoinverse_potential(A: BoundedOperator) -> PotentialOperator:
    """``(A_perp)^{-1}`` extended by zero: the default potential of ``A``."""
    return PotentialOperator(A, linalg.weighted_pseudoinverse(A.dense, A.domain.factor, A.codomain.factor))


def potential_from_decomposition(rd: RegularDecomposition, tol: float = RESIDUAL_TOL) -> PotentialOperator:
    """``P = Q1 (A1_perp)^{-1}``."""
    A1 = rd.complex.A1
    if A1.rank == 0:
        raise NoReducedPart("A1 = 0 has no potential")
    if rd.residual > tol:
        raise DecompositionResidualTooLarge(f"decomposition residual {rd.residual:.2e}")
    Ainv = pseudoinverse_potential(A1).matrix
    P = PotentialOperator(A1, rd.Q1.dense @ Ainv)
    res = P.right_inverse_residual()
    if res > tol:
        raise DecompositionResidualTooLarge(f"A1 P != id on R(A1) ({res:.2e})")
    return P


class WeakDecomposition(NamedTuple):
    Qtilde: BoundedOperator
    Ntilde: BoundedOperator


def decomposition_from_potential(P: PotentialOperator) -> WeakDecomposition:
    """``Q~ = P A1`` and ``N~ = id - Q~``; ``N~`` maps into ``N(A1)``."""
    A1 = P.target
    H1 = A1.domain
    Q = P.matrix @ A1.dense
    return WeakDecomposition(BoundedOperator(H1, H1, Q), BoundedOperator(H1, H1, np.eye(H1.dim) - Q))


@dataclass
class ProjectorDiagnostics:
    Q_idempotence: float
    N_idempotence: float
    QN: float
    NQ: float
    sum_identity: float
    I_minus_squared: float
    I_minus_sigma_min: float
    I_minus_sigma_max: float
    tolerance: float = IDENTITY_TOL

    @property
    def residuals(self) -> dict:
        return {
            "Q^2-Q": self.Q_idempotence,
            "N^2-N": self.N_idempotence,
            "QN": self.QN,
            "NQ": self.NQ,
            "Q+N-I": self.sum_identity,
            "I_-^2-I": self.I_minus_squared,
        }

    @property
    def is_projection_pair(self) -> bool:
        return all(v <= self.tolerance for v in self.residuals.values())

    @property
    def I_minus_invertible(self) -> bool:
        return self.I_minus_sigma_min > self.tolerance

    def to_dict(self) -> dict:
        d = dict(self.residuals)
        d.update(
            I_minus_sigma_min=self.I_minus_sigma_min,
            I_minus_sigma_max=self.I_minus_sigma_max,
            status=self.is_projection_pair,
        )
        return d


def projector_diagnostics(Qtilde: BoundedOperator, Ntilde: BoundedOperator,
                          tol: float = IDENTITY_TOL) -> ProjectorDiagnostics:
    """Residuals of the projection identities and the conditioning of ``I_- = 2Q~ - id``.

    All residuals are measured in the weighted operator norm of the space.
    An oblique ``Q~`` gives ``sigma_min(I_-) < 1`` with ``sigma_min * sigma_max = 1``.
    """
    if not Qtilde.domain.same_as(Ntilde.domain) or Qtilde.shape != Ntilde.shape:
        raise ShapeMismatch("Q~ and N~ must act on the same space")
    H = Qtilde.domain
    F = H.factor
    Q, N = Qtilde.dense, Ntilde.dense
    eye = np.eye(H.dim)

    def wn(M):
        return linalg.weighted_norm(M, F, F)

    Im = 2 * Q - eye
    s = np.linalg.svd(F.whiten(F.solve_lower(Im.T).T), compute_uv=False) if H.dim else np.ones(1)
    return ProjectorDiagnostics(
        Q_idempotence=wn(Q @ Q - Q),
        N_idempotence=wn(N @ N - N),
        QN=wn(Q @ N),
        NQ=wn(N @ Q),
        sum_identity=wn(Q + N - eye),
        I_minus_squared=wn(Im @ Im - eye),
        I_minus_sigma_min=float(s.min()),
        I_minus_sigma_max=float(s.max()),
        tolerance=tol,
    )


def _pair_from_potentials(P_A1: PotentialOperator, P_A0: PotentialOperator) -> ComplexPair:
    return make_complex(P_A0.target, P_A1.target)


def exact_decomposition(P_A1: PotentialOperator, P_A0: PotentialOperator,
                        tol: float = RESIDUAL_TOL) -> RegularDecomposition:
    """``Q1 = P_A1 A1`` and ``Q0 = P_A0 (id - Q1)`` for an exact pair.

    Raises:
        NotExact: if the cohomology ``N01`` is nontrivial.
    """
    cp = _pair_from_potentials(P_A1, P_A0)
    if cp.cohomology_dim:
        raise NotExact(cp.cohomology_dim)
    Qt, Nt = decomposition_from_potential(P_A1)
    Q0 = P_A0.matrix @ Nt.dense
    rd = make_regular_decomposition(cp, Qt, Q0, tol=tol)
    # directness: R(Q1) & N(A1) = {0}
    G = cp.H1.gram
    rQ = _rank(Qt.dense, G)
    K = kernel(cp.A1).columns
    if _rank(np.hstack([Qt.dense, K]), G) != rQ + K.shape[1]:
        raise DecompositionResidualTooLarge("R(Q1) meets N(A1): decomposition not direct")
    return rd


def pairing_identity(cp: ComplexPair, x, p1, p0, tol: float = RESIDUAL_TOL) -> float:
    """Relative residual of ``|x|^2 = <x, p1> + <A0* x, p0>`` for ``x = p1 + A0 p0``."""
    H0, H1 = cp.H0, cp.H1
    x, p1, p0 = (np.asarray(v, dtype=float) for v in (x, p1, p0))
    nx = H1.norm(x)
    if nx == 0:
        return 0.0
    mismatch = H1.norm(x - p1 - cp.A0.dense @ p0) / nx
    if mismatch > tol:
        raise DecompositionMismatch(f"x != p1 + A0 p0 (relative {mismatch:.2e})")
    lhs = H1.inner(x, x)
    rhs = H1.inner(x, p1)
    if np.any(p0):
        rhs += H0.inner(cp.A0.adjoint.dense @ x, p0)
    return abs(lhs - rhs) / lhs


# ---------------------------------------------------------------------------
# pre-bases


@dataclass(frozen=True, eq=False)
class PreBasis:
    """Kernel family ``B`` whose harmonic projections form a basis of ``N01``.

    ``kind == "d"``: ``B`` lies in ``N(A1)`` and is projected by ``pi_delta``.
    ``kind == "delta"``: ``B`` lies in ``N(A0*)`` and is projected by ``pi_d``.
    ``I_H`` maps ``B``-coordinates to coordinates in the harmonic basis.
    """

    complex: ComplexPair
    B: np.ndarray
    I_H: np.ndarray
    kind: str = "d"
    condition: float = 1.0

    @property
    def dim(self) -> int:
        return self.B.shape[1]


def pi_delta(cp: ComplexPair) -> np.ndarray:
    """Orthogonal projector onto ``N(A0*) = R(A0)^perp``."""
    return np.eye(cp.H1.dim) - cp.helmholtz.P_R0


def pi_d(cp: ComplexPair) -> np.ndarray:
    """Orthogonal projector onto ``N(A1) = R(A1*)^perp``."""
    return np.eye(cp.H1.dim) - cp.helmholtz.P_R1star


def euclidean_harmonic(cp: ComplexPair) -> np.ndarray:
    """Orthonormal (Euclidean) basis of ``N(A1) & N(A0^T)``."""
    n = cp.H1.dim
    if n == 0:
        return np.zeros((0, 0))
    M = np.vstack([cp.A1.dense, cp.A0.dense.T])
    if M.shape[0] == 0:
        return np.eye(n)
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    tol = linalg.rank_tolerance(float(s[0]) if s.size else 0.0, M.shape)
    r = int(np.count_nonzero(s > tol))
    return Vt[r:].T.copy()


def build_prebasis(cp: ComplexPair, candidates="auto", kind: str = "d",
                   tol: float = IDENTITY_TOL) -> PreBasis:
    """Validate a d- (or delta-) pre-basis and compute ``I_H``.

    ``candidates="auto"`` uses the harmonic basis itself (``I_H = id``).
    ``candidates="cochain"`` uses the Euclidean harmonic cochains
    ``Z = N(A1) & N(A0^T)``: ``Z`` for ``kind="d"`` and ``G1^{-1} Z`` for
    ``kind="delta"``. Both lie in the required kernel and differ from the
    weighted harmonic basis whenever the Gram matrix is not the identity.
    """
    if kind not in ("d", "delta"):
        raise ValueError(f"kind must be 'd' or 'delta', not {kind!r}")
    H = cp.harmonic.columns
    G = cp.H1.gram
    if isinstance(candidates, str):
        if candidates == "auto":
            B = H.copy()
        elif candidates == "cochain":
            B = euclidean_harmonic(cp)
            if kind == "delta":
                B = cp.H1.factor.solve(B)
        else:
            raise ValueError(f"unknown candidate rule {candidates!r}")
    else:
        B = np.asarray(candidates, float)
    B = B.reshape(cp.H1.dim, -1)
    if B.shape[1] != H.shape[1]:
        raise NotAPreBasis(f"need {H.shape[1]} candidates (cohomology dimension), got {B.shape[1]}")
    if kind == "d":
        op, proj = cp.A1, pi_delta(cp)
    else:
        op, proj = cp.A0.adjoint, pi_d(cp)
    opnorm = op.norm()
    col_norms = [cp.H1.norm(b) for b in B.T]
    for j, b in enumerate(B.T):
        if col_norms[j] == 0:
            raise NotAPreBasis(f"candidate {j} is zero")
        if op.codomain.norm(op.dense @ b) > 1e-8 * opnorm * col_norms[j]:
            raise NotAPreBasis(f"candidate {j} is not in the kernel")
    I_H = H.T @ G @ proj @ B
    s = np.linalg.svd(I_H, compute_uv=False) if I_H.size else np.ones(1)
    if I_H.size and s.min() <= tol * max(col_norms):
        raise NotAPreBasis("harmonic projections of the candidates are linearly dependent")
    return PreBasis(cp, B, I_H, kind, float(s.max() / s.min()) if I_H.size else 1.0)


class ThreeTermOperators(NamedTuple):
    Q1: np.ndarray
    Qinf: np.ndarray
    Q0: np.ndarray
    residual: float


def three_term_operators(cp: ComplexPair, P_A1: PotentialOperator, P_A0: PotentialOperator,
                         pb: PreBasis) -> ThreeTermOperators:
    """Operators with ``Q1 + Qinf + A0 Q0 = id``, ``R(Qinf) = span(B)``.

    ``Q1 = P_A1 A1``, ``Qinf = B I_H^{-1} H* pi_delta N~``,
    ``Q0 = P_A0 (N~ - Qinf)``.
    """
    if pb.kind != "d":
        raise NotAPreBasis("three-term decomposition needs a d-pre-basis")
    H1 = cp.H1
    G = H1.gram
    Qt, Nt = decomposition_from_potential(P_A1)
    Hb = cp.harmonic.columns
    if pb.dim:
        coeff = np.linalg.solve(pb.I_H, Hb.T @ G @ pi_delta(cp) @ Nt.dense)
        Qinf = pb.B @ coeff
    else:
        Qinf = np.zeros((H1.dim, H1.dim))
    Q0 = P_A0.matrix @ (Nt.dense - Qinf)
    total = Qt.dense + Qinf + cp.A0.dense @ Q0
    res = linalg.weighted_norm(total - np.eye(H1.dim), H1.factor, H1.factor)
    return ThreeTermOperators(Qt.dense, Qinf, Q0, res)


class ThreeTerm(NamedTuple):
    x1: np.ndarray
    xB: np.ndarray
    p0: np.ndarray
    residual: float


def three_term_decomposition(cp: ComplexPair, P_A1: PotentialOperator, P_A0_on_range: PotentialOperator,
                             pb: PreBasis, x) -> ThreeTerm:
    """``x = x1 + xB + A0 p0`` with ``x1 = P_A1 A1 x`` and ``xB`` in ``span(B)``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cp.H1.dim,):
        raise ShapeMismatch(f"expected a vector of length {cp.H1.dim}")
    ops = three_term_operators(cp, P_A1, P_A0_on_range, pb)
    x1, xB, p0 = ops.Q1 @ x, ops.Qinf @ x, ops.Q0 @ x
    nx = cp.H1.norm(x)
    res = cp.H1.norm(x - x1 - xB - cp.A0.dense @ p0) / nx if nx else 0.0
    return ThreeTerm(x1, xB, p0, res)


# ---------------------------------------------------------------------------
# alternative projections


def _intersect_with_complement(S: np.ndarray, T: np.ndarray, G) -> np.ndarray:
    """G-orthonormal basis of ``span(S) & span(T)^perp`` (``S`` G-orthonormal)."""
    if S.shape[1] == 0:
        return S
    if T.shape[1] == 0:
        return S
    M = T.T @ G @ S
    # null space of M, relative to the column scale of T
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    tol = linalg.rank_tolerance(float(s[0]) if s.size else 0.0, M.shape) + 1e-12 * np.linalg.norm(T)
    r = int(np.count_nonzero(s > tol))
    Z = S @ Vt[r:].T
    return linalg.gram_orthonormalize(Z, G) if Z.shape[1] else Z


def _same_subspace(X: np.ndarray, Y: np.ndarray, G, tol: float = 1e-8) -> tuple[bool, float]:
    if X.shape[1] != Y.shape[1]:
        return False, math.inf
    if X.shape[1] == 0:
        return True, 0.0
    PX = X @ (X.T @ G)
    PY = Y @ (Y.T @ G)
    gap = _maxabs(PX @ Y - Y) + _maxabs(PY @ X - X)
    return gap <= tol, gap


@dataclass
class AlternativeProjectionReport:
    checks: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"checks": dict(self.checks), "evidence": dict(self.evidence), "passed": self.passed}


def alternative_projection_check(cp: ComplexPair, pb_d, pb_delta) -> AlternativeProjectionReport:
    """Rank evidence that pre-bases give alternative harmonic projections.

    For a d-pre-basis ``Bd`` and a delta-pre-basis ``Bdel``:
    ``N01 & Bd^perp = {0}``, ``N(A0*) & Bd^perp = R(A1*)``,
    ``N01 & Bdel^perp = {0}``, ``N(A1) & Bdel^perp = R(A0)``.
    Arrays are accepted in place of :class:`PreBasis` so that wrong families
    can be checked (and rejected) without validation.
    """
    G = cp.H1.gram
    Bd = pb_d.B if isinstance(pb_d, PreBasis) else np.asarray(pb_d, float).reshape(cp.H1.dim, -1)
    Bl = pb_delta.B if isinstance(pb_delta, PreBasis) else np.asarray(pb_delta, float).reshape(cp.H1.dim, -1)
    h = cp.helmholtz
    Hm = h.harmonic.columns
    R0 = h.range_A0.columns
    R1s = h.range_A1star.columns
    NA0s = linalg.gram_orthonormalize(np.hstack([Hm, R1s]), G)  # N(A0*) = N01 + R(A1*)
    NA1 = linalg.gram_orthonormalize(np.hstack([R0, Hm]), G)  # N(A1) = R(A0) + N01

    rep = AlternativeProjectionReport()
    x = _intersect_with_complement(Hm, Bd, G)
    rep.evidence["dim N01&Bd^perp"] = x.shape[1]
    rep.checks["harmonic_trivial_d"] = x.shape[1] == 0
    y = _intersect_with_complement(NA0s, Bd, G)
    ok, gap = _same_subspace(y, R1s, G)
    rep.evidence["N(A0*)&Bd^perp vs R(A1*)"] = {"dims": (y.shape[1], R1s.shape[1]), "gap": gap}
    rep.checks["cokernel_equals_range_d"] = ok
    x = _intersect_with_complement(Hm, Bl, G)
    rep.evidence["dim N01&Bdelta^perp"] = x.shape[1]
    rep.checks["harmonic_trivial_delta"] = x.shape[1] == 0
    y = _intersect_with_complement(NA1, Bl, G)
    ok, gap = _same_subspace(y, R0, G)
    rep.evidence["N(A1)&Bdelta^perp vs R(A0)"] = {"dims": (y.shape[1], R0.shape[1]), "gap": gap}
    rep.checks["kernel_equals_range_delta"] = ok
    return rep


__all__ = [
    "AlternativeProjectionReport",
    "PotentialOperator",
    "PreBasis",
    "ProjectorDiagnostics",
    "RegularDecomposition",
    "alternative_projection_check",
    "build_prebasis",
    "decomposition_from_potential",
    "euclidean_harmonic",
    "exact_decomposition",
    "make_regular_decomposition",
    "pairing_identity",
    "pi_d",
    "pi_delta",
    "potential_from_decomposition",
    "projector_diagnostics",
    "pseudoinverse_potential",
    "random_decomposition",
    "three_term_decomposition",
    "three_term_operators",
    "trivial_decomposition",
]
