"""Discrete de Rham complexes with mixed boundary conditions.

Degree-q DOFs are the q-simplices that are not faces of a ``gamma_t`` facet;
the operators are the integer coboundaries restricted to those DOFs and the
inner products are (weighted) mass matrices. Because the eliminated simplices
form a closed subcomplex, the restricted coboundaries still satisfy
``d_{q+1} d_q = 0`` exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import whitney
from .errors import BadParams, NoReducedPart, ShapeMismatch, WrongDimension
from .mesh import BoundaryPartition, SimplicialMesh, closure_masks, partition_from_facets
from .toolbox import (
    BoundedOperator,
    ComplexPair,
    InnerProductSpace,
    LongComplexEnds,
    SubspaceBasis,
    decompose_element,
    decomposition_residuals,
    long_complex_ends,
    make_complex,
    mini_fat,
    reduced_constant,
)

SCHEMES = ("whitney-galerkin", "dec-diagonal")
C_EQUALITY_RTOL = 1e-10


@dataclass(frozen=True)
class WeightField:
    """Per-degree admissible weights; missing degrees are unit weights."""

    per_degree: dict = field(default_factory=dict)

    @classmethod
    def unit(cls) -> "WeightField":
        return cls({})

    def get(self, q: int):
        return self.per_degree.get(q)

    def validated(self, mesh: SimplicialMesh) -> "WeightField":
        n = mesh.dim
        out = {}
        for q, w in self.per_degree.items():
            if not 0 <= q <= n:
                raise BadParams(f"weight given for degree {q} outside 0..{n}")
            out[q] = whitney.check_weight(w, len(mesh.cells), whitney.proxy_dim(n, q), f"weight[{q}]")
        return WeightField(out)

    @classmethod
    def random_spd(cls, mesh: SimplicialMesh, seed: int, degrees: Sequence[int] | None = None,
                   spread: float = 10.0) -> "WeightField":
        """Random SPD per-cell matrices with eigenvalues in ``[1, spread]``."""
        rng = np.random.default_rng(seed)
        n, C = mesh.dim, len(mesh.cells)
        degrees = range(n + 1) if degrees is None else degrees
        out = {}
        for q in degrees:
            k = whitney.proxy_dim(n, q)
            Q, _ = np.linalg.qr(rng.standard_normal((C, k, k)))
            lam = rng.uniform(1.0, spread, size=(C, k))
            out[q] = np.einsum("cij,cj,ckj->cik", Q, lam, Q)
        return cls(out)

    @classmethod
    def constant_matrix(cls, mesh: SimplicialMesh, q: int, matrix) -> "WeightField":
        """The same matrix (e.g. an anisotropic ``diag(1, 100)``) in every cell at degree ``q``."""
        m = np.asarray(matrix, dtype=float)
        return cls({q: np.broadcast_to(m, (len(mesh.cells),) + m.shape).copy()})

    def inverse(self) -> "WeightField":
        out = {}
        for q, w in self.per_degree.items():
            if w is None:
                out[q] = None
            else:
                w = np.asarray(w, dtype=float)
                out[q] = 1.0 / w if w.ndim <= 1 else np.linalg.inv(w)
        return WeightField(out)


def mass_matrix(mesh: SimplicialMesh, q: int, weight=None, scheme: str = "whitney-galerkin") -> sp.csr_matrix:
    if scheme == "whitney-galerkin":
        return whitney.whitney_mass(mesh, q, weight)
    if scheme == "dec-diagonal":
        return whitney.dec_mass(mesh, q, weight)
    raise BadParams(f"unknown scheme {scheme!r}; choose from {SCHEMES}")


@dataclass(frozen=True, eq=False)
class DiscreteDeRham:
    """``H^0 --d_0--> H^1 --> ... --> H^n`` with ``gamma_t`` eliminated."""

    mesh: SimplicialMesh
    partition: BoundaryPartition
    weights: WeightField
    scheme: str
    kept: tuple
    incidences: tuple
    masses: tuple

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @cached_property
    def spaces(self) -> tuple:
        return tuple(
            InnerProductSpace(len(k), M, f"H{q}") for q, (k, M) in enumerate(zip(self.kept, self.masses))
        )

    @cached_property
    def operators(self) -> tuple:
        S = self.spaces
        return tuple(BoundedOperator(S[q], S[q + 1], self.incidences[q].astype(float))
                     for q in range(self.dim))

    def dofs(self) -> tuple:
        return tuple(len(k) for k in self.kept)

    def _zero_space(self, label):
        return InnerProductSpace.euclidean(0, label)

    def operator(self, q: int) -> BoundedOperator:
        """``d_q``, with zero maps from/to a 0-dimensional space at the ends."""
        if q == -1:
            return BoundedOperator.zero(self._zero_space("H-1"), self.spaces[0])
        if q == self.dim:
            return BoundedOperator.zero(self.spaces[-1], self._zero_space(f"H{self.dim + 1}"))
        return self.operators[q]

    def pair(self, q: int) -> ComplexPair:
        """The segment ``(d_{q-1}, d_q)`` around degree ``q``."""
        if not 0 <= q <= self.dim:
            raise BadParams(f"degree {q} outside 0..{self.dim}")
        return self._pairs[q]

    @cached_property
    def _pairs(self) -> tuple:
        return tuple(make_complex(self.operator(q - 1), self.operator(q)) for q in range(self.dim + 1))

    @property
    def chain(self) -> list:
        return list(self.operators)

    def harmonic_dims(self) -> tuple:
        return tuple(self.pair(q).cohomology_dim for q in range(self.dim + 1))

    def integer_composition_zero(self) -> bool:
        """``d_{q+1} d_q == 0`` on the integer matrices."""
        return all(
            (self.incidences[q + 1] @ self.incidences[q]).count_nonzero() == 0 for q in range(self.dim - 1)
        )


def assemble_complex(mesh: SimplicialMesh, partition: BoundaryPartition | None = None,
                     weights: WeightField | None = None, scheme: str = "whitney-galerkin") -> DiscreteDeRham:
    """Restricted coboundaries and mass matrices for ``(mesh, gamma_t)``."""
    if scheme not in SCHEMES:
        raise BadParams(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    if partition is None:
        partition = partition_from_facets(mesh, [])
    weights = (weights or WeightField.unit()).validated(mesh)
    masks = closure_masks(mesh, partition.gamma_t)
    kept = tuple(np.flatnonzero(~m) for m in masks)
    incid = []
    for q in range(mesh.dim):
        D = mesh.incidence(q).tocsr()
        incid.append(D[kept[q + 1]][:, kept[q]].tocsr())
    masses = []
    for q in range(mesh.dim + 1):
        M = mass_matrix(mesh, q, weights.get(q), scheme)
        masses.append(M[kept[q]][:, kept[q]].tocsr())
    return DiscreteDeRham(mesh, partition, weights, scheme, kept, tuple(incid), tuple(masses))


# -- vector proxies ---------------------------------------------------------


VECTOR_LABELS_3D = ("grad_Gt", "mu^-1 curl_Gt", "div_Gt mu")
VECTOR_ADJOINT_LABELS_3D = ("-div_Gn eps", "eps^-1 curl_Gn", "-grad_Gn")
SPACE_LABELS_3D = ("L2", "L2_eps", "L2_mu", "L2")
VECTOR_LABELS_2D = {
    "rot": ("grad_Gt", "rot_Gt"),
    "grad-perp": ("grad_Gt", "div_Gt R"),
}


@dataclass(frozen=True, eq=False)
class VectorProxyComplex:
    """The long 3-D vector complex ``grad -> mu^-1 curl -> div mu`` and its end maps.

    Degree-2 coordinates are fluxes ``B = mu H``; the degree-2 Gram matrix is
    therefore the ``mu^{-1}``-weighted mass, which makes ``||mu^-1 curl E||_mu``
    the Gram norm of the plain coboundary of ``E``.
    """

    derham: DiscreteDeRham
    labels: tuple
    adjoint_labels: tuple
    space_labels: tuple
    ends: LongComplexEnds

    @property
    def operators(self) -> tuple:
        return self.derham.operators

    @property
    def adjoints(self) -> tuple:
        return tuple(A.adjoint for A in self.derham.operators)

    def labeled(self) -> dict:
        return dict(zip(self.labels, self.operators))


def vector_proxies(mesh: SimplicialMesh, partition: BoundaryPartition | None = None, eps=None, mu=None,
                   scheme: str = "whitney-galerkin") -> VectorProxyComplex:
    """Assemble the 3-D vector de Rham complex with material weights ``eps`` and ``mu``."""
    if mesh.dim != 3:
        raise WrongDimension(f"vector proxies need a 3-D mesh, got dimension {mesh.dim}")
    w = {}
    if eps is not None:
        w[1] = eps
    if mu is not None:
        w[2] = WeightField({2: mu}).validated(mesh).inverse().get(2)
    dr = assemble_complex(mesh, partition, WeightField(w), scheme)
    return VectorProxyComplex(dr, VECTOR_LABELS_3D, VECTOR_ADJOINT_LABELS_3D, SPACE_LABELS_3D,
                              long_complex_ends(dr.chain))


# -- cohomology, duality, weights -------------------------------------------


def dirichlet_neumann_fields(dr: DiscreteDeRham, q: int) -> SubspaceBasis:
    """Orthonormal basis of ``N(d_q) & N(d_{q-1}*)``."""
    return dr.pair(q).harmonic


def _betti_from_ranks(dr: DiscreteDeRham) -> tuple:
    ranks = [dr.operator(q).rank if 0 <= q < dr.dim else 0 for q in range(-1, dr.dim + 1)]
    return tuple(n - ranks[q + 1] - ranks[q] for q, n in enumerate(dr.dofs()))


def harmonic_dims(mesh: SimplicialMesh, partition: BoundaryPartition, weights: WeightField | None = None,
                  scheme: str = "whitney-galerkin") -> tuple:
    return assemble_complex(mesh, partition, weights, scheme).harmonic_dims()


@dataclass
class DualityReport:
    dims_t: tuple
    dims_n: tuple
    per_q: dict

    @property
    def passed(self) -> bool:
        return all(self.per_q.values())

    def to_dict(self) -> dict:
        return {"dims_t": list(self.dims_t), "dims_n": list(self.dims_n),
                "per_q": {str(q): v for q, v in self.per_q.items()}, "passed": self.passed}


def betti_duality_check(mesh: SimplicialMesh, partition: BoundaryPartition,
                        scheme: str = "whitney-galerkin") -> DualityReport:
    """Compare ``d^q(gamma_t)`` with ``d^{n-q}(gamma_n)`` for every degree."""
    dt = harmonic_dims(mesh, partition, scheme=scheme)
    dn = harmonic_dims(mesh, partition.complement(), scheme=scheme)
    n = mesh.dim
    return DualityReport(dt, dn, {q: dt[q] == dn[n - q] for q in range(n + 1)})


@dataclass
class WeightIndependenceReport:
    dims: list
    max_angles: list  # per weight (vs the first), per degree, largest principal angle

    @property
    def passed(self) -> bool:
        return all(d == self.dims[0] for d in self.dims)

    def to_dict(self) -> dict:
        return {"dims": [list(d) for d in self.dims], "max_angles": self.max_angles, "passed": self.passed}


def weight_independence(mesh: SimplicialMesh, partition: BoundaryPartition, weight_list: Sequence[WeightField],
                        scheme: str = "whitney-galerkin") -> WeightIndependenceReport:
    """Harmonic dimensions for each weight, plus principal angles to the first weight's harmonic spaces."""
    if len(weight_list) < 2:
        raise BadParams("need at least two weight fields")
    complexes = [assemble_complex(mesh, partition, w, scheme) for w in weight_list]
    dims = [c.harmonic_dims() for c in complexes]
    ref = [dirichlet_neumann_fields(complexes[0], q).columns for q in range(mesh.dim + 1)]
    angles = []
    for c in complexes:
        row = []
        for q in range(mesh.dim + 1):
            B = dirichlet_neumann_fields(c, q).columns
            if B.shape[1] == 0 or ref[q].shape[1] == 0 or B.shape[1] != ref[q].shape[1]:
                row.append(0.0)
            else:
                row.append(float(np.max(sla.subspace_angles(ref[q], B))))
        angles.append(row)
    return WeightIndependenceReport(dims, angles)


# -- Poincare constants ------------------------------------------------------


@dataclass
class PoincareRecord:
    q: int
    c: float
    c_adjoint: float
    relative_gap: float
    combined_estimate_margin: float
    no_reduced_part: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("q", "c", "c_adjoint", "relative_gap", "combined_estimate_margin", "no_reduced_part")}


def poincare_constants(dr: DiscreteDeRham, n_samples: int = 100, seed: int = 0) -> list[PoincareRecord]:
    """Per-degree best constants of ``d_q`` and ``d_q*`` and the combined-estimate margin at degree ``q``.

    Degrees whose operator is zero carry ``c = inf`` and ``no_reduced_part``.
    """
    out = []
    for q in range(dr.dim + 1):
        A = dr.operator(q)
        c = reduced_constant(A)
        ca = reduced_constant(A.adjoint)
        if c.no_reduced_part or ca.no_reduced_part:
            gap = 0.0 if c.no_reduced_part and ca.no_reduced_part else math.inf
        else:
            gap = abs(c.c - ca.c) / c.c
        rep = mini_fat(dr.pair(q), n_samples=n_samples, seed=seed + q)
        out.append(PoincareRecord(q, c.c, ca.c, gap, rep.combined_estimate_margin, c.no_reduced_part))
    return out


def dirichlet_gradient_constant(mesh: SimplicialMesh, partition: BoundaryPartition,
                                weights: WeightField | None = None, dense_limit: int = 1500) -> float:
    """``c`` for ``grad`` at degree 0 from the generalized problem ``K u = lambda M u``.

    Uses ``c = 1 / sqrt(lambda_min+)`` with ``K = D0^T M1 D0``; large problems
    go through sparse shift-invert, which needs a nontrivial ``gamma_t``.
    """
    weights = (weights or WeightField.unit()).validated(mesh)
    kept = np.flatnonzero(~closure_masks(mesh, partition.gamma_t)[0])
    if len(kept) == 0:
        raise NoReducedPart("no free vertices: the gradient acts on a zero space")
    M0 = whitney.whitney_mass(mesh, 0, weights.get(0))[kept][:, kept]
    M1 = whitney.whitney_mass(mesh, 1, weights.get(1))
    D = mesh.incidence(0).astype(float).tocsr()[:, kept]
    K = (D.T @ M1 @ D).tocsc()
    if len(kept) <= dense_limit or not partition.gamma_t:
        lam = sla.eigh(K.toarray(), M0.toarray(), eigvals_only=True)
        pos = lam[lam > 1e-10 * lam.max()]
        if pos.size == 0:
            raise NoReducedPart("the gradient vanishes on the free vertices")
        return float(1.0 / math.sqrt(pos.min()))
    v0 = np.ones(len(kept))
    lam = spla.eigsh(K, k=1, M=M0.tocsc(), sigma=0.0, which="LM", v0=v0, return_eigenvectors=False)
    return float(1.0 / math.sqrt(lam.min()))


# -- Helmholtz decomposition of fields -------------------------------------


@dataclass
class FieldDecomposition:
    gradient_part: np.ndarray
    harmonic_part: np.ndarray
    coexact_part: np.ndarray
    residuals: dict

    def __iter__(self):
        return iter((self.gradient_part, self.harmonic_part, self.coexact_part))


def helmholtz_field_decomposition(dr: DiscreteDeRham, q: int, field) -> FieldDecomposition:
    """``field = d_{q-1} u + h + d_q* v`` with residual diagnostics."""
    cp = dr.pair(q)
    x = np.asarray(field, dtype=float)
    if x.shape != (cp.H1.dim,):
        raise ShapeMismatch(f"field has shape {x.shape}, degree {q} has {cp.H1.dim} DOFs")
    parts = decompose_element(cp, x)
    return FieldDecomposition(*parts, decomposition_residuals(cp, x, parts))
