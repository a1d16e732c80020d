"""Oriented simplicial meshes and boundary partitions.

Sub-simplices of every dimension are stored as rows of sorted vertex indices,
numbered lexicographically. The orientation of a sub-simplex is the one of its
sorted vertex tuple, so incidence signs are ``(-1)**k`` for the face that
drops the ``k``-th vertex.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import DuplicateCell, InvertedCell, NonManifold, ShapeMismatch

MESH_FORMAT = "hct-mesh"
MESH_VERSION = 1


def _signed_volumes(vertices: np.ndarray, cells: np.ndarray) -> np.ndarray:
    d = cells.shape[1] - 1
    X = vertices[cells]
    E = X[:, 1:, :] - X[:, :1, :]
    return np.linalg.det(E) / math.factorial(d)


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    vertices: np.ndarray
    cells: np.ndarray
    boundary_labels: Mapping[tuple, str] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.cells.shape[1] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @cached_property
    def _subsimplices(self):
        d = self.dim
        sorted_cells = np.sort(self.cells, axis=1)
        simplices, local = [], []
        for q in range(d + 1):
            combos = list(combinations(range(d + 1), q + 1))
            stacked = np.concatenate([sorted_cells[:, list(c)] for c in combos], axis=0)
            uniq, inv = np.unique(stacked, axis=0, return_inverse=True)
            simplices.append(uniq)
            local.append(inv.reshape(len(combos), -1).T)
        return tuple(simplices), tuple(local)

    @property
    def simplices(self) -> tuple:
        """``simplices[q]`` is an ``(N_q, q+1)`` array of sorted vertex tuples."""
        return self._subsimplices[0]

    def local_indices(self, q: int) -> np.ndarray:
        """Global index of each local q-face of every cell (cell vertices taken sorted)."""
        return self._subsimplices[1][q]

    def n_simplices(self, q: int) -> int:
        return len(self.simplices[q]) if 0 <= q <= self.dim else 0

    @property
    def cell_index(self) -> np.ndarray:
        """Index of each cell in ``simplices[dim]``."""
        return self.local_indices(self.dim)[:, 0]

    @cached_property
    def _index_maps(self):
        return [{tuple(s): i for i, s in enumerate(S.tolist())} for S in self.simplices]

    def index_of(self, q: int, vertices: Iterable[int]) -> int:
        return self._index_maps[q][tuple(sorted(vertices))]

    def incidence(self, q: int) -> sp.csr_matrix:
        """Integer coboundary from q-simplices to (q+1)-simplices (entries 0, +1, -1)."""
        d = self.dim
        nq = self.n_simplices(q)
        if q < 0 or q >= d:
            return sp.csr_matrix((self.n_simplices(q + 1), max(nq, 0)), dtype=np.int64)
        upper = self.simplices[q + 1]
        n_up = len(upper)
        rows, cols, vals = [], [], []
        faces = np.concatenate([np.delete(upper, k, axis=1) for k in range(q + 2)], axis=0)
        both = np.concatenate([self.simplices[q], faces], axis=0)
        _, inv = np.unique(both, axis=0, return_inverse=True)
        face_idx = inv[nq:].reshape(q + 2, n_up)
        for k in range(q + 2):
            rows.append(np.arange(n_up))
            cols.append(face_idx[k])
            vals.append(np.full(n_up, (-1) ** k, dtype=np.int64))
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n_up, nq),
            dtype=np.int64,
        )

    @cached_property
    def facet_cell_counts(self) -> np.ndarray:
        return np.bincount(self.local_indices(self.dim - 1).ravel(), minlength=self.n_simplices(self.dim - 1))

    @property
    def boundary_facets(self) -> np.ndarray:
        return np.flatnonzero(self.facet_cell_counts == 1)

    def centroids(self, q: int) -> np.ndarray:
        return self.vertices[self.simplices[q]].mean(axis=1)

    @property
    def volumes(self) -> np.ndarray:
        return _signed_volumes(self.vertices, self.cells)

    @property
    def euler_characteristic(self) -> int:
        return int(sum((-1) ** q * self.n_simplices(q) for q in range(self.dim + 1)))

    def counts(self) -> dict:
        return {q: self.n_simplices(q) for q in range(self.dim + 1)}

    def __repr__(self):
        return f"SimplicialMesh(dim={self.dim}, counts={self.counts()})"


def build_mesh(vertices, cells, boundary_labels: Mapping | None = None, reorient: bool = False) -> SimplicialMesh:
    """Validate and construct a mesh.

    Cells must be positively oriented unless ``reorient`` is set, in which case
    negatively oriented cells get their last two vertices swapped.

    Raises:
        InvertedCell, DuplicateCell, NonManifold, ShapeMismatch.
    """
    V = np.asarray(vertices, dtype=float)
    C = np.asarray(cells, dtype=np.int64)
    if V.ndim != 2 or C.ndim != 2:
        raise ShapeMismatch("vertices and cells must be 2-D arrays")
    d = C.shape[1] - 1
    if V.shape[1] != d or d not in (1, 2, 3):
        raise ShapeMismatch(f"{d}-simplices in {V.shape[1]}-D space are not supported")
    if C.size and (C.min() < 0 or C.max() >= len(V)):
        raise ShapeMismatch("cell references a missing vertex")
    S = np.sort(C, axis=1)
    if np.any(S[:, 1:] == S[:, :-1]):
        raise InvertedCell("cell with repeated vertex")
    uniq, counts = np.unique(S, axis=0, return_counts=True)
    if np.any(counts > 1):
        raise DuplicateCell(f"duplicate cell {uniq[counts > 1][0].tolist()}")
    if len(np.unique(C)) != len(V):
        raise NonManifold("mesh has vertices not used by any cell")
    vol = _signed_volumes(V, C)
    scale = np.abs(vol).max() if len(vol) else 1.0
    if np.any(np.abs(vol) <= 1e-14 * scale):
        raise InvertedCell("degenerate cell (zero volume)")
    if np.any(vol < 0):
        if not reorient:
            raise InvertedCell(f"cell {int(np.flatnonzero(vol < 0)[0])} is negatively oriented")
        C = C.copy()
        neg = vol < 0
        C[neg, -2], C[neg, -1] = C[neg, -1].copy(), C[neg, -2].copy()
    labels = {tuple(sorted(int(i) for i in k)): str(v) for k, v in (boundary_labels or {}).items()}
    mesh = SimplicialMesh(V, C, labels)
    if np.any(mesh.facet_cell_counts > 2):
        bad = int(np.flatnonzero(mesh.facet_cell_counts > 2)[0])
        raise NonManifold(f"facet {mesh.simplices[d - 1][bad].tolist()} shared by more than two cells")
    return mesh


@dataclass(frozen=True)
class BoundaryPartition:
    """Boundary facets split into ``gamma_t`` (essential) and ``gamma_n`` (natural)."""

    gamma_t: frozenset
    gamma_n: frozenset

    @property
    def boundary(self) -> frozenset:
        return self.gamma_t | self.gamma_n

    def complement(self) -> "BoundaryPartition":
        return BoundaryPartition(self.gamma_n, self.gamma_t)

    def counts(self) -> dict:
        return {"gamma_t": len(self.gamma_t), "gamma_n": len(self.gamma_n)}


def partition_from_facets(mesh: SimplicialMesh, gamma_t: Iterable[int]) -> BoundaryPartition:
    bnd = frozenset(int(i) for i in mesh.boundary_facets)
    gt = frozenset(int(i) for i in gamma_t)
    if not gt <= bnd:
        raise ValueError("gamma_t contains interior facets")
    return BoundaryPartition(gt, bnd - gt)


def mark_boundary(mesh: SimplicialMesh, predicate: Callable[[np.ndarray], bool]) -> BoundaryPartition:
    """``predicate(centroid) -> True`` puts a boundary facet into ``gamma_t``."""
    bf = mesh.boundary_facets
    cents = mesh.centroids(mesh.dim - 1)[bf]
    return partition_from_facets(mesh, [int(f) for f, c in zip(bf, cents) if predicate(c)])


def partition_from_labels(mesh: SimplicialMesh, labels: Iterable[str]) -> BoundaryPartition:
    """``gamma_t`` = boundary facets whose label is in ``labels``."""
    wanted = set(labels)
    d = mesh.dim
    gt = [mesh.index_of(d - 1, k) for k, v in mesh.boundary_labels.items() if v in wanted]
    return partition_from_facets(mesh, gt)


def closure_masks(mesh: SimplicialMesh, facets: Iterable[int]) -> list[np.ndarray]:
    """Per degree q, mask of q-simplices that are faces of the given facets."""
    d = mesh.dim
    masks = [np.zeros(mesh.n_simplices(q), dtype=bool) for q in range(d + 1)]
    F = mesh.simplices[d - 1][sorted(facets)] if d >= 1 else np.zeros((0, 1), dtype=int)
    for q in range(d):
        for combo in combinations(range(d), q + 1):
            for row in F[:, list(combo)].tolist():
                masks[q][mesh.index_of(q, row)] = True
    return masks


def refine(mesh: SimplicialMesh) -> SimplicialMesh:
    """Uniform refinement: every simplex split at its edge midpoints.

    Triangles become 4 triangles and tetrahedra 8 tetrahedra (inner octahedron
    cut along one diagonal). Boundary labels are not carried over.
    """
    d = mesh.dim
    V = mesh.vertices
    if d == 1:
        E = mesh.cells
        mids = 0.5 * (V[E[:, 0]] + V[E[:, 1]])
        m = len(V) + np.arange(len(E))
        cells = np.concatenate([np.stack([E[:, 0], m], 1), np.stack([m, E[:, 1]], 1)])
        return build_mesh(np.vstack([V, mids]), cells, reorient=True)
    edges = mesh.simplices[1]
    mids = 0.5 * (V[edges[:, 0]] + V[edges[:, 1]])
    nv = len(V)

    def mid(a, b):
        return nv + mesh.index_of(1, (a, b))

    new = []
    for cell in mesh.cells.tolist():
        if d == 2:
            a, b, c = cell
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        else:
            a, b, c, e = cell
            ab, ac, ae, bc, be, ce = mid(a, b), mid(a, c), mid(a, e), mid(b, c), mid(b, e), mid(c, e)
            new += [(a, ab, ac, ae), (ab, b, bc, be), (ac, bc, c, ce), (ae, be, ce, e)]
            # octahedron ab, ac, ae, bc, be, ce split along the ac-be diagonal
            new += [(ac, be, ab, ae), (ac, be, ae, ce), (ac, be, ce, bc), (ac, be, bc, ab)]
    return build_mesh(np.vstack([V, mids]), np.array(new), reorient=True)


# ---------------------------------------------------------------------------
# file format


def _label_key(t) -> str:
    return ",".join(str(int(i)) for i in t)


def mesh_to_dict(mesh: SimplicialMesh) -> dict:
    out = {
        "format": MESH_FORMAT,
        "version": MESH_VERSION,
        "vertices": mesh.vertices.tolist(),
        "cells": mesh.cells.tolist(),
    }
    if mesh.boundary_labels:
        out["boundary_labels"] = {_label_key(k): v for k, v in sorted(mesh.boundary_labels.items())}
    return out


def mesh_from_dict(data: Mapping) -> SimplicialMesh:
    version = data.get("version", MESH_VERSION)
    if version != MESH_VERSION:
        raise ValueError(f"unsupported mesh file version {version}")
    raw = data.get("boundary_labels") or {}
    if isinstance(raw, list):
        labels = {tuple(item["facet"]): item["label"] for item in raw}
    else:
        labels = {tuple(int(i) for i in k.split(",")): v for k, v in raw.items()}
    return build_mesh(data["vertices"], data["cells"], labels, reorient=bool(data.get("reorient", False)))


def save_mesh(mesh: SimplicialMesh, path) -> None:
    Path(path).write_text(json.dumps(mesh_to_dict(mesh)))


def load_mesh(path) -> SimplicialMesh:
    return mesh_from_dict(json.loads(Path(path).read_text()))
