"""Exact integer homology of a simplicial pair ``(K, L)``.

This is an independent oracle for cohomology dimensions: it enumerates
simplices itself, builds integer boundary matrices, and reduces them to Smith
normal form with Python integers (unit pivots first, a dense Euclidean
reduction for whatever remains). Nothing here touches floating point.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence


def _faces(simplex: tuple, k: int) -> Iterable[tuple]:
    return combinations(simplex, k)


def simplicial_closure(top: Iterable[Sequence[int]]) -> list[set]:
    """All faces of the given simplices, grouped by dimension."""
    top = [tuple(sorted(int(v) for v in s)) for s in top]
    if not top:
        return []
    d = max(len(s) for s in top) - 1
    out = [set() for _ in range(d + 1)]
    for s in top:
        for q in range(len(s)):
            out[q].update(_faces(s, q + 1))
    return out


def boundary_entries(simplices_q: list[tuple], index_below: dict) -> dict:
    """Sparse integer boundary ``C_q -> C_{q-1}`` restricted to ``index_below``, keyed by column."""
    cols = {}
    for j, s in enumerate(simplices_q):
        col = {}
        for k in range(len(s)):
            face = s[:k] + s[k + 1:]
            i = index_below.get(face)
            if i is not None:
                col[i] = col.get(i, 0) + (-1) ** k
        cols[j] = {i: v for i, v in col.items() if v}
    return cols


def smith_invariants(columns: dict, n_rows: int) -> list[int]:
    """Nonzero invariant factors of an integer matrix given as ``{col: {row: value}}``."""
    col_map = {c: dict(entries) for c, entries in columns.items() if entries}
    row_map: dict[int, dict] = {}
    for c, entries in col_map.items():
        for r, v in entries.items():
            row_map.setdefault(r, {})[c] = v
    invariants = []

    heap = [(len(e), c) for c, e in col_map.items()]
    heapq.heapify(heap)
    deferred = set()
    while heap:
        n, c = heapq.heappop(heap)
        entries = col_map.get(c)
        if entries is None:
            continue
        if len(entries) != n:
            heapq.heappush(heap, (len(entries), c))
            continue
        units = [r for r, v in entries.items() if abs(v) == 1]
        if not units:
            deferred.add(c)
            continue
        deferred.discard(c)
        p = min(units, key=lambda r: (len(row_map[r]), r))
        pv = entries[p]
        prow = row_map[p]
        # eliminate column c from every other row, using row p
        for r in [r for r in entries if r != p]:
            f = entries[r] * pv  # pv = +-1, so f = entries[r] / pv
            rrow = row_map[r]
            for cc, v in prow.items():
                nv = rrow.get(cc, 0) - f * v
                if nv:
                    rrow[cc] = nv
                    col_map[cc][r] = nv
                else:
                    rrow.pop(cc, None)
                    col_map[cc].pop(r, None)
        # drop pivot row and column (column ops clear the rest of row p)
        for cc in prow:
            if cc != c:
                col_map[cc].pop(p, None)
                if col_map[cc]:
                    heapq.heappush(heap, (len(col_map[cc]), cc))
                    deferred.discard(cc)
                else:
                    del col_map[cc]
        del row_map[p]
        del col_map[c]
        invariants.append(1)
        if not heap and deferred:
            break
    rest_cols = sorted(c for c in col_map if col_map[c])
    rest_rows = sorted({r for c in rest_cols for r in col_map[c]})
    if rest_cols:
        ri = {r: i for i, r in enumerate(rest_rows)}
        dense = [[0] * len(rest_cols) for _ in rest_rows]
        for j, c in enumerate(rest_cols):
            for r, v in col_map[c].items():
                dense[ri[r]][j] = v
        invariants += dense_smith(dense)
    return sorted(invariants)


def dense_smith(A: list[list[int]]) -> list[int]:
    """Nonzero diagonal of the Smith normal form of a dense integer matrix."""
    A = [row[:] for row in A]
    m = len(A)
    n = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < min(m, n):
        nz = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            done = True
            piv = A[t][t]
            for i in range(t + 1, m):
                if A[i][t]:
                    q = A[i][t] // piv
                    A[i] = [a - q * b for a, b in zip(A[i], A[t])]
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    q = A[t][j] // piv
                    for row in A:
                        row[j] -= q * row[t]
                    if A[t][j]:
                        done = False
            if done:
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % piv), None)
                if bad is None:
                    break
                A[t] = [a + b for a, b in zip(A[t], A[bad[0]])]
                continue
            # move the smallest nonzero of row/col t to the pivot
            cand = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
            cand += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
            _, i, j = min(cand)
            A[t], A[i] = A[i], A[t]
            for row in A:
                row[t], row[j] = row[j], row[t]
        diag.append(abs(A[t][t]))
        t += 1
    return diag


@dataclass(frozen=True)
class HomologyResult:
    betti: tuple
    torsion: dict
    chain_ranks: tuple

    def __getitem__(self, q):
        return self.betti[q]


def relative_homology(cells: Iterable[Sequence[int]], subcomplex_top: Iterable[Sequence[int]] = ()) -> HomologyResult:
    """Betti numbers and torsion of ``H_q(K, L)``.

    ``K`` is the closure of ``cells``, ``L`` the closure of ``subcomplex_top``.
    """
    K = simplicial_closure(cells)
    d = len(K) - 1
    L = simplicial_closure(subcomplex_top)
    L += [set() for _ in range(d + 1 - len(L))]
    chains = [sorted(K[q] - L[q]) for q in range(d + 1)]
    index = [{s: i for i, s in enumerate(ch)} for ch in chains]
    ranks = [0] * (d + 2)  # ranks[q] = rank of boundary C_q -> C_{q-1}
    torsion = {}
    for q in range(1, d + 1):
        inv = smith_invariants(boundary_entries(chains[q], index[q - 1]), len(chains[q - 1]))
        ranks[q] = len(inv)
        tors = [v for v in inv if v > 1]
        if tors:
            torsion[q - 1] = tors
    betti = tuple(len(chains[q]) - ranks[q] - ranks[q + 1] for q in range(d + 1))
    return HomologyResult(betti, torsion, tuple(len(c) for c in chains))


def mesh_relative_betti(mesh, gamma_t: Iterable[int]) -> tuple:
    """Relative Betti numbers of a mesh modulo the closure of the facets ``gamma_t``."""
    facets = mesh.simplices[mesh.dim - 1]
    return relative_homology(mesh.cells.tolist(), [facets[i].tolist() for i in gamma_t]).betti
