"""Mass matrices for lowest-order q-forms on affine simplicial meshes.

Two discretizations of the (weighted) L2 inner product on q-cochains:

* ``whitney_mass`` - Galerkin mass of the Whitney basis, integrated exactly.
  On a cell with barycentric coordinates ``lambda_i`` the Whitney form of a
  sorted face ``s = (s_0 < ... < s_q)`` is::

      W_s = q! * sum_k (-1)^k lambda_{s_k} dlambda_{s_0} ^ .. (omit k) .. ^ dlambda_{s_q}

  so every entry reduces to integrals ``int lambda_i lambda_j`` (exact for
  affine cells) times inner products of constant form proxies.
* ``dec_mass`` - the diagonal circumcentric Hodge star ``|dual| / |primal|``.

Weights are per-cell: ``None`` (unit), an array of positive scalars of shape
``(n_cells,)``, or SPD matrices of shape ``(n_cells, k, k)`` where
``k = binom(n, q)`` is the number of components of a q-form proxy.
"""
from __future__ import annotations

import math
from itertools import combinations, permutations

import numpy as np
import scipy.sparse as sp

from .errors import BadParams, NonSPDMass, ShapeMismatch
from .mesh import SimplicialMesh


def barycentric_gradients(mesh: SimplicialMesh) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of the barycentric coordinates of the *sorted* cell vertices.

    Returns:
        ``(grads, volumes)`` with ``grads`` of shape ``(n_cells, n+1, n)`` and
        unsigned cell volumes.
    """
    cells = np.sort(mesh.cells, axis=1)
    X = mesh.vertices[cells]  # (C, n+1, n)
    J = np.swapaxes(X[:, 1:, :] - X[:, :1, :], 1, 2)  # columns x_i - x_0
    Jinv = np.linalg.inv(J)  # rows are grad lambda_1..n
    g0 = -Jinv.sum(axis=1, keepdims=True)
    grads = np.concatenate([g0, Jinv], axis=1)
    vol = np.abs(np.linalg.det(J)) / math.factorial(mesh.dim)
    return grads, vol


def _cross(a, b):
    return np.cross(a, b)


def form_proxy(grads: np.ndarray, idx: tuple[int, ...]) -> np.ndarray:
    """Proxy components of ``dlambda_{idx[0]} ^ ... ^ dlambda_{idx[-1]}``.

    Shape ``(C, binom(n, len(idx)))``: empty wedge -> 1, one factor -> the
    gradient, two factors in 3-D -> cross product, ``n`` factors -> determinant.
    """
    C, _, n = grads.shape
    k = len(idx)
    if k == 0:
        return np.ones((C, 1))
    if k == 1:
        return grads[:, idx[0], :]
    if k == n:
        return np.linalg.det(np.stack([grads[:, i, :] for i in idx], axis=1))[:, None]
    if n == 3 and k == 2:
        return _cross(grads[:, idx[0], :], grads[:, idx[1], :])
    raise BadParams(f"no proxy for a {k}-form in dimension {n}")


def proxy_dim(n: int, q: int) -> int:
    return math.comb(n, q)


def check_weight(weight, n_cells: int, k: int, label: str = "weight") -> np.ndarray | None:
    """Validate a per-cell weight and return it as an array (``None`` = unit)."""
    if weight is None:
        return None
    w = np.asarray(weight, dtype=float)
    if w.ndim == 0:
        w = np.full(n_cells, float(w))
    if w.ndim == 1:
        if w.shape != (n_cells,):
            raise ShapeMismatch(f"{label}: expected {n_cells} scalars, got {w.shape}")
        if not np.all(w > 0):
            raise BadParams(f"{label}: scalar weights must be strictly positive")
        return w
    if w.shape != (n_cells, k, k):
        raise ShapeMismatch(f"{label}: expected shape {(n_cells, k, k)}, got {w.shape}")
    if not np.allclose(w, np.swapaxes(w, 1, 2), rtol=1e-12, atol=1e-14):
        raise BadParams(f"{label}: matrix weights must be symmetric")
    if np.linalg.eigvalsh(w).min() < 1e-12:
        raise BadParams(f"{label}: matrix weights need eigenvalues >= 1e-12")
    return w


def _weighted_inner(a: np.ndarray, b: np.ndarray, w) -> np.ndarray:
    """Per-cell ``<w a, b>`` for proxies ``a, b`` of shape ``(C, k)``."""
    if w is None:
        return np.einsum("ci,ci->c", a, b)
    if w.ndim == 1:
        return w * np.einsum("ci,ci->c", a, b)
    return np.einsum("cij,cj,ci->c", w, a, b)


def local_whitney_mass(grads: np.ndarray, vol: np.ndarray, q: int, weight=None) -> np.ndarray:
    """Local mass matrices, shape ``(C, n_faces, n_faces)``, faces in ``combinations`` order."""
    C, np1, n = grads.shape
    faces = list(combinations(range(np1), q + 1))
    # exact: int lambda_i lambda_j = |T| (1 + delta_ij) / ((n+1)(n+2))
    scale = vol / ((n + 1) * (n + 2))
    proxies = {}

    def proxy(idx):
        if idx not in proxies:
            proxies[idx] = form_proxy(grads, idx)
        return proxies[idx]

    M = np.zeros((C, len(faces), len(faces)))
    qf2 = math.factorial(q) ** 2
    for a, s in enumerate(faces):
        for b in range(a, len(faces)):
            t = faces[b]
            acc = np.zeros(C)
            for k in range(q + 1):
                pk = proxy(s[:k] + s[k + 1:])
                for l in range(q + 1):
                    pl = proxy(t[:l] + t[l + 1:])
                    lam = 2.0 if s[k] == t[l] else 1.0
                    acc += (-1) ** (k + l) * lam * _weighted_inner(pk, pl, weight)
            M[:, a, b] = M[:, b, a] = qf2 * scale * acc
    return M


def whitney_mass(mesh: SimplicialMesh, q: int, weight=None) -> sp.csr_matrix:
    """Global Whitney mass matrix on all q-simplices."""
    n = mesh.dim
    if not 0 <= q <= n:
        raise BadParams(f"degree {q} outside 0..{n}")
    grads, vol = barycentric_gradients(mesh)
    w = check_weight(weight, len(mesh.cells), proxy_dim(n, q), f"weight[{q}]")
    Mloc = local_whitney_mass(grads, vol, q, w)
    L = mesh.local_indices(q)  # (C, n_faces)
    rows = np.repeat(L, L.shape[1], axis=1).ravel()
    cols = np.tile(L, (1, L.shape[1])).ravel()
    N = mesh.n_simplices(q)
    M = sp.coo_matrix((Mloc.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    M.sum_duplicates()
    return M


# -- diagonal (circumcentric) Hodge star -----------------------------------


def _simplex_volume(P: np.ndarray) -> np.ndarray:
    """Unsigned volume of stacked simplices ``P`` of shape ``(C, m+1, n)``."""
    m = P.shape[1] - 1
    if m == 0:
        return np.ones(P.shape[0])
    E = P[:, 1:, :] - P[:, :1, :]
    G = E @ np.swapaxes(E, 1, 2)
    return np.sqrt(np.clip(np.linalg.det(G), 0.0, None)) / math.factorial(m)


def _circumcenter(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Circumcenters and their barycentric coordinates for stacked simplices."""
    m = P.shape[1] - 1
    if m == 0:
        return P[:, 0, :], np.ones((P.shape[0], 1))
    E = P[:, 1:, :] - P[:, :1, :]
    G = E @ np.swapaxes(E, 1, 2)
    rhs = 0.5 * np.einsum("cii->ci", G)
    a = np.linalg.solve(G, rhs[..., None])[..., 0]
    bary = np.concatenate([1.0 - a.sum(axis=1, keepdims=True), a], axis=1)
    return P[:, 0, :] + np.einsum("ci,cij->cj", a, E), bary


def primal_volumes(mesh: SimplicialMesh, q: int) -> np.ndarray:
    return _simplex_volume(mesh.vertices[mesh.simplices[q]])


def dual_volumes(mesh: SimplicialMesh, q: int, weight=None) -> np.ndarray:
    """Signed circumcentric dual volumes of the q-simplices.

    Each cell contributes, for every flag ``s = t_q < t_{q+1} < ... < t_n``,
    the simplex spanned by the circumcenters of the flag; its sign is the
    product of the signs of the barycentric coordinate of each circumcenter
    ``c(t_{k+1})`` opposite the vertex added at that step.
    """
    n = mesh.dim
    cells = np.sort(mesh.cells, axis=1)
    X = mesh.vertices[cells]
    C = len(cells)
    w = np.ones(C) if weight is None else np.asarray(weight, dtype=float)
    L = mesh.local_indices(q)
    faces = list(combinations(range(n + 1), q + 1))
    out = np.zeros(mesh.n_simplices(q))
    centers = {}

    def cc(idx):
        if idx not in centers:
            centers[idx] = _circumcenter(X[:, list(idx), :])
        return centers[idx]

    for f, face in enumerate(faces):
        rest = [v for v in range(n + 1) if v not in face]
        for order in permutations(rest):
            chain = [tuple(face)]
            for v in order:
                chain.append(tuple(sorted(chain[-1] + (v,))))
            pts = np.stack([cc(t)[0] for t in chain], axis=1)
            sign = np.ones(C)
            for prev, nxt in zip(chain[:-1], chain[1:]):
                added = next(v for v in nxt if v not in prev)
                sign *= np.sign(cc(nxt)[1][:, nxt.index(added)])
            np.add.at(out, L[:, f], w * sign * _simplex_volume(pts))
    return out


def dec_mass(mesh: SimplicialMesh, q: int, weight=None) -> sp.csr_matrix:
    """Diagonal Hodge star ``|*s| / |s|``; raises :class:`NonSPDMass` on entries <= 0."""
    n = mesh.dim
    w = check_weight(weight, len(mesh.cells), proxy_dim(n, q), f"weight[{q}]")
    if w is not None and w.ndim != 1:
        raise BadParams("dec-diagonal supports only unit or scalar per-cell weights")
    star = dual_volumes(mesh, q, w) / primal_volumes(mesh, q)
    bad = np.flatnonzero(star <= 0)
    if bad.size:
        raise NonSPDMass(f"{bad.size} non-positive diagonal entries at degree {q} (mesh not well-centred)")
    return sp.diags(star).tocsr()


def p1_mass_reference(vertices: np.ndarray) -> np.ndarray:
    """Textbook P1 mass on one simplex: ``|T| (1 + delta_ij) / ((n+1)(n+2))``."""
    V = np.asarray(vertices, dtype=float)
    n = V.shape[1]
    vol = abs(np.linalg.det((V[1:] - V[0]).T)) / math.factorial(n)
    return vol * (np.ones((n + 1, n + 1)) + np.eye(n + 1)) / ((n + 1) * (n + 2))
