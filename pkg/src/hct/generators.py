"""Mesh generator catalog.

=============  =========================================  ==========================
name           domain                                     counts for parameter ``n``
=============  =========================================  ==========================
interval       [0, 1], ``n`` cells                        n+1 vertices, n cells
square-grid    [0, 1]^2, n x n squares, 2 triangles each   (n+1)^2 vertices, 2n^2 cells
square-hole    square-grid minus the middle block          2(n^2 - h^2) cells
l-shape        [0, 1]^2 minus (1/2, 1]^2, 2n x 2n grid     6n^2 cells
cube-grid      [0, 1]^3, n^3 cubes, 6 tetrahedra each      (n+1)^3 vertices, 6n^3 cells
cube-tunnel    cube-grid minus a column through the middle 6(n^3 - h^2 n) cells
=============  =========================================  ==========================

For the holed meshes ``h = n - 2*(n // 3)`` is the width of the removed
block (``n >= 3``). Squares are cut along alternating diagonals; cubes use
the Kuhn split, which is conforming across neighbouring cubes.
"""
from __future__ import annotations

from itertools import permutations, product
from typing import Callable

import numpy as np

from .errors import BadParams, UnknownGenerator
from .mesh import SimplicialMesh, build_mesh


def _compact(vertices: np.ndarray, cells: np.ndarray) -> SimplicialMesh:
    used = np.unique(cells)
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return build_mesh(vertices[used], remap[cells], reorient=True)


def _grid2(nx: int, ny: int, keep: Callable[[int, int], bool], scale=(1.0, 1.0)) -> SimplicialMesh:
    xs = np.linspace(0.0, scale[0], nx + 1)
    ys = np.linspace(0.0, scale[1], ny + 1)
    V = np.array([(x, y) for y in ys for x in xs])

    def vid(i, j):
        return j * (nx + 1) + i

    cells = []
    for j in range(ny):
        for i in range(nx):
            if not keep(i, j):
                continue
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if (i + j) % 2 == 0:
                cells += [(a, b, c), (a, c, d)]
            else:
                cells += [(a, b, d), (b, c, d)]
    return _compact(V, np.array(cells, dtype=np.int64))


_KUHN = [tuple(p) for p in permutations(range(3))]


def _grid3(n: int, keep: Callable[[int, int, int], bool]) -> SimplicialMesh:
    xs = np.linspace(0.0, 1.0, n + 1)
    V = np.array([(x, y, z) for z in xs for y in xs for x in xs])

    def vid(i, j, k):
        return (k * (n + 1) + j) * (n + 1) + i

    cells = []
    for k, j, i in product(range(n), repeat=3):
        if not keep(i, j, k):
            continue
        for perm in _KUHN:
            p = [i, j, k]
            tet = [vid(*p)]
            for axis in perm:
                p[axis] += 1
                tet.append(vid(*p))
            cells.append(tet)
    return _compact(V, np.array(cells, dtype=np.int64))


def _need(n, low=1):
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < low:
        raise BadParams(f"n must be an integer >= {low}, got {n!r}")
    return int(n)


def interval(n: int = 4) -> SimplicialMesh:
    n = _need(n)
    V = np.linspace(0.0, 1.0, n + 1)[:, None]
    cells = np.stack([np.arange(n), np.arange(1, n + 1)], axis=1)
    return build_mesh(V, cells)


def square_grid(n: int = 2) -> SimplicialMesh:
    n = _need(n)
    return _grid2(n, n, lambda i, j: True)


def _hole(n):
    lo = n // 3
    return lo, n - lo


def square_hole(n: int = 3) -> SimplicialMesh:
    n = _need(n, 3)
    lo, hi = _hole(n)
    return _grid2(n, n, lambda i, j: not (lo <= i < hi and lo <= j < hi))


def l_shape(n: int = 2) -> SimplicialMesh:
    n = _need(n)
    return _grid2(2 * n, 2 * n, lambda i, j: not (i >= n and j >= n))


def cube_grid(n: int = 1) -> SimplicialMesh:
    n = _need(n)
    return _grid3(n, lambda i, j, k: True)


def cube_tunnel(n: int = 3) -> SimplicialMesh:
    n = _need(n, 3)
    lo, hi = _hole(n)
    return _grid3(n, lambda i, j, k: not (lo <= i < hi and lo <= j < hi))


CATALOG: dict[str, Callable[..., SimplicialMesh]] = {
    "interval": interval,
    "square-grid": square_grid,
    "square-hole": square_hole,
    "l-shape": l_shape,
    "cube-grid": cube_grid,
    "cube-tunnel": cube_tunnel,
}


def generate_mesh(name: str, params: dict | None = None) -> SimplicialMesh:
    """Build a catalog mesh; ``params`` currently only takes ``n``."""
    try:
        gen = CATALOG[name]
    except KeyError:
        raise UnknownGenerator(f"unknown generator {name!r}; choose from {sorted(CATALOG)}") from None
    params = dict(params or {})
    extra = set(params) - {"n"}
    if extra:
        raise BadParams(f"unknown parameters for {name}: {sorted(extra)}")
    return gen(**params)
