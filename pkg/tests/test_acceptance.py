"""Acceptance suite: twelve criteria, one test each, at their stated tolerances.

Every test records a ``PASS``/``FAIL`` line; ``conftest.py`` prints them in a
terminal-summary section so a plain ``pytest`` run shows the verdicts.
"""
from __future__ import annotations

import json
import math
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from functools import lru_cache

import numpy as np
import pytest

from hct import linalg
from hct.derham import (
    WeightField,
    assemble_complex,
    betti_duality_check,
    dirichlet_gradient_constant,
    helmholtz_field_decomposition,
    weight_independence,
)
from hct.experiments import make_partition
from hct.generators import CATALOG, generate_mesh
from hct.homology import mesh_relative_betti
from hct.regular import (
    alternative_projection_check,
    build_prebasis,
    decomposition_from_potential,
    exact_decomposition,
    pairing_identity,
    potential_from_decomposition,
    projector_diagnostics,
    pseudoinverse_potential,
    random_decomposition,
    three_term_decomposition,
    three_term_operators,
    trivial_decomposition,
)
from hct.samples import random_complex, random_operator, random_space
from hct.toolbox import combined_estimate_margins, kernel, reduced_constant

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}

# (generator, n, partitions); partition strings use the configuration syntax
SUITE = (
    ("interval", 4, ("none", "all", "halfspace:x<=0.5")),
    ("square-grid", 3, ("none", "all", "faces:[x0]", "faces:[x0,x1]", "halfspace:x<=0.5", "alternate")),
    ("square-hole", 3, ("none", "all", "halfspace:x<=0.5", "faces:[x0,x1,y0,y1]", "alternate")),
    ("l-shape", 2, ("none", "all", "halfspace:y<=0.25")),
    ("cube-grid", 1, ("none", "all", "faces:[z0]", "halfspace:x<=0.5")),
    ("cube-grid", 2, ("none", "faces:[x0,x1]")),
    ("cube-tunnel", 3, ("none", "all", "faces:[x0,x1]", "halfspace:x<=0.5")),
)
CASES = [(g, n, p) for g, n, parts in SUITE for p in parts]


@lru_cache(maxsize=None)
def _mesh(gen, n):
    return generate_mesh(gen, {"n": n})


@lru_cache(maxsize=None)
def _complex(gen, n, pspec, weighted=False):
    mesh = _mesh(gen, n)
    w = WeightField.random_spd(mesh, seed=n + len(pspec)) if weighted else None
    return assemble_complex(mesh, make_partition(mesh, pspec), w)


@contextmanager
def criterion(num: int, title: str):
    """Record PASS/FAIL for criterion ``num`` and print it."""
    t0 = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        line = f"criterion {num:2d} FAIL  {title}  ({type(exc).__name__}: {str(exc).splitlines()[0][:120]})"
        RESULTS[num] = line
        print(line)
        raise
    line = f"criterion {num:2d} PASS  {title}  [{time.perf_counter() - t0:.1f} s]"
    RESULTS[num] = line
    print(line)


def _rel_pairing(X, Y, A, x, y):
    lhs, rhs = Y.inner(A(x), y), X.inner(x, A.adjoint(y))
    scale = max(Y.norm(A(x)) * Y.norm(y), X.norm(x) * X.norm(A.adjoint(y)))
    return abs(lhs - rhs) / scale if scale else abs(lhs - rhs)


def _involution_gap(A):
    M = A.dense
    m = np.abs(M).max(initial=0.0)
    return float(np.abs(A.adjoint.adjoint.dense - M).max(initial=0.0) / m) if m else 0.0


# 1 -----------------------------------------------------------------------


def test_01_exact_complex_property():
    with criterion(1, "d_{q+1} d_q = 0 in integers on every catalog mesh up to n=16 (2-D) / n=6 (3-D), < 10 s"):
        t0 = time.perf_counter()
        checked = 0
        for gen in sorted(CATALOG):
            dim = generate_mesh(gen, {}).dim
            top = 6 if dim == 3 else 16
            for n in range(1, top + 1):
                try:
                    mesh = generate_mesh(gen, {"n": n})
                except ValueError:
                    continue  # resolution not admissible for this generator
                for q in range(mesh.dim - 1):
                    D0, D1 = mesh.incidence(q), mesh.incidence(q + 1)
                    assert np.issubdtype(D0.dtype, np.integer) and np.issubdtype(D1.dtype, np.integer)
                    assert (D1 @ D0).count_nonzero() == 0, (gen, n, q)
                checked += 1
        elapsed = time.perf_counter() - t0
        assert checked >= 70
        assert elapsed < 10.0, f"took {elapsed:.1f} s"


# 2 -----------------------------------------------------------------------


def test_02_adjoint_characterization():
    with criterion(2, "<Ax,y> = <x,A*y> (100 pairs/operator, <= 1e-10), (A*)* = A (<= 1e-12)"):
        worst_pair = worst_inv = 0.0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            X, Y = random_space(7, rng, cond=100), random_space(5, rng, cond=100)
            ops = [random_operator(X, Y, rng), random_operator(X, Y, rng, rank=2)]
            for A in ops:
                for _ in range(100):
                    worst_pair = max(worst_pair, _rel_pairing(X, Y, A, rng.standard_normal(7), rng.standard_normal(5)))
                worst_inv = max(worst_inv, _involution_gap(A))
        rng = np.random.default_rng(2024)
        for gen, n, pspec in CASES:
            dr = _complex(gen, n, pspec, weighted=True)
            for A in dr.operators:
                X, Y = A.domain, A.codomain
                if X.dim == 0 or Y.dim == 0:
                    continue
                for _ in range(100):
                    worst_pair = max(worst_pair, _rel_pairing(X, Y, A, rng.standard_normal(X.dim),
                                                              rng.standard_normal(Y.dim)))
                worst_inv = max(worst_inv, _involution_gap(A))
        print(f"  max pairing residual {worst_pair:.2e}, max involution gap {worst_inv:.2e}")
        assert worst_pair <= 1e-10
        assert worst_inv <= 1e-12


# 3 -----------------------------------------------------------------------


def test_03_best_constant_equality():
    with criterion(3, "c_A = c_A* (<= 1e-10 relative) on 50 abstract instances and every de Rham degree"):
        worst = 0.0
        for seed in range(50):
            rng = np.random.default_rng(10_000 + seed)
            X, Y = random_space(8, rng, cond=100), random_space(6, rng, cond=100)
            A = random_operator(X, Y, rng, rank=int(rng.integers(1, 6)))
            c, cs = reduced_constant(A).c, reduced_constant(A.adjoint).c
            worst = max(worst, abs(c - cs) / c)
        degrees = 0
        for gen, n, pspec in CASES:
            for weighted in (False, True):
                dr = _complex(gen, n, pspec, weighted)
                for q in range(dr.dim + 1):
                    A = dr.operator(q)
                    c, cs = reduced_constant(A), reduced_constant(A.adjoint)
                    assert c.no_reduced_part == cs.no_reduced_part
                    if not c.no_reduced_part:
                        worst = max(worst, abs(c.c - cs.c) / c.c)
                    degrees += 1
        print(f"  {degrees} de Rham degrees, max relative gap {worst:.2e}")
        assert worst <= 1e-10


# 4 -----------------------------------------------------------------------


def test_04_refined_helmholtz():
    with criterion(4, "Helmholtz projectors and 100 random fields per mesh/degree, residuals <= 1e-10"):
        rng = np.random.default_rng(4)
        worst = {}
        for gen, n, pspec in CASES:
            dr = _complex(gen, n, pspec, weighted=True)
            for q in range(dr.dim + 1):
                cp = dr.pair(q)
                if cp.H1.dim == 0:
                    continue
                res = cp.helmholtz.residuals
                assert res["dimension_defect"] == 0
                for k in ("sum_minus_identity", "pairwise_products"):
                    worst[k] = max(worst.get(k, 0.0), res[k])
                X = rng.standard_normal((100, cp.H1.dim))
                for x in X:
                    fd = helmholtz_field_decomposition(dr, q, x)
                    for k in ("reconstruction", "orthogonality"):
                        worst[k] = max(worst.get(k, 0.0), fd.residuals[k])
        print("  " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))
        assert all(v <= 1e-10 for v in worst.values()), worst


# 5 -----------------------------------------------------------------------

FROZEN = {  # harmonic dimensions frozen from the Smith-normal-form oracle
    ("square-grid", 3, "none"): 0,
    ("square-grid", 3, "all"): 0,
    ("square-grid", 3, "faces:[x0]"): 0,
    ("square-grid", 3, "faces:[x0,x1]"): 1,
    ("square-hole", 3, "none"): 1,
    ("square-hole", 3, "all"): 1,
}


def test_05_cohomology_matches_oracle():
    with criterion(5, "harmonic dimensions = integer relative homology on the full suite, < 60 s"):
        t0 = time.perf_counter()
        for gen, n, pspec in CASES + [("square-grid", 2, "faces:[y1]"), ("square-grid", 2, "faces:[y0,y1]")]:
            mesh = _mesh(gen, n)
            part = make_partition(mesh, pspec)
            dims = _complex(gen, n, pspec).harmonic_dims()
            oracle = mesh_relative_betti(mesh, part.gamma_t)
            assert dims == oracle, (gen, n, pspec, dims, oracle)
            if (gen, n, pspec) in FROZEN:
                assert dims[1] == FROZEN[gen, n, pspec]
        assert _complex("cube-grid", 1, "none").harmonic_dims() == (1, 0, 0, 0)
        assert _complex("cube-tunnel", 3, "none").harmonic_dims()[1] == 1
        elapsed = time.perf_counter() - t0
        assert elapsed < 60.0, f"took {elapsed:.1f} s"


# 6 -----------------------------------------------------------------------


def test_06_duality():
    with criterion(6, "d^q(Gamma_t) = d^{d-q}(Gamma_n) for every suite entry and degree"):
        for gen, n, pspec in CASES:
            mesh = _mesh(gen, n)
            rep = betti_duality_check(mesh, make_partition(mesh, pspec))
            assert rep.passed, (gen, n, pspec, rep.to_dict())


# 7 -----------------------------------------------------------------------


def test_07_weight_independence():
    with criterion(7, "10 random SPD weight fields leave harmonic dimensions unchanged (annulus, cube-tunnel)"):
        for gen, n in (("square-hole", 3), ("cube-tunnel", 3)):
            mesh = _mesh(gen, n)
            for pspec in ("none", "all", "halfspace:x<=0.5"):
                ws = [WeightField.unit()] + [WeightField.random_spd(mesh, 700 + s) for s in range(10)]
                rep = weight_independence(mesh, make_partition(mesh, pspec), ws)
                assert rep.passed, (gen, pspec, rep.dims)


# 8 -----------------------------------------------------------------------


def test_08_poincare_convergence():
    with criterion(8, "Dirichlet gradient constant -> 1/(pi sqrt 2) within 2% at h=1/64; combined-estimate margins >= 0; < 120 s"):
        t0 = time.perf_counter()
        target = 1.0 / (math.pi * math.sqrt(2.0))  # first Dirichlet eigenvalue 2 pi^2
        cs = []
        for n in (8, 16, 32, 64):
            mesh = generate_mesh("square-grid", {"n": n})
            cs.append(dirichlet_gradient_constant(mesh, make_partition(mesh, "all")))
        err = abs(cs[-1] - target) / target
        print(f"  c(n) = {[round(c, 6) for c in cs]}, target {target:.6f}, relative error {err:.2e}")
        assert err <= 0.02
        assert np.all(np.diff(cs) > 0)
        worst = math.inf
        for gen, n, pspec in CASES:
            dr = _complex(gen, n, pspec, weighted=True)
            for q in range(dr.dim + 1):
                m = combined_estimate_margins(dr.pair(q), n_samples=100, seed=q)
                if m.size:
                    worst = min(worst, float(m.min()))
        print(f"  min combined-estimate margin {worst:.3e}")
        assert worst >= -1e-12  # roundoff floor for extremal (equality) directions
        elapsed = time.perf_counter() - t0
        assert elapsed < 120.0, f"took {elapsed:.1f} s"


# 9 -----------------------------------------------------------------------


def _algebra_residuals(cp, rd):
    P = potential_from_decomposition(rd)
    Qt, Nt = decomposition_from_potential(P)
    diag = projector_diagnostics(Qt, Nt)
    A1 = cp.A1.dense
    out = dict(diag.residuals)
    out["A1Q-A1"] = linalg.weighted_norm(A1 @ Qt.dense - A1, cp.H1.factor, cp.H2.factor) / cp.A1.norm()
    K = kernel(cp.A1).columns
    # K is G-orthonormal, so its coefficients carry the Euclidean metric
    out["Q|N(A1)"] = linalg.weighted_norm(Qt.dense @ K, np.eye(K.shape[1]), cp.H1.factor) if K.shape[1] else 0.0
    return out


def test_09_regular_decomposition_algebra():
    with criterion(9, "Q~^2=Q~, N~^2=N~, I_-^2=I, A1Q~=A1, Q~|N(A1)=0, three-term = I (<= 1e-9)"):
        worst = {}

        def absorb(res):
            for k, v in res.items():
                worst[k] = max(worst.get(k, 0.0), v)

        for seed in range(20):
            cp = random_complex((5, 9, 6), (3, 4), seed=seed, cond=50)
            absorb(_algebra_residuals(cp, trivial_decomposition(cp)))
            absorb(_algebra_residuals(cp, random_decomposition(cp, seed)))
        for gen, n, pspec in CASES:
            dr = _complex(gen, n, pspec, weighted=True)
            for q in range(dr.dim + 1):
                cp = dr.pair(q)
                if cp.A1.rank == 0:
                    continue
                absorb(_algebra_residuals(cp, trivial_decomposition(cp)))
                absorb(_algebra_residuals(cp, random_decomposition(cp, q)))
        three = 0.0
        for pspec in ("none", "all", "halfspace:x<=0.5"):
            for weighted in (False, True):
                dr = _complex("square-hole", 3, pspec, weighted)
                for q in range(dr.dim + 1):
                    cp = dr.pair(q)
                    if not (cp.cohomology_dim and cp.A0.rank and cp.A1.rank):
                        continue
                    for rule in ("auto", "cochain"):
                        ops = three_term_operators(cp, pseudoinverse_potential(cp.A1),
                                                   pseudoinverse_potential(cp.A0), build_prebasis(cp, rule, "d"))
                        three = max(three, ops.residual)
        worst["three-term"] = three
        print("  " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
        assert all(v <= 1e-9 for v in worst.values()), worst


# 10 ----------------------------------------------------------------------


def test_10_pairing_identity():
    with criterion(10, "|x|^2 = <x,p1> + <A0* x,p0> on every tested decomposition (<= 1e-9)"):
        rng = np.random.default_rng(10)
        worst, count = 0.0, 0

        def check(cp, split):
            nonlocal worst, count
            for _ in range(20):
                x = rng.standard_normal(cp.H1.dim)
                p1, p0 = split(x)
                worst = max(worst, pairing_identity(cp, x, p1, p0))
                count += 1

        def standard(cp, rd):
            check(cp, lambda x: (rd.Q1.dense @ x, rd.Q0.dense @ x))

        complexes = [random_complex((5, 9, 6), (3, 4), seed=s, cond=50) for s in range(10)]
        complexes += [random_complex((4, 7, 3), (4, 3), seed=s) for s in range(5)]  # exact
        for gen, n, pspec in CASES:
            dr = _complex(gen, n, pspec, weighted=True)
            complexes += [dr.pair(q) for q in range(dr.dim + 1) if dr.pair(q).H1.dim]
        for cp in complexes:
            standard(cp, trivial_decomposition(cp))
            standard(cp, random_decomposition(cp, 1))
            if cp.A0.rank and cp.A1.rank:
                PA1, PA0 = pseudoinverse_potential(cp.A1), pseudoinverse_potential(cp.A0)
                if cp.cohomology_dim == 0:
                    standard(cp, exact_decomposition(PA1, PA0))
                else:
                    pb = build_prebasis(cp, "auto", "d")

                    def split(x, cp=cp, PA1=PA1, PA0=PA0, pb=pb):
                        t = three_term_decomposition(cp, PA1, PA0, pb, x)
                        return t.x1 + t.xB, t.p0

                    check(cp, split)
        print(f"  {count} decompositions, max residual {worst:.2e}")
        assert worst <= 1e-9


# 11 ----------------------------------------------------------------------


def test_11_alternative_projections():
    with criterion(11, "Harm & B^perp = {0}, N(d) & B_delta^perp = R(d_{q-1}) with auto pre-bases"):
        checked = 0
        for gen, n in (("square-hole", 3), ("cube-tunnel", 3)):
            for pspec in ("none", "all", "halfspace:x<=0.5"):
                for weighted in (False, True):
                    dr = _complex(gen, n, pspec, weighted)
                    for q in range(dr.dim + 1):
                        cp = dr.pair(q)
                        if not cp.cohomology_dim:
                            continue
                        rep = alternative_projection_check(cp, build_prebasis(cp, "auto", "d"),
                                                           build_prebasis(cp, "auto", "delta"))
                        assert rep.passed, (gen, pspec, q, rep.to_dict())
                        checked += 1
        assert checked >= 12


# 12 ----------------------------------------------------------------------

DETERMINISM_CONFIG = {
    "schema": 1,
    "seed": 7,
    "mesh": {"generator": "square-hole", "params": {"n": 3}},
    "partition": "halfspace:x<=0.5",
    "weights": {"kind": "random-spd"},
    "experiments": ["mini-fat", "duality", {"name": "weights", "params": {"count": 3}},
                    {"name": "poincare-convergence", "params": {"generator": "square-grid", "n": [4, 8]}}, "helmholtz-demo",
                    {"name": "regular-decomposition-suite", "params": {"samples": 5}}],
}


def _hct_command():
    exe = shutil.which("hct")
    return [exe] if exe else [sys.executable, "-m", "hct.cli"]


def test_12_determinism(tmp_path):
    with criterion(12, "repeated `hct run` with a fixed seed gives byte-identical payloads"):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(DETERMINISM_CONFIG))
        outs = []
        for i, env_threads in enumerate((None, "1")):
            env = None
            if env_threads:
                import os

                env = dict(os.environ, HCT_THREADS=env_threads)
            out = tmp_path / f"r{i}.json"
            res = subprocess.run(_hct_command() + ["run", str(cfg), "--out", str(out)], env=env,
                                 capture_output=True, text=True)
            assert res.returncode == 0, res.stderr
            outs.append(out.read_text())
        stripped = ["\n".join(l for l in o.splitlines() if not l.lstrip().startswith('"timestamp"')) for o in outs]
        assert stripped[0] == stripped[1]
        assert json.loads(outs[0])["records"]
        csvs = []
        for i in range(2):
            out = tmp_path / f"r{i}.csv"
            res = subprocess.run(_hct_command() + ["run", str(cfg), "--format", "csv", "--out", str(out)],
                                 capture_output=True, text=True)
            assert res.returncode == 0, res.stderr
            csvs.append(out.read_bytes())
        assert csvs[0] == csvs[1]
