"""Experiment configuration, orchestration and report emission.

A configuration (``"schema": 1``) looks like::

    {
      "schema": 1,
      "seed": 0,
      "mesh": {"generator": "square-hole", "params": {"n": 3}},
      "partition": "none",
      "weights": "unit",
      "scheme": "whitney-galerkin",
      "degrees": [0, 1, 2],
      "experiments": ["mini-fat", {"name": "weights", "params": {"count": 10}}],
      "output": {"path": "report.json", "format": "json"}
    }

``mesh`` may instead be ``{"file": "mesh.json"}`` (relative to the config
file) and may carry ``"refine": k``. Partition predicates:

``none`` / ``all``
    gamma_t empty / the whole boundary.
``halfspace:x<=0.5``
    facets whose centroid satisfies the inequality (``x``, ``y``, ``z``;
    ``<=``, ``<``, ``>=``, ``>``).
``faces:[x0,y1]``
    facets on the bounding-box sides ``x = min`` and ``y = max``.
``labels:[a,b]``
    facets whose ``boundary_labels`` entry is listed.
``alternate``
    every other boundary facet in index order (a deliberately irregular
    checkerboard partition).

Weights: ``"unit"``, ``{"kind": "random-spd", "degrees": [1]}``,
``{"kind": "scalar", "values": {"1": 2.0}}`` or
``{"kind": "anisotropic", "q": 1, "diag": [1, 100]}``.

Every report record carries ``experiment, mesh, partition, q, quantity,
value, tolerance, status`` with status ``pass``, ``fail`` or ``info``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .derham import (
    SCHEMES,
    WeightField,
    assemble_complex,
    betti_duality_check,
    dirichlet_gradient_constant,
    helmholtz_field_decomposition,
    poincare_constants,
    weight_independence,
)
from .errors import ConfigError, HctError
from .generators import CATALOG, generate_mesh
from .homology import mesh_relative_betti
from .linalg import weighted_norm
from .mesh import (
    BoundaryPartition,
    SimplicialMesh,
    load_mesh,
    mark_boundary,
    partition_from_facets,
    partition_from_labels,
    refine,
)
from .regular import (
    alternative_projection_check,
    build_prebasis,
    decomposition_from_potential,
    pairing_identity,
    potential_from_decomposition,
    projector_diagnostics,
    pseudoinverse_potential,
    random_decomposition,
    three_term_operators,
    trivial_decomposition,
)
from .serialize import atomic_write, dumps, round_sig
from .toolbox import kernel, mini_fat

SCHEMA_VERSION = 1
EXPERIMENTS = ("mini-fat", "duality", "weights", "poincare-convergence", "helmholtz-demo",
               "regular-decomposition-suite")
CSV_COLUMNS = ("experiment", "mesh", "partition", "q", "quantity", "value", "tolerance", "status")
HELMHOLTZ_TOL = 1e-10
IDENTITY_TOL = 1e-9
MARGIN_TOL = 1e-9
C_EQUALITY_TOL = 1e-10
GEOM_TOL = 1e-9


# -- configuration -----------------------------------------------------------


@dataclass
class ExperimentConfig:
    mesh_spec: dict
    partition_spec: str = "none"
    weight_spec: object = "unit"
    scheme: str = "whitney-galerkin"
    degrees: list | None = None
    experiments: list = field(default_factory=list)  # [(name, params)]
    seed: int = 0
    output_path: str | None = None
    output_format: str = "json"
    base_dir: Path = field(default_factory=Path)

    def echo(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "mesh": self.mesh_spec,
            "partition": self.partition_spec,
            "weights": self.weight_spec,
            "scheme": self.scheme,
            "degrees": self.degrees,
            "experiments": [{"name": n, "params": p} for n, p in self.experiments],
            "seed": self.seed,
        }


def _require(cond, message, fld):
    if not cond:
        raise ConfigError(message, fld)


def parse_config(data: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    """Validate a decoded configuration; errors name the offending field."""
    _require(isinstance(data, dict), "configuration must be a JSON object", "<root>")
    known = {"schema", "seed", "mesh", "partition", "weights", "scheme", "degrees", "experiments", "output"}
    extra = sorted(set(data) - known)
    _require(not extra, f"unknown keys {extra}", extra[0] if extra else "")
    _require(data.get("schema") == SCHEMA_VERSION, f"schema must be {SCHEMA_VERSION}", "schema")
    seed = data.get("seed", 0)
    _require(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0,
             "seed must be a non-negative integer", "seed")
    mesh = data.get("mesh")
    _require(isinstance(mesh, dict), "mesh must be an object", "mesh")
    if "generator" in mesh:
        _require(mesh["generator"] in CATALOG, f"unknown generator {mesh['generator']!r}", "mesh.generator")
        _require(isinstance(mesh.get("params", {}), dict), "params must be an object", "mesh.params")
    else:
        _require(isinstance(mesh.get("file"), str), "mesh needs 'generator' or 'file'", "mesh")
    _require(isinstance(mesh.get("refine", 0), int) and mesh.get("refine", 0) >= 0,
             "refine must be a non-negative integer", "mesh.refine")
    partition = data.get("partition", "none")
    _require(isinstance(partition, str), "partition must be a string", "partition")
    _check_partition_syntax(partition)
    weights = data.get("weights", "unit")
    _check_weight_syntax(weights)
    scheme = data.get("scheme", "whitney-galerkin")
    _require(scheme in SCHEMES, f"scheme must be one of {list(SCHEMES)}", "scheme")
    degrees = data.get("degrees")
    _require(degrees is None or (isinstance(degrees, list) and all(isinstance(q, int) for q in degrees)),
             "degrees must be a list of integers", "degrees")
    exps = []
    for i, e in enumerate(data.get("experiments", [])):
        if isinstance(e, str):
            name, params = e, {}
        elif isinstance(e, dict) and isinstance(e.get("name"), str):
            name, params = e["name"], e.get("params", {})
        else:
            raise ConfigError("experiment must be a name or {name, params}", f"experiments[{i}]")
        _require(name in EXPERIMENTS, f"unknown experiment {name!r}", f"experiments[{i}].name")
        _require(isinstance(params, dict), "params must be an object", f"experiments[{i}].params")
        exps.append((name, params))
    out = data.get("output", {})
    _require(isinstance(out, dict), "output must be an object", "output")
    fmt = out.get("format", "json")
    _require(fmt in ("json", "csv"), "output.format must be json or csv", "output.format")
    return ExperimentConfig(mesh, partition, weights, scheme, degrees, exps, seed, out.get("path"), fmt,
                            Path(base_dir))


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "<file>") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", "<json>") from None
    return parse_config(data, path.parent)


_HALFSPACE = re.compile(r"^halfspace:\s*([xyz])\s*(<=|>=|<|>)\s*([-+0-9.eE]+)\s*$")
_LIST = re.compile(r"^(faces|labels):\s*\[(.*)\]\s*$")
_FACE = re.compile(r"^([xyz])([01])$")


def _check_partition_syntax(spec: str) -> None:
    if spec in ("none", "all", "alternate"):
        return
    m = _HALFSPACE.match(spec)
    if m:
        try:
            float(m.group(3))
        except ValueError:
            raise ConfigError(f"bad threshold in {spec!r}", "partition") from None
        return
    m = _LIST.match(spec)
    if m:
        items = [s.strip() for s in m.group(2).split(",") if s.strip()]
        if m.group(1) == "faces":
            for it in items:
                _require(_FACE.match(it), f"bad face {it!r} (use x0, x1, y0, ...)", "partition")
        return
    raise ConfigError(f"unknown partition predicate {spec!r}", "partition")


def _check_weight_syntax(spec) -> None:
    if spec == "unit":
        return
    _require(isinstance(spec, dict) and spec.get("kind") in ("random-spd", "scalar", "anisotropic"),
             "weights must be 'unit' or an object with kind random-spd|scalar|anisotropic", "weights")


def make_partition(mesh: SimplicialMesh, spec: str) -> BoundaryPartition:
    _check_partition_syntax(spec)
    if spec == "none":
        return partition_from_facets(mesh, [])
    if spec == "all":
        return partition_from_facets(mesh, mesh.boundary_facets)
    if spec == "alternate":
        return partition_from_facets(mesh, mesh.boundary_facets[::2])
    m = _HALFSPACE.match(spec)
    if m:
        axis = "xyz".index(m.group(1))
        op, t = m.group(2), float(m.group(3))
        cmp: Callable[[float], bool] = {
            "<=": lambda v: v <= t + GEOM_TOL, "<": lambda v: v < t - GEOM_TOL,
            ">=": lambda v: v >= t - GEOM_TOL, ">": lambda v: v > t + GEOM_TOL,
        }[op]
        if axis >= mesh.ambient_dim:
            raise ConfigError(f"{m.group(1)} is not a coordinate of a {mesh.ambient_dim}-D mesh", "partition")
        return mark_boundary(mesh, lambda c: cmp(float(c[axis])))
    m = _LIST.match(spec)
    items = [s.strip() for s in m.group(2).split(",") if s.strip()]
    if m.group(1) == "labels":
        return partition_from_labels(mesh, items)
    lo, hi = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    facets = mesh.simplices[mesh.dim - 1]
    chosen = []
    for f in mesh.boundary_facets:
        X = mesh.vertices[facets[f]]
        for it in items:
            axis, side = "xyz".index(it[0]), int(it[1])
            if axis >= mesh.ambient_dim:
                raise ConfigError(f"{it} is not a side of a {mesh.ambient_dim}-D mesh", "partition")
            plane = hi[axis] if side else lo[axis]
            if np.all(np.abs(X[:, axis] - plane) <= GEOM_TOL):
                chosen.append(int(f))
                break
    return partition_from_facets(mesh, chosen)


def make_weights(mesh: SimplicialMesh, spec, seed: int) -> WeightField:
    if spec == "unit":
        return WeightField.unit()
    kind = spec["kind"]
    try:
        if kind == "random-spd":
            return WeightField.random_spd(mesh, seed, spec.get("degrees"), spec.get("spread", 10.0))
        if kind == "scalar":
            return WeightField({int(q): np.full(len(mesh.cells), float(v)) for q, v in spec["values"].items()})
        q = int(spec["q"])
        return WeightField.constant_matrix(mesh, q, np.diag(np.asarray(spec["diag"], dtype=float)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad weight specification: {exc}", "weights") from None


def make_mesh(spec: dict, base_dir: Path = Path(".")) -> tuple[SimplicialMesh, str]:
    if "generator" in spec:
        params = spec.get("params", {})
        try:
            mesh = generate_mesh(spec["generator"], params)
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc), "mesh.params") from None
        label = spec["generator"] + "(" + ",".join(f"{k}={v}" for k, v in sorted(params.items())) + ")"
    else:
        path = Path(spec["file"])
        try:
            mesh = load_mesh(path if path.is_absolute() else base_dir / path)
        except OSError as exc:
            raise ConfigError(f"cannot read mesh file {path}: {exc.strerror}", "mesh.file") from None
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid mesh file {path}: {exc}", "mesh.file") from None
        label = path.name
    for _ in range(spec.get("refine", 0)):
        mesh = refine(mesh)
    if spec.get("refine"):
        label += f"/refine{spec['refine']}"
    return mesh, label


# -- records -----------------------------------------------------------------


@dataclass
class Record:
    experiment: str
    mesh: str
    partition: str
    q: object
    quantity: str
    value: object
    tolerance: object = None
    status: str = "info"

    def to_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


class _Recorder:
    def __init__(self, experiment, mesh, partition):
        self.experiment, self.mesh, self.partition = experiment, mesh, partition
        self.records: list[Record] = []

    def info(self, q, quantity, value):
        self.records.append(Record(self.experiment, self.mesh, self.partition, q, quantity, value))

    def check(self, q, quantity, value, tolerance, ok: bool):
        self.records.append(Record(self.experiment, self.mesh, self.partition, q, quantity, value, tolerance,
                                   "pass" if ok else "fail"))

    def at_most(self, q, quantity, value, tol):
        self.check(q, quantity, value, tol, bool(value <= tol))

    def equal(self, q, quantity, value, expected):
        self.check(q, quantity, value, expected, value == expected)


@dataclass
class Context:
    config: ExperimentConfig
    mesh: SimplicialMesh
    mesh_label: str
    partition: BoundaryPartition
    weights: WeightField

    @property
    def degrees(self) -> list:
        qs = self.config.degrees
        return list(range(self.mesh.dim + 1)) if qs is None else [q for q in qs if 0 <= q <= self.mesh.dim]

    def complex(self, partition=None, weights=None):
        return assemble_complex(self.mesh, partition or self.partition, weights or self.weights,
                                self.config.scheme)


# -- experiments -------------------------------------------------------------


def exp_mini_fat(ctx: Context, params: dict, rec: _Recorder) -> None:
    dr = ctx.complex()
    oracle = mesh_relative_betti(ctx.mesh, ctx.partition.gamma_t)
    n_samples = int(params.get("samples", 100))
    for q in ctx.degrees:
        rep = mini_fat(dr.pair(q), n_samples=n_samples, seed=ctx.config.seed + q)
        rec.equal(q, "cohomology_dim", rep.cohomology_dim, oracle[q])
        rec.info(q, "c_A0", rep.c_A0)
        rec.info(q, "c_A1", rep.c_A1)
        for k, v in rep.helmholtz_residuals.items():
            if k == "dimension_defect":
                rec.equal(q, f"helmholtz.{k}", v, 0)
            else:
                rec.at_most(q, f"helmholtz.{k}", v, HELMHOLTZ_TOL)
        rec.check(q, "combined_estimate_margin", rep.combined_estimate_margin, -MARGIN_TOL,
                  rep.combined_estimate_margin >= -MARGIN_TOL)
        cc = dr.pair(q).harmonic_cross_check
        rec.equal(q, "harmonic_dim_laplacian", cc["dim_laplacian"], cc["dim_stacked"])


DEFAULT_DUALITY_SUITE = (
    ("square-grid", 3, ("none", "all", "faces:[x0]", "faces:[x0,x1]", "halfspace:x<=0.5")),
    ("square-hole", 3, ("none", "all", "halfspace:x<=0.5", "alternate")),
    ("l-shape", 2, ("none", "all", "halfspace:y<=0.25")),
    ("interval", 4, ("none", "all", "halfspace:x<=0.5")),
    ("cube-grid", 1, ("none", "all", "faces:[z0]", "halfspace:x<=0.5")),
    ("cube-tunnel", 3, ("none", "all", "faces:[x0,x1]", "halfspace:x<=0.5")),
)


def exp_duality(ctx: Context, params: dict, rec: _Recorder) -> None:
    if params.get("suite") == "catalog":
        cases = []
        for name, n, parts in DEFAULT_DUALITY_SUITE:
            mesh = generate_mesh(name, {"n": n})
            cases += [(mesh, f"{name}(n={n})", p) for p in parts]
    else:
        cases = [(ctx.mesh, ctx.mesh_label, ctx.config.partition_spec)]
    for mesh, label, pspec in cases:
        part = make_partition(mesh, pspec)
        r = _Recorder(rec.experiment, label, pspec)
        rep = betti_duality_check(mesh, part, ctx.config.scheme)
        oracle = mesh_relative_betti(mesh, part.gamma_t)
        n = mesh.dim
        for q in range(n + 1):
            r.equal(q, "d_t", rep.dims_t[q], oracle[q])
            r.equal(q, "d_n(n-q)", rep.dims_n[n - q], rep.dims_t[q])
        rec.records += r.records


def exp_weights(ctx: Context, params: dict, rec: _Recorder) -> None:
    count = int(params.get("count", 10))
    wl = [WeightField.unit()] + [WeightField.random_spd(ctx.mesh, ctx.config.seed + 1000 + i)
                                 for i in range(count)]
    if "anisotropic" in params and ctx.mesh.dim >= 2:
        wl.append(WeightField.constant_matrix(ctx.mesh, 1, np.diag(np.asarray(params["anisotropic"], float))))
    rep = weight_independence(ctx.mesh, ctx.partition, wl, ctx.config.scheme)
    qs = ctx.degrees
    for q in qs:
        rec.info(q, "dim[unit]", rep.dims[0][q])
    for i, (dims, angles) in enumerate(zip(rep.dims[1:], rep.max_angles[1:]), start=1):
        for q in qs:
            rec.equal(q, f"dim[w{i}]", dims[q], rep.dims[0][q])
            rec.info(q, f"max_angle[w{i}]", angles[q])


def _analytic_target(generator: str, pspec: str):
    if pspec == "all" and generator == "square-grid":
        return 1.0 / (math.pi * math.sqrt(2.0))
    if pspec == "all" and generator == "interval":
        return 1.0 / math.pi
    return None


def exp_poincare(ctx: Context, params: dict, rec: _Recorder) -> None:
    generator = params.get("generator", ctx.config.mesh_spec.get("generator", "square-grid"))
    pspec = params.get("partition", "all")
    ns = [int(n) for n in params.get("n", [8, 16, 32, 64])]
    target = params.get("target", _analytic_target(generator, pspec))
    rtol = float(params.get("rtol", 0.02))
    r = _Recorder(rec.experiment, generator, pspec)
    cs = []
    for n in ns:
        mesh = generate_mesh(generator, {"n": n})
        c = dirichlet_gradient_constant(mesh, make_partition(mesh, pspec))
        cs.append(c)
        r.info(0, f"c_grad[n={n}]", c)
    if len(cs) > 1:
        steps = np.diff(cs)
        mono = bool(np.all(steps >= 0) or np.all(steps <= 0))
        r.check(0, "monotone", mono, None, mono)
    if target is not None and cs:
        err = abs(cs[-1] - target) / target
        r.info(0, "target", target)
        r.at_most(0, f"relative_error[n={ns[-1]}]", err, rtol)
    rec.records += r.records
    # best-constant equality and the combined estimate on the configured complex
    dr = ctx.complex()
    for pr in poincare_constants(dr, int(params.get("samples", 100)), ctx.config.seed):
        if pr.q not in ctx.degrees:
            continue
        rec.info(pr.q, "c", pr.c)
        rec.info(pr.q, "c_adjoint", pr.c_adjoint)
        rec.at_most(pr.q, "c_relative_gap", pr.relative_gap, C_EQUALITY_TOL)
        rec.check(pr.q, "combined_estimate_margin", pr.combined_estimate_margin, -MARGIN_TOL,
                  pr.combined_estimate_margin >= -MARGIN_TOL)


def exp_helmholtz(ctx: Context, params: dict, rec: _Recorder) -> None:
    dr = ctx.complex()
    n_samples = int(params.get("samples", 100))
    rng = np.random.default_rng(ctx.config.seed)
    for q in ctx.degrees:
        dim = dr.spaces[q].dim
        worst = {"reconstruction": 0.0, "orthogonality": 0.0, "pythagoras": 0.0}
        for _ in range(n_samples if dim else 0):
            fd = helmholtz_field_decomposition(dr, q, rng.standard_normal(dim))
            for k in worst:
                worst[k] = max(worst[k], fd.residuals[k])
        for k, v in worst.items():
            rec.at_most(q, k, v, HELMHOLTZ_TOL)
        if q > 0 and dr.spaces[q - 1].dim and dim:
            pot = rng.standard_normal(dr.spaces[q - 1].dim)
            field_ = dr.operators[q - 1].matrix @ pot
            g, h, c = helmholtz_field_decomposition(dr, q, field_)
            nf = dr.spaces[q].norm(field_) or 1.0
            rec.at_most(q, "exact_field_nonexact_part", (dr.spaces[q].norm(h) + dr.spaces[q].norm(c)) / nf,
                        HELMHOLTZ_TOL)
        rec.info(q, "dims[R,H,R*]", list(dr.pair(q).helmholtz.dims))


def exp_regular(ctx: Context, params: dict, rec: _Recorder) -> None:
    dr = ctx.complex()
    n_samples = int(params.get("samples", 20))
    rng = np.random.default_rng(ctx.config.seed)
    for q in ctx.degrees:
        cp = dr.pair(q)
        if cp.H1.dim == 0:
            continue
        decomps = [("trivial", trivial_decomposition(cp)), ("random", random_decomposition(cp, ctx.config.seed + q))]
        for name, rd in decomps:
            rec.at_most(q, f"{name}.Q1+A0Q0-I", rd.residual, IDENTITY_TOL)
            worst = 0.0
            for _ in range(n_samples):
                x = rng.standard_normal(cp.H1.dim)
                worst = max(worst, pairing_identity(cp, x, rd.Q1.dense @ x, rd.Q0.dense @ x))
            rec.at_most(q, f"{name}.pairing_identity", worst, IDENTITY_TOL)
            if cp.A1.rank == 0:
                rec.info(q, f"{name}.potential", "NoReducedPart")
                continue
            P = potential_from_decomposition(rd)
            Qt, Nt = decomposition_from_potential(P)
            diag = projector_diagnostics(Qt, Nt)
            for k, v in diag.residuals.items():
                rec.at_most(q, f"{name}.{k}", v, IDENTITY_TOL)
            A1 = cp.A1.dense
            rec.at_most(q, f"{name}.A1Q-A1", weighted_norm(A1 @ Qt.dense - A1, cp.H1.factor, cp.H2.factor) / cp.A1.norm(),
                        IDENTITY_TOL)
            K = kernel(cp.A1).columns
            kz = float(np.max(np.abs(Qt.dense @ K), initial=0.0))
            rec.at_most(q, f"{name}.Q|N(A1)", kz, IDENTITY_TOL)
            rec.info(q, f"{name}.I_minus_sigma_min", diag.I_minus_sigma_min)
        if cp.cohomology_dim and cp.A0.rank and cp.A1.rank:
            for rule in ("auto", "cochain"):
                pb_d = build_prebasis(cp, rule, "d")
                pb_l = build_prebasis(cp, rule, "delta")
                ops = three_term_operators(cp, pseudoinverse_potential(cp.A1), pseudoinverse_potential(cp.A0), pb_d)
                rec.at_most(q, f"{rule}.three_term_residual", ops.residual, IDENTITY_TOL)
                rec.info(q, f"{rule}.I_H_condition", pb_d.condition)
                alt = alternative_projection_check(cp, pb_d, pb_l)
                for k, v in alt.checks.items():
                    rec.check(q, f"{rule}.alternative.{k}", v, None, v)


RUNNERS = {
    "mini-fat": exp_mini_fat,
    "duality": exp_duality,
    "weights": exp_weights,
    "poincare-convergence": exp_poincare,
    "helmholtz-demo": exp_helmholtz,
    "regular-decomposition-suite": exp_regular,
}


# -- run and emit ----------------------------------------------------------


@dataclass
class Report:
    config: dict
    records: list
    version: str = __version__
    timestamp: str = ""

    @property
    def passed(self) -> bool:
        return all(r.status != "fail" for r in self.records)

    def payload(self) -> dict:
        """Everything except the timestamp (the part that must be reproducible)."""
        return {"tool": "hct", "version": self.version, "config": self.config,
                "records": [r.to_dict() for r in self.records], "passed": self.passed}

    def to_dict(self) -> dict:
        d = self.payload()
        d["timestamp"] = self.timestamp
        return d


def run(config: ExperimentConfig) -> Report:
    """Execute the configured experiments in order."""
    mesh, label = make_mesh(config.mesh_spec, config.base_dir)
    partition = make_partition(mesh, config.partition_spec)
    weights = make_weights(mesh, config.weight_spec, config.seed)
    ctx = Context(config, mesh, label, partition, weights)
    records = []
    for name, params in config.experiments:
        rec = _Recorder(name, label, config.partition_spec)
        try:
            RUNNERS[name](ctx, params, rec)
        except HctError as exc:
            rec.check(None, "error", f"{type(exc).__name__}: {exc}", None, False)
        records += rec.records
    return Report(config.echo(), records, timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(round_sig(v)) if math.isfinite(v) else round_sig(v)
    if isinstance(v, (list, tuple)):
        return json.dumps(list(v))
    return str(v)


def report_to_csv(report: Report | dict) -> str:
    records = report.payload()["records"] if isinstance(report, Report) else report["records"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def report_to_json(report: Report | dict) -> str:
    return dumps(report.to_dict() if isinstance(report, Report) else report)


def emit_csv(report: Report | dict, path) -> None:
    atomic_write(path, report_to_csv(report))


def emit_json(report: Report | dict, path) -> None:
    atomic_write(path, report_to_json(report))
