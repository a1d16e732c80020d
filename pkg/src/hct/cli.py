"""Command-line front end.

``hct run CONFIG [--out PATH] [--format json|csv]``
    Run the experiments of a configuration file. Exit status 0 when every
    check passes, 1 when a check fails, 2 on usage or configuration errors.
``hct mesh NAME [--params n=4 ...] --out mesh.json``
    Write a catalog mesh in the JSON mesh format.
``hct report REPORT.json --format csv|json [--out PATH]``
    Re-emit a saved JSON report.

``HCT_THREADS`` caps the BLAS/LAPACK thread pools.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext

from threadpoolctl import threadpool_limits

from . import __version__
from .errors import ConfigError, HctError
from .experiments import emit_csv, emit_json, load_config, report_to_csv, report_to_json, run
from .generators import CATALOG, generate_mesh
from .mesh import save_mesh

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _thread_limit():
    raw = os.environ.get("HCT_THREADS")
    if not raw:
        return nullcontext()
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"HCT_THREADS must be a positive integer, got {raw!r}", "HCT_THREADS") from None
    return threadpool_limits(limits=n)


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {item!r}", "--params")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _write(text: str, out, emit, report):
    if out:
        emit(report, out)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    config = load_config(args.config)
    fmt = args.format or config.output_format
    out = args.out or (str(config.base_dir / config.output_path) if config.output_path else None)
    with _thread_limit():
        report = run(config)
    if fmt == "csv":
        _write(report_to_csv(report), out, emit_csv, report)
    else:
        _write(report_to_json(report), out, emit_json, report)
    failed = [r for r in report.records if r.status == "fail"]
    for r in failed:
        print(f"FAIL {r.experiment} {r.mesh} {r.partition} q={r.q} {r.quantity}={r.value} (tol {r.tolerance})",
              file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_mesh(args) -> int:
    mesh = generate_mesh(args.name, _parse_params(args.params))
    if args.out:
        save_mesh(mesh, args.out)
    print(f"{args.name}: dim={mesh.dim} counts={mesh.counts()} euler={mesh.euler_characteristic}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        with open(args.report) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.report}: {exc.strerror}", "<report>") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", "<report>") from None
    if not isinstance(data, dict) or "records" not in data:
        raise ConfigError("not an hct report (missing 'records')", "records")
    if args.format == "csv":
        _write(report_to_csv(data), args.out, emit_csv, data)
    else:
        _write(report_to_json(data), args.out, emit_json, data)
    return EXIT_OK if data.get("passed", True) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hct", description="Hilbert-complex toolbox and discrete de Rham experiments.")
    p.add_argument("--version", action="version", version=f"hct {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run experiments from a configuration file")
    r.add_argument("config")
    r.add_argument("--out", help="output path (default: config output.path, else stdout)")
    r.add_argument("--format", choices=("json", "csv"))
    r.set_defaults(func=cmd_run)
    m = sub.add_parser("mesh", help="write a catalog mesh as JSON")
    m.add_argument("name", choices=sorted(CATALOG))
    m.add_argument("--params", nargs="*", metavar="KEY=VALUE")
    m.add_argument("--out")
    m.set_defaults(func=cmd_mesh)
    rp = sub.add_parser("report", help="convert a saved JSON report")
    rp.add_argument("report")
    rp.add_argument("--format", choices=("json", "csv"), default="json")
    rp.add_argument("--out")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"hct: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HctError as exc:
        print(f"hct: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
