"""Command-line interface: ``coupled-igdt {validate,base,robust,opportunity}``.

Exit codes: 0 ok, 2 parse error, 3 validation error, 4 solver failure.
Option values come from command-line flags, then an optional TOML config
file (``--config``), then built-in defaults.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from pathlib import Path

from . import export
from .dispatch import DispatchError, DispatchInfeasible, DispatchNotConverged, DispatchProblem, solve_dispatch
from .igdt import ALPHA_MAX, TOL_ALPHA, solve_opportunity, solve_robustness, sweep
from .model import ParseError, ValidationError, load_prices, load_system

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_SOLVER = 0, 2, 3, 4

DEFAULTS = {
    "system": None,
    "prices": None,
    "out": "out",
    "tol_alpha": TOL_ALPHA,
    "alpha_max": ALPHA_MAX,
    "jobs": None,  # resolved to available parallelism
    "format": "csv",
    "sigma": None,
    "rho": None,
    "sweep": None,
}


class UsageError(Exception):
    pass


def parse_sweep(text: str) -> list:
    """``a:b:step`` -> [a, a+step, ..., b] (inclusive, rounded to 12 digits)."""
    try:
        a, b, step = (float(p) for p in str(text).split(":"))
    except ValueError:
        raise UsageError(f"--sweep expects a:b:step (got {text!r})") from None
    if not step > 0 or b < a or a < 0:
        raise UsageError(f"--sweep needs 0 <= a <= b and step > 0 (got {text!r})")
    n = int(math.floor((b - a) / step + 1e-9))
    return [round(a + k * step, 12) for k in range(n + 1)]


def _common(p: argparse.ArgumentParser, outputs=True, solver=False):
    # defaults are None so config-file values can fill the gaps
    p.add_argument("--system", help="system JSON file")
    p.add_argument("--prices", help="price forecast CSV (header hour,lambda_tilde)")
    p.add_argument("--config", help="TOML file with default option values (flags override it)")
    if outputs:
        p.add_argument("--out", help="output directory (default: out)")
        p.add_argument("--format", choices=("csv", "json"), help="result format (default: csv)")
    if solver:
        p.add_argument("--tol-alpha", type=float, dest="tol_alpha",
                       help=f"bisection width on the horizon (default: {TOL_ALPHA})")
        p.add_argument("--jobs", type=int, help="worker processes for sweeps (default: CPU count)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coupled-igdt",
        description="Coordinated gas-electricity dispatch and info-gap price-risk analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a system file (and optionally a price file)")
    _common(p, outputs=False)

    p = sub.add_parser("base", help="least-cost dispatch at the forecast prices (B_0)")
    _common(p)

    p = sub.add_parser("robust", help="robustness horizon for cost ceiling (1+sigma)*B_0")
    _common(p, solver=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma", type=float, help="cost deviation factor for a single run")
    g.add_argument("--sweep", help="sweep deviation factors a:b:step (inclusive)")

    p = sub.add_parser("opportunity", help="opportunity horizon for cost floor (1-rho)*B_0")
    _common(p, solver=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--rho", type=float, help="cost deviation factor for a single run")
    g.add_argument("--sweep", help="sweep deviation factors a:b:step (inclusive)")
    p.add_argument("--alpha-max", type=float, dest="alpha_max",
                   help=f"upper end of the opportunity search (default: {ALPHA_MAX})")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags > config file > defaults."""
    conf = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config {args.config}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"config {args.config}: {exc}") from None
        section = raw.get(args.command, {})
        conf = {k.replace("-", "_"): v for k, v in raw.items() if not isinstance(v, dict)}
        conf.update({k.replace("-", "_"): v for k, v in section.items()})
        unknown = sorted(set(conf) - set(DEFAULTS))
        if unknown:
            raise ParseError(f"config {args.config}: unknown keys {', '.join(unknown)}")
    opts = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        opts[key] = flag if flag is not None else conf.get(key, default)
    if opts["jobs"] is None:
        opts["jobs"] = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)
    if opts["system"] is None:
        raise UsageError("--system is required (flag or config)")
    return opts


def _write(out: Path, name: str, data: bytes) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_bytes(data)


def _load(opts, need_prices=True):
    system = load_system(opts["system"])
    prices = None
    if opts["prices"] is not None:
        prices = load_prices(opts["prices"], system.horizon)
    elif need_prices:
        raise UsageError("--prices is required (flag or config)")
    return system, prices


def _write_dispatch(out: Path, prefix: str, solution, fmt: str) -> None:
    if fmt == "json":
        _write(out, f"{prefix}dispatch.json", export.export_results(solution, "json"))
        return
    for name, data in export.dispatch_tables(solution).items():
        _write(out, f"{prefix}{name}.csv", data)


def cmd_validate(opts) -> int:
    system, prices = _load(opts, need_prices=False)
    msg = f"ok: {opts['system']} (T={system.horizon}, {len(system.buses)} buses, {len(system.gas_nodes)} gas nodes)"
    if prices is not None:
        msg += f"; {opts['prices']} ({prices.horizon} prices)"
    print(msg)
    return EXIT_OK


def cmd_base(opts) -> int:
    system, prices = _load(opts)
    out = Path(opts["out"])
    try:
        sol, trace = solve_dispatch(DispatchProblem(system, prices.as_array()))
    except DispatchError as exc:
        lines = [f"{type(exc).__name__}: {exc}"]
        if isinstance(exc, DispatchInfeasible):
            lines.append("hours: " + " ".join(str(h) for h in exc.hours))
            lines.extend(f"row: {r}" for r in exc.rows)
        if isinstance(exc, DispatchNotConverged):
            _write(out, "slp_trace.csv", export.trace_csv(exc.trace))
        _write(out, "diagnostics.txt", ("\n".join(lines) + "\n").encode())
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    summary = export.dispatch_summary(sol)
    summary["B_0"] = sol.total_cost
    _write(out, "base_cost.json", export.to_json(summary))
    _write_dispatch(out, "", sol, opts["format"])
    _write(out, "slp_trace.csv", export.trace_csv(trace))
    print(f"B_0 = {sol.total_cost:.2f} (SLP iterations: {sol.iterations})")
    return EXIT_OK


def cmd_igdt(opts, mode: str) -> int:
    system, prices = _load(opts)
    out = Path(opts["out"])
    fmt = opts["format"]
    key = "sigma" if mode == "robust" else "rho"
    if opts["sweep"] is not None and opts[key] is not None:
        raise UsageError(f"--{key} and --sweep are mutually exclusive")
    if opts["sweep"] is None and opts[key] is None:
        raise UsageError(f"give --{key} or --sweep")

    if opts["sweep"] is None:
        factor = float(opts[key])
        if not factor >= 0 or (mode == "opportunity" and not factor < 1):
            raise UsageError(f"--{key} must be >= 0" + (" and < 1" if mode == "opportunity" else ""))
        if mode == "robust":
            res = solve_robustness(system, prices, factor, opts["tol_alpha"])
        else:
            res = solve_opportunity(system, prices, factor, opts["tol_alpha"], opts["alpha_max"])
        _write(out, f"{mode}_result.json", export.export_results(res, "json"))
        if fmt == "csv":
            _write(out, f"{mode}.csv", export.export_results(res, "csv"))
        _write_dispatch(out, "certificate_", res.certificate_solution, fmt)
        sys.stdout.write(export.sweep_table([res], mode).decode())
        return EXIT_OK

    factors = parse_sweep(opts["sweep"])
    if mode == "opportunity" and factors and not factors[-1] < 1:
        raise UsageError("rho values must be < 1")
    results = sweep(system, prices, mode, factors, opts["tol_alpha"], jobs=opts["jobs"],
                    alpha_max=opts["alpha_max"])
    if fmt == "csv":
        _write(out, f"{mode}_sweep.csv", export.sweep_table(results, mode))
        _write(out, f"{mode}_aggregates.csv", export.aggregate_table(results))
        _write(out, f"{mode}_notes.csv", export.notes_table(results))
    else:
        _write(out, f"{mode}_sweep.json", export.export_results(results, "json", mode))
    _write(out, f"{mode}_curve.svg", export.svg_curve(results, mode))
    sys.stdout.write(export.sweep_table(results, mode).decode())
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"error at {key}={export.fmt_factor(r.factor)}: {r.error}", file=sys.stderr)
    return EXIT_SOLVER if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            opts = resolve(args)
            if args.command == "validate":
                code = cmd_validate(opts)
            elif args.command == "base":
                code = cmd_base(opts)
            else:
                code = cmd_igdt(opts, args.command)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print("validation failed:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DispatchError, ValueError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
