"""Deterministic serialization of dispatch and IGDT results (CSV, JSON, SVG)."""
from __future__ import annotations

import csv
import io
import json
import math
from typing import Optional, Sequence

import numpy as np

from .dispatch import DispatchSolution, SlpTrace
from .igdt import IgdtResult

SWEEP_HEADERS = {
    "robust": ("sigma", "alpha_hat", "B_c"),
    "opportunity": ("rho", "beta_hat", "B_w"),
}
AGGREGATE_HEADER = ("factor", "P_iz_MW", "P_g_MW", "S_k_1e6Sm3")


def fmt_factor(x: float) -> str:
    """At least one decimal: 0 -> '0.0', 0.25 -> '0.25'."""
    s = f"{x:.1f}"
    return s if float(s) == x else repr(float(x))


def _num(x: float, digits: int) -> str:
    return "nan" if x is None or not math.isfinite(x) else f"{x:.{digits}f}"


def _csv(rows, header) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _clean(obj):
    """JSON-safe copy: numpy to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> bytes:
    return (json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


# dispatch ------------------------------------------------------------------

def _columns(solution: DispatchSolution):
    s = solution.system
    return {
        "generation": [g.id for g in s.generators],
        "wind": [w.id for w in s.wind_units],
        "tie_flow": [z.id for z in s.tie_lines],
        "branch_flow": [b.id for b in s.branches],
        "angle": [b.id for b in s.buses],
        "external_angle": list(s.external_zones()),
        "supply": [k.id for k in s.suppliers],
        "gas_flow": [p.id for p in s.pipelines],
        "pressure": [n.id for n in s.gas_nodes],
    }


def dispatch_tables(solution: DispatchSolution) -> dict:
    """One wide CSV per hourly quantity: ``{name: bytes}`` with header ``hour,<ids>``."""
    out = {}
    for name, ids in _columns(solution).items():
        arr = np.asarray(getattr(solution, name))
        rows = [[t + 1] + [repr(float(v)) for v in arr[t]] for t in range(arr.shape[0])]
        out[name] = _csv(rows, ["hour"] + ids)
    return out


def dispatch_summary(solution: DispatchSolution) -> dict:
    return {
        "total_cost": solution.total_cost,
        "generation_cost": solution.generation_cost,
        "gas_cost": solution.gas_cost,
        "export_revenue": solution.export_revenue,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "max_weymouth_residual": solution.max_weymouth_residual,
        "prices": solution.prices,
        "totals": solution.totals(),
    }


def _dispatch_doc(solution: DispatchSolution) -> dict:
    doc = dispatch_summary(solution)
    doc["hourly"] = {name: {"ids": ids, "values": getattr(solution, name)}
                     for name, ids in _columns(solution).items()}
    return doc


def _dispatch_long_csv(solution: DispatchSolution) -> bytes:
    rows = []
    for name, ids in _columns(solution).items():
        arr = np.asarray(getattr(solution, name))
        for t in range(arr.shape[0]):
            rows.extend([t + 1, name, ident, repr(float(arr[t, j]))] for j, ident in enumerate(ids))
    return _csv(rows, ("hour", "quantity", "entity", "value"))


def trace_csv(trace: SlpTrace) -> bytes:
    rows = [[k + 1, repr(float(o)), repr(float(r)), repr(float(d)), int(a)]
            for k, (o, r, d, a) in enumerate(zip(trace.objective, trace.max_residual,
                                                  trace.radius, trace.accepted))]
    return _csv(rows, ("iteration", "objective", "max_residual", "radius", "accepted"))


# IGDT ----------------------------------------------------------------------

def result_record(result: IgdtResult) -> dict:
    t = result.target
    return {
        "mode": t.mode,
        "deviation_factor": t.deviation_factor,
        "base_cost": t.base_cost,
        "cost_target": t.cost_target,
        "horizon_opt": result.horizon_opt,
        "certificate_cost": result.certificate_cost,
        "saturated": result.saturated,
        "unreachable": result.unreachable,
        "violated_at_zero": result.violated_at_zero,
        "monotone": result.monotone,
        "error": result.error,
        "aggregates": result.aggregates(),
        "bisection": [{"lo": lo, "hi": hi, "alpha": a, "cost": c} for lo, hi, a, c in result.trace],
    }


def sweep_table(results: Sequence[IgdtResult], mode: str) -> bytes:
    rows = [[fmt_factor(r.factor), _num(r.horizon_opt, 3), _num(r.target.cost_target, 2)] for r in results]
    return _csv(rows, SWEEP_HEADERS[mode])


def aggregate_table(results: Sequence[IgdtResult]) -> bytes:
    rows = []
    for r in results:
        agg = r.aggregates()
        rows.append([fmt_factor(r.factor), _num(agg["P_iz_MW"], 3), _num(agg["P_g_MW"], 3),
                     _num(agg["S_k_1e6Sm3"], 6)])
    return _csv(rows, AGGREGATE_HEADER)


def notes_table(results: Sequence[IgdtResult]) -> bytes:
    def status(r):
        if r.error:
            return "error", r.error
        for flag in ("saturated", "unreachable", "violated_at_zero"):
            if getattr(r, flag):
                return flag, ""
        return "ok", "" if r.monotone else "value function not monotone on bisection trace"
    return _csv([[fmt_factor(r.factor), *status(r)] for r in results], ("factor", "status", "detail"))


def svg_curve(results: Sequence[IgdtResult], mode: str, width: int = 480, height: int = 320) -> bytes:
    """Polyline of optimum horizon versus cost deviation factor."""
    pts = [(r.factor, r.horizon_opt) for r in results if math.isfinite(r.horizon_opt)]
    ml, mr, mt, mb = 60, 20, 20, 50
    xs = [p[0] for p in pts] or [0.0]
    ys = [p[1] for p in pts] or [0.0]
    x_hi = max(xs) if max(xs) > 0 else 1.0
    y_hi = max(ys) if max(ys) > 0 else 1.0
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + pw * x / x_hi

    def sy(y):
        return mt + ph * (1.0 - y / y_hi)

    name = "robustness" if mode == "robust" else "opportunity"
    poly = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<title>optimum {name} horizon versus cost deviation factor</title>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
        f'<text x="{ml + pw / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">cost deviation factor</text>',
        f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {mt + ph / 2:.1f})">optimum horizon</text>',
        f'<text x="{ml}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">0</text>',
        f'<text x="{ml + pw}" y="{mt + ph + 16}" text-anchor="middle" font-size="10">{x_hi:.2f}</text>',
        f'<text x="{ml - 6}" y="{mt + 4}" text-anchor="end" font-size="10">{y_hi:.3f}</text>',
    ]
    if pts:
        lines.append(f'<polyline fill="none" stroke="steelblue" stroke-width="2" points="{poly}"/>')
        lines.extend(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="steelblue"/>' for x, y in pts)
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode()


def export_results(result, format: str = "csv", mode: Optional[str] = None) -> bytes:
    """Serialize a DispatchSolution, an IgdtResult, or a sweep (list of IgdtResult).

    CSV: a dispatch becomes a long ``hour,quantity,entity,value`` table; an
    IGDT result or sweep becomes the ``sigma,alpha_hat,B_c`` (robust) or
    ``rho,beta_hat,B_w`` (opportunity) table. ``mode`` names the header for
    an empty sweep. Output is byte-identical for identical inputs.
    """
    if format not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json' (got {format!r})")
    if isinstance(result, DispatchSolution):
        return _dispatch_long_csv(result) if format == "csv" else to_json(_dispatch_doc(result))
    results = [result] if isinstance(result, IgdtResult) else list(result)
    mode = results[0].target.mode if results else (mode or "robust")
    if format == "csv":
        return sweep_table(results, mode)
    if isinstance(result, IgdtResult):
        return to_json(result_record(result))
    return to_json([result_record(r) for r in results])
