"""Domain types for the coupled electricity / gas system, file loading and validation.

Units are fixed throughout the package: MW for power, rad for angles,
per-unit reactance on ``base_mva``, bar for pressure, kSm3/h for gas
flows, supplies and loads, currency/MWh and currency/kSm3 for costs.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


class ModelError(ValueError):
    """Base class for input problems."""


class ParseError(ModelError):
    """The file could not be read or does not follow the schema."""


class ValidationError(ModelError):
    """The file parsed but violates one or more invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class SystemWarning(UserWarning):
    """Non-fatal structural issue (disconnected network, no tie lines, ...)."""


@dataclass(frozen=True)
class Bus:
    id: str
    is_reference: bool = False


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: str
    to_bus: str
    reactance: float
    flow_limit: float


@dataclass(frozen=True)
class TieLine:
    id: str
    from_bus: str
    external_zone: str
    reactance: float
    export_limit: float


@dataclass(frozen=True)
class GasLink:
    node: str
    conversion: float  # kSm3/h per MW


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    cost_coeff: float
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    initial_output: Optional[float] = None
    gas_link: Optional[GasLink] = None

    @property
    def gas_fired(self) -> bool:
        return self.gas_link is not None


@dataclass(frozen=True)
class WindUnit:
    id: str
    bus: str
    p_min: float
    p_max_profile: tuple


@dataclass(frozen=True)
class GasNode:
    id: str
    pressure_min: float
    pressure_max: float


@dataclass(frozen=True)
class Pipeline:
    id: str
    from_node: str
    to_node: str
    weymouth_const: float
    has_compressor: bool = False


@dataclass(frozen=True)
class GasSupplier:
    id: str
    node: str
    cost_coeff: float
    s_min: float
    s_max: float


@dataclass(frozen=True)
class LoadProfiles:
    electric: dict = field(default_factory=dict)
    gas: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CoupledSystem:
    horizon: int
    buses: tuple
    branches: tuple
    tie_lines: tuple
    generators: tuple
    wind_units: tuple
    gas_nodes: tuple
    pipelines: tuple
    suppliers: tuple
    loads: LoadProfiles
    base_mva: float = 100.0

    @property
    def reference_bus(self) -> str:
        return next(b.id for b in self.buses if b.is_reference)

    def bus_index(self) -> dict:
        return {b.id: i for i, b in enumerate(self.buses)}

    def node_index(self) -> dict:
        return {n.id: i for i, n in enumerate(self.gas_nodes)}

    def electric_load_matrix(self) -> np.ndarray:
        """(T, n_buses) array of LE_it."""
        out = np.zeros((self.horizon, len(self.buses)))
        for i, b in enumerate(self.buses):
            if b.id in self.loads.electric:
                out[:, i] = self.loads.electric[b.id]
        return out

    def gas_load_matrix(self) -> np.ndarray:
        """(T, n_nodes) array of LG_mt."""
        out = np.zeros((self.horizon, len(self.gas_nodes)))
        for m, n in enumerate(self.gas_nodes):
            if n.id in self.loads.gas:
                out[:, m] = self.loads.gas[n.id]
        return out

    def wind_profile_matrix(self) -> np.ndarray:
        """(T, n_wind) array of hourly wind upper limits."""
        out = np.zeros((self.horizon, len(self.wind_units)))
        for w, unit in enumerate(self.wind_units):
            out[:, w] = unit.p_max_profile
        return out

    def external_zones(self) -> tuple:
        seen = []
        for tl in self.tie_lines:
            if tl.external_zone not in seen:
                seen.append(tl.external_zone)
        return tuple(seen)


@dataclass(frozen=True)
class PriceForecast:
    lambda_tilde: tuple

    @property
    def horizon(self) -> int:
        return len(self.lambda_tilde)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.lambda_tilde, dtype=float)


# --------------------------------------------------------------------------
# parsing

_TOP_KEYS = ("base_mva", "horizon", "buses", "branches", "tie_lines", "generators",
             "wind_units", "gas_nodes", "pipelines", "suppliers", "electric_loads", "gas_loads")


def _num(obj, key, where, default=None):
    if key not in obj:
        if default is not None:
            return default
        raise ParseError(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}: field {key!r} must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ParseError(f"{where}: field {key!r} must be finite")
    return v


def _ident(obj, key, where):
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (str, int)):
        raise ParseError(f"{where}: field {key!r} must be a string or integer id")
    return str(v)


def _profile(v, where):
    if not isinstance(v, list):
        raise ParseError(f"{where}: expected a list of numbers")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ParseError(f"{where}: non-numeric entry {x!r}")
        out.append(float(x))
    return tuple(out)


def _records(doc, key):
    v = doc[key]
    if not isinstance(v, list) or not all(isinstance(r, dict) for r in v):
        raise ParseError(f"{key!r} must be a list of objects")
    return v


def system_from_dict(doc: dict) -> CoupledSystem:
    """Build (without validating) a :class:`CoupledSystem` from parsed JSON."""
    if not isinstance(doc, dict):
        raise ParseError("system file must contain a JSON object")
    missing = [k for k in _TOP_KEYS if k not in doc]
    if missing:
        raise ParseError(f"missing top-level keys: {', '.join(missing)}")
    horizon = doc["horizon"]
    if isinstance(horizon, bool) or not isinstance(horizon, int):
        raise ParseError("'horizon' must be an integer")
    base = _num(doc, "base_mva", "system")

    buses = tuple(Bus(_ident(r, "id", f"bus #{k}"), bool(r.get("is_reference", False)))
                  for k, r in enumerate(_records(doc, "buses")))
    branches = []
    for k, r in enumerate(_records(doc, "branches")):
        w = f"branch #{k}"
        fb, tb = _ident(r, "from_bus", w), _ident(r, "to_bus", w)
        bid = str(r["id"]) if "id" in r else f"{fb}-{tb}"
        branches.append(Branch(bid, fb, tb, _num(r, "reactance", w), _num(r, "flow_limit", w)))
    ties = []
    for k, r in enumerate(_records(doc, "tie_lines")):
        w = f"tie line #{k}"
        fb, z = _ident(r, "from_bus", w), _ident(r, "external_zone", w)
        tid = str(r["id"]) if "id" in r else f"{fb}-{z}"
        ties.append(TieLine(tid, fb, z, _num(r, "reactance", w), _num(r, "export_limit", w)))
    gens = []
    for k, r in enumerate(_records(doc, "generators")):
        w = f"generator #{k}"
        link = r.get("gas_link")
        if link is not None:
            if not isinstance(link, dict):
                raise ParseError(f"{w}: gas_link must be an object or null")
            link = GasLink(_ident(link, "node", w + " gas_link"), _num(link, "conversion", w + " gas_link"))
        init = r.get("initial_output")
        if init is not None:
            init = _num(r, "initial_output", w)
        gens.append(Generator(_ident(r, "id", w), _ident(r, "bus", w), _num(r, "cost_coeff", w),
                              _num(r, "p_min", w), _num(r, "p_max", w), _num(r, "ramp_up", w),
                              _num(r, "ramp_down", w), init, link))
    winds = []
    for k, r in enumerate(_records(doc, "wind_units")):
        w = f"wind unit #{k}"
        if "p_max_profile" not in r:
            raise ParseError(f"{w}: missing field 'p_max_profile'")
        winds.append(WindUnit(_ident(r, "id", w), _ident(r, "bus", w), _num(r, "p_min", w, 0.0),
                              _profile(r["p_max_profile"], w)))
    nodes = tuple(GasNode(_ident(r, "id", f"gas node #{k}"), _num(r, "pressure_min", f"gas node #{k}"),
                          _num(r, "pressure_max", f"gas node #{k}"))
                  for k, r in enumerate(_records(doc, "gas_nodes")))
    pipes = []
    for k, r in enumerate(_records(doc, "pipelines")):
        w = f"pipeline #{k}"
        fn, tn = _ident(r, "from_node", w), _ident(r, "to_node", w)
        pid = str(r["id"]) if "id" in r else f"{fn}-{tn}"
        pipes.append(Pipeline(pid, fn, tn, _num(r, "weymouth_const", w), bool(r.get("has_compressor", False))))
    sups = tuple(GasSupplier(_ident(r, "id", f"supplier #{k}"), _ident(r, "node", f"supplier #{k}"),
                             _num(r, "cost_coeff", f"supplier #{k}"), _num(r, "s_min", f"supplier #{k}"),
                             _num(r, "s_max", f"supplier #{k}"))
                 for k, r in enumerate(_records(doc, "suppliers")))
    loads = {}
    for key in ("electric_loads", "gas_loads"):
        v = doc[key]
        if not isinstance(v, dict):
            raise ParseError(f"{key!r} must map ids to hourly lists")
        loads[key] = {str(k): _profile(p, f"{key}[{k}]") for k, p in v.items()}
    return CoupledSystem(horizon, buses, tuple(branches), tuple(ties), tuple(gens), tuple(winds),
                         nodes, tuple(pipes), sups,
                         LoadProfiles(loads["electric_loads"], loads["gas_loads"]), base)


def system_to_dict(system: CoupledSystem) -> dict:
    """Inverse of :func:`system_from_dict` (ids come back as strings)."""
    def gen(g):
        return {"id": g.id, "bus": g.bus, "cost_coeff": g.cost_coeff, "p_min": g.p_min,
                "p_max": g.p_max, "ramp_up": g.ramp_up, "ramp_down": g.ramp_down,
                "initial_output": g.initial_output,
                "gas_link": None if g.gas_link is None else
                {"node": g.gas_link.node, "conversion": g.gas_link.conversion}}

    return {
        "base_mva": system.base_mva,
        "horizon": system.horizon,
        "buses": [{"id": b.id, "is_reference": b.is_reference} for b in system.buses],
        "branches": [{"id": b.id, "from_bus": b.from_bus, "to_bus": b.to_bus,
                      "reactance": b.reactance, "flow_limit": b.flow_limit} for b in system.branches],
        "tie_lines": [{"id": t.id, "from_bus": t.from_bus, "external_zone": t.external_zone,
                       "reactance": t.reactance, "export_limit": t.export_limit} for t in system.tie_lines],
        "generators": [gen(g) for g in system.generators],
        "wind_units": [{"id": w.id, "bus": w.bus, "p_min": w.p_min,
                        "p_max_profile": list(w.p_max_profile)} for w in system.wind_units],
        "gas_nodes": [{"id": n.id, "pressure_min": n.pressure_min, "pressure_max": n.pressure_max}
                      for n in system.gas_nodes],
        "pipelines": [{"id": p.id, "from_node": p.from_node, "to_node": p.to_node,
                       "weymouth_const": p.weymouth_const, "has_compressor": p.has_compressor}
                      for p in system.pipelines],
        "suppliers": [{"id": s.id, "node": s.node, "cost_coeff": s.cost_coeff, "s_min": s.s_min,
                       "s_max": s.s_max} for s in system.suppliers],
        "electric_loads": {k: list(v) for k, v in system.loads.electric.items()},
        "gas_loads": {k: list(v) for k, v in system.loads.gas.items()},
    }


def dump_system(system: CoupledSystem) -> str:
    return json.dumps(system_to_dict(system), indent=2) + "\n"


# --------------------------------------------------------------------------
# validation

def _duplicates(ids):
    seen, dup = set(), []
    for i in ids:
        if i in seen and i not in dup:
            dup.append(i)
        seen.add(i)
    return dup


def _connected(nodes, edges) -> bool:
    if not nodes:
        return True
    adj = defaultdict(list)
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    start = nodes[0]
    seen = {start}
    todo = deque([start])
    while todo:
        for nb in adj[todo.popleft()]:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return len(seen) == len(set(nodes))


def validate_system(system: CoupledSystem) -> CoupledSystem:
    """Check every invariant; raise :class:`ValidationError` listing all violations.

    Returns the system, with a reference bus chosen (lowest id, with a
    warning) when the file marks none.
    """
    v = []
    T = system.horizon
    if T < 1:
        v.append(f"horizon must be >= 1 (got {T})")
    if system.base_mva <= 0:
        v.append(f"base_mva must be > 0 (got {system.base_mva})")
    for label, items in (("bus", system.buses), ("branch", system.branches),
                         ("tie line", system.tie_lines), ("generator", system.generators),
                         ("wind unit", system.wind_units), ("gas node", system.gas_nodes),
                         ("pipeline", system.pipelines), ("supplier", system.suppliers)):
        for d in _duplicates([x.id for x in items]):
            v.append(f"{label} {d}: duplicate id")
    bus_ids = {b.id for b in system.buses}
    node_ids = {n.id for n in system.gas_nodes}
    if not system.buses:
        v.append("system has no buses")
    refs = [b.id for b in system.buses if b.is_reference]
    if len(refs) > 1:
        v.append(f"more than one reference bus: {', '.join(refs)}")

    for br in system.branches:
        if not br.reactance > 0:
            v.append(f"branch {br.id}: reactance must be > 0 (got {br.reactance})")
        if br.flow_limit < 0:
            v.append(f"branch {br.id}: flow_limit must be >= 0 (got {br.flow_limit})")
        if br.from_bus == br.to_bus:
            v.append(f"branch {br.id}: from_bus equals to_bus ({br.from_bus})")
        for end in (br.from_bus, br.to_bus):
            if end not in bus_ids:
                v.append(f"branch {br.id}: unknown bus {end}")
    for tl in system.tie_lines:
        if not tl.reactance > 0:
            v.append(f"tie line {tl.id}: reactance must be > 0 (got {tl.reactance})")
        if tl.export_limit < 0:
            v.append(f"tie line {tl.id}: export_limit must be >= 0 (got {tl.export_limit})")
        if tl.from_bus not in bus_ids:
            v.append(f"tie line {tl.id}: unknown bus {tl.from_bus}")
        if tl.external_zone in bus_ids:
            v.append(f"tie line {tl.id}: external zone {tl.external_zone} collides with a zone-one bus id")
    for g in system.generators:
        if g.bus not in bus_ids:
            v.append(f"generator {g.id}: unknown bus {g.bus}")
        if not 0 <= g.p_min <= g.p_max:
            v.append(f"generator {g.id}: need 0 <= p_min <= p_max (got {g.p_min}, {g.p_max})")
        if g.ramp_up < 0 or g.ramp_down < 0:
            v.append(f"generator {g.id}: ramp limits must be >= 0")
        if g.initial_output is not None and g.initial_output < 0:
            v.append(f"generator {g.id}: initial_output must be >= 0")
        if g.gas_link is not None:
            if g.gas_link.conversion < 0:
                v.append(f"generator {g.id}: gas conversion h_g must be >= 0")
            if g.gas_link.node not in node_ids:
                v.append(f"generator {g.id}: gas_link node {g.gas_link.node} does not exist")
    for w in system.wind_units:
        if w.bus not in bus_ids:
            v.append(f"wind unit {w.id}: unknown bus {w.bus}")
        if len(w.p_max_profile) != T:
            v.append(f"wind unit {w.id}: profile length {len(w.p_max_profile)} != horizon {T}")
        if w.p_min < 0 or any(w.p_min > p for p in w.p_max_profile):
            v.append(f"wind unit {w.id}: need 0 <= p_min <= p_max_profile[t] for all t")
    for n in system.gas_nodes:
        if not 0 < n.pressure_min <= n.pressure_max:
            v.append(f"gas node {n.id}: need 0 < pressure_min <= pressure_max "
                     f"(got {n.pressure_min}, {n.pressure_max})")
    for p in system.pipelines:
        if not p.weymouth_const > 0:
            v.append(f"pipeline {p.id}: weymouth_const must be > 0 (got {p.weymouth_const})")
        if p.from_node == p.to_node:
            v.append(f"pipeline {p.id}: from_node equals to_node ({p.from_node})")
        for end in (p.from_node, p.to_node):
            if end not in node_ids:
                v.append(f"pipeline {p.id}: unknown gas node {end}")
    for s in system.suppliers:
        if s.node not in node_ids:
            v.append(f"supplier {s.id}: unknown gas node {s.node}")
        if not 0 <= s.s_min <= s.s_max:
            v.append(f"supplier {s.id}: need 0 <= s_min <= s_max (got {s.s_min}, {s.s_max})")
    for key, ids, prof, label in (("electric", bus_ids, system.loads.electric, "bus"),
                                  ("gas", node_ids, system.loads.gas, "gas node")):
        for k, p in prof.items():
            if k not in ids:
                v.append(f"{key} load: unknown {label} {k}")
            if len(p) != T:
                v.append(f"{key} load at {label} {k}: length {len(p)} != horizon {T}")
            if any(x < 0 for x in p):
                v.append(f"{key} load at {label} {k}: negative value")
    if v:
        raise ValidationError(v)

    if not refs:
        lowest = min(system.buses, key=lambda b: _id_key(b.id)).id
        warnings.warn(f"no reference bus marked; using lowest id bus {lowest}", SystemWarning, stacklevel=2)
        buses = tuple(Bus(b.id, b.id == lowest) for b in system.buses)
        system = CoupledSystem(system.horizon, buses, system.branches, system.tie_lines,
                               system.generators, system.wind_units, system.gas_nodes,
                               system.pipelines, system.suppliers, system.loads, system.base_mva)
    if not _connected([b.id for b in system.buses], [(b.from_bus, b.to_bus) for b in system.branches]):
        warnings.warn("electric network is not connected", SystemWarning, stacklevel=2)
    if not _connected([n.id for n in system.gas_nodes], [(p.from_node, p.to_node) for p in system.pipelines]):
        warnings.warn("gas network is not connected", SystemWarning, stacklevel=2)
    if not system.tie_lines:
        warnings.warn("system has no tie lines; the export revenue term is empty", SystemWarning, stacklevel=2)
    return system


def _id_key(s: str):
    return (0, int(s), "") if s.lstrip("-").isdigit() else (1, 0, s)


def load_system(path) -> CoupledSystem:
    """Read and validate a system JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return validate_system(system_from_dict(doc))


def parse_prices(text: str, horizon: int) -> PriceForecast:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("price file is empty")
    header = [c.strip() for c in rows[0]]
    if header != ["hour", "lambda_tilde"]:
        raise ParseError(f"price file header must be 'hour,lambda_tilde' (got {','.join(header)!r})")
    body = rows[1:]
    if len(body) != horizon:
        raise ValidationError([f"price file has {len(body)} rows, horizon is {horizon}"])
    values = []
    for k, r in enumerate(body, start=1):
        if len(r) != 2:
            raise ParseError(f"price row {k}: expected 2 columns")
        try:
            val = float(r[1])
        except ValueError:
            raise ParseError(f"price row {k}: {r[1]!r} is not a number") from None
        if not math.isfinite(val):
            raise ParseError(f"price row {k}: non-finite price")
        values.append(val)
    neg = [k for k, x in enumerate(values, start=1) if x < 0]
    if neg:
        raise ValidationError([f"price row {k}: negative price {values[k - 1]}" for k in neg])
    return PriceForecast(tuple(values))


def load_prices(path, horizon: int) -> PriceForecast:
    """Read a ``hour,lambda_tilde`` CSV with exactly ``horizon`` rows."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_prices(text, horizon)


def dump_prices(forecast: PriceForecast) -> str:
    lines = ["hour,lambda_tilde"]
    lines += [f"{t},{v!r}" for t, v in enumerate(forecast.lambda_tilde, start=1)]
    return "\n".join(lines) + "\n"
