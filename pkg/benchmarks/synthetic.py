"""Seeded synthetic coupled systems for scaling benchmarks.

``make_system(buses, gas_nodes, hours)`` builds a meshed electric network
(ring plus chords), a gas network (tree plus a few loops, some compressor
arcs) and load/wind profiles with a daily shape. Sizes default to roughly
a 24-bus / 20-node day-ahead study.
"""
import math

import numpy as np

from coupled_igdt.model import system_from_dict, validate_system


def make_system(buses=24, gas_nodes=20, hours=24, seed=0):
    rng = np.random.default_rng(seed)
    shape = [0.75 + 0.25 * math.sin(math.pi * (t % 24 - 6) / 12) for t in range(hours)]
    bus_ids = [str(i + 1) for i in range(buses)]
    branches = []
    for i in range(buses):
        branches.append((bus_ids[i], bus_ids[(i + 1) % buses]))
    for _ in range(buses // 2):
        a, b = rng.choice(buses, 2, replace=False)
        branches.append((bus_ids[a], bus_ids[b]))
    node_ids = [f"N{i + 1}" for i in range(gas_nodes)]
    pipes = [(node_ids[int(rng.integers(0, i))], node_ids[i]) for i in range(1, gas_nodes)]
    for _ in range(max(1, gas_nodes // 5)):
        a, b = sorted(rng.choice(gas_nodes, 2, replace=False))
        pipes.append((node_ids[a], node_ids[b]))

    n_gen = int(1.3 * buses)
    gens = []
    for g in range(n_gen):
        pmax = float(rng.choice([50, 100, 150, 200]))
        gas = g % 3 == 0
        gens.append({
            "id": f"G{g + 1}", "bus": bus_ids[g % buses], "cost_coeff": float(rng.uniform(8, 40)),
            "p_min": 0.2 * pmax, "p_max": pmax, "ramp_up": 0.4 * pmax, "ramp_down": 0.4 * pmax,
            "initial_output": 0.5 * pmax,
            "gas_link": {"node": node_ids[g % gas_nodes], "conversion": 0.25} if gas else None,
        })
    cap = sum(g["p_max"] for g in gens)
    peak_load = 0.55 * cap
    weights = rng.uniform(0.5, 1.5, buses)
    weights /= weights.sum()
    gas_w = rng.uniform(0.5, 1.5, gas_nodes)
    gas_w /= gas_w.sum()
    doc = {
        "base_mva": 100.0,
        "horizon": hours,
        "buses": [{"id": b, "is_reference": k == 0} for k, b in enumerate(bus_ids)],
        "branches": [{"id": f"L{k + 1}", "from_bus": a, "to_bus": b, "reactance": float(rng.uniform(0.05, 0.2)),
                      "flow_limit": 400.0} for k, (a, b) in enumerate(branches)],
        "tie_lines": [{"id": f"T{k + 1}", "from_bus": bus_ids[(k * buses) // 3], "external_zone": f"Z{k % 2 + 2}",
                       "reactance": 0.03, "export_limit": 300.0} for k in range(3)],
        "generators": gens,
        "wind_units": [{"id": f"W{k + 1}", "bus": bus_ids[(5 * k + 3) % buses], "p_min": 0.0,
                        "p_max_profile": [float(80 * rng.uniform(0.2, 1.0)) for _ in range(hours)]} for k in range(2)],
        "gas_nodes": [{"id": n, "pressure_min": 35.0, "pressure_max": 70.0} for n in node_ids],
        "pipelines": [{"id": f"P{k + 1}", "from_node": a, "to_node": b, "weymouth_const": float(rng.uniform(8, 15)),
                       "has_compressor": k % 6 == 5} for k, (a, b) in enumerate(pipes)],
        "suppliers": [{"id": f"S{k + 1}", "node": node_ids[(k * gas_nodes) // 4], "cost_coeff": float(rng.uniform(2, 5)),
                       "s_min": 0.0, "s_max": 2000.0} for k in range(4)],
        "electric_loads": {b: [round(peak_load * weights[k] * s, 3) for s in shape] for k, b in enumerate(bus_ids)},
        "gas_loads": {n: [round(300.0 * gas_w[k] * s, 3) for s in shape] for k, n in enumerate(node_ids)},
    }
    return validate_system(system_from_dict(doc))


def make_prices(hours, seed=0):
    rng = np.random.default_rng(seed + 1)
    return np.array([30 + 12 * math.sin(math.pi * (t % 24 - 8) / 12) + rng.uniform(-2, 2) for t in range(hours)])
