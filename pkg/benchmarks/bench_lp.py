"""Compare the compiled and pure-Python simplex kernels.

Usage: python benchmarks/bench_lp.py [--repeat N] [--size N]

Workloads: random dense bounded LPs, and the first SLP subproblem of the
bundled tiny3 system replicated over a longer horizon. Both backends must
reach the same objective; the script reports the best of N timings.
"""
import argparse
import time

import numpy as np

from coupled_igdt import data_path, load_system
from coupled_igdt.dispatch import build_lp, squared_pressure_bounds
from coupled_igdt.lp import LpProblem, available_backends, solve_lp
from coupled_igdt.model import system_from_dict, system_to_dict


def random_problems(n, count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        m = n * 2 // 3
        a = rng.normal(size=(m, n))
        x0 = rng.uniform(0, 1, n)
        rhs = a @ x0 + rng.uniform(0, 1, m)
        out.append(LpProblem.from_dense(rng.normal(size=n), a, ["<="] * m, rhs, np.zeros(n), np.full(n, 2.0)))
    return out


def dispatch_problem(hours):
    doc = system_to_dict(load_system(data_path("tiny3.json")))
    reps = -(-hours // doc["horizon"])
    doc["horizon"] = hours
    for w in doc["wind_units"]:
        w["p_max_profile"] = (w["p_max_profile"] * reps)[:hours]
    for key in ("electric_loads", "gas_loads"):
        doc[key] = {k: (v * reps)[:hours] for k, v in doc[key].items()}
    system = system_from_dict(doc)
    lo, hi = squared_pressure_bounds(system)
    prices = np.resize([22.0, 26.0, 30.0, 24.0], hours)
    lp, _ = build_lp(system, prices, np.tile(0.5 * (lo + hi), (hours, 1)), 0.25 * (hi - lo))
    return lp


def bench(problems, backend, repeat):
    best, objs = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        sols = [solve_lp(p, backend=backend) for p in problems]
        best = min(best, time.perf_counter() - t0)
        objs = [s.objective for s in sols]
    return best, objs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--size", type=int, default=60, help="variables per random LP")
    args = ap.parse_args()
    backends = available_backends()
    workloads = {
        f"random {args.size}x{args.size * 2 // 3} (x20)": random_problems(args.size, 20),
        "tiny3 SLP subproblem, 24 h": [dispatch_problem(24)],
        "tiny3 SLP subproblem, 96 h": [dispatch_problem(96)],
    }
    print(f"backends: {', '.join(backends)}")
    for name, problems in workloads.items():
        times, ref = {}, None
        for b in backends:
            times[b], objs = bench(problems, b, args.repeat)
            if ref is None:
                ref = objs
            elif not np.allclose(objs, ref, rtol=1e-9, atol=1e-7):
                raise SystemExit(f"{name}: backends disagree")
        line = "  ".join(f"{b} {t * 1e3:9.1f} ms" for b, t in times.items())
        if len(times) == 2:
            line += f"  speedup x{times['python'] / times['cython']:.1f}"
        print(f"{name:32s} {line}")


if __name__ == "__main__":
    main()
