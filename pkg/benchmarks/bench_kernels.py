"""Compiled vs numpy kernel timings.

    python benchmarks/bench_kernels.py [--triodes 3 4 5 6 7] [--repeat 5] [--json out.json]

Times generator application, one propagation step and one short projected
trajectory per backend, and checks that both backends agree.
"""
from __future__ import annotations

import argparse
import json
import sys
import timeit

import numpy as np

from qusa import kernels
from qusa.dynamics import ScheduleParams, run_projected
from qusa.hamiltonian import (
    FieldSample,
    HamiltonianParams,
    NoiseParams,
    comparison_coupling,
    effective_generator,
    wire_hamiltonian,
)
from qusa.network import Axis, QubitRef, TriodeNetwork, Wire


def chain_network(T: int) -> TriodeNetwork:
    wires = [Wire(QubitRef(t, a), QubitRef(t + 1, a)) for t in range(T - 1) for a in Axis]
    return TriodeNetwork(T, tuple(wires))


def best_of(fn, repeat: int) -> float:
    number = 1
    while True:
        t = min(timeit.repeat(fn, number=number, repeat=1))
        if t > 0.05 or number >= 1 << 16:
            break
        number *= 4
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def bench(T: int, repeat: int, backends: list[str]) -> dict:
    rng = np.random.default_rng(T)
    net = chain_network(T)
    p = HamiltonianParams()
    gen = effective_generator(
        wire_hamiltonian(net, p), comparison_coupling(FieldSample(0.05 * rng.standard_normal((T, 2, 3))), p.g), p
    )
    psi = rng.standard_normal(gen.dim) + 1j * rng.standard_normal(gen.dim)
    sched = ScheduleParams(dt=0.25, projection_interval=2.0, total_time=4.0)
    row = {"T": T, "dim": gen.dim}
    outs = {}
    for name in backends:
        kernels.use_backend(name)
        outs[name] = gen.propagate(psi, 0.25)
        row[f"apply_{name}"] = best_of(lambda: gen.apply(psi), repeat)
        row[f"propagate_{name}"] = best_of(lambda: gen.propagate(psi, 0.25), repeat)
        row[f"trajectory_{name}"] = best_of(lambda: run_projected(net, p, NoiseParams(), sched, seed=0), max(1, repeat // 2))
    if len(outs) == 2:
        row["max_abs_diff"] = float(np.abs(outs["python"] - outs["compiled"]).max())
    return row


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--triodes", type=int, nargs="+", default=[3, 4, 5, 6, 7])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows to this file")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; timing the numpy backend only", file=sys.stderr)
    prev = kernels.backend_name()
    try:
        rows = [bench(T, args.repeat, backends) for T in args.triodes]
    finally:
        kernels.use_backend(prev)

    head = f"{'T':>2} {'dim':>6}"
    for what in ("apply", "propagate", "trajectory"):
        head += "".join(f" {what[:4] + '/' + b[:2]:>12}" for b in backends)
        if len(backends) == 2:
            head += f" {'speedup':>8}"
    print(head)
    for r in rows:
        line = f"{r['T']:>2} {r['dim']:>6}"
        for what in ("apply", "propagate", "trajectory"):
            line += "".join(f" {r[f'{what}_{b}'] * 1e3:>10.3f}ms" for b in backends)
            if len(backends) == 2:
                line += f" {r[f'{what}_python'] / r[f'{what}_compiled']:>7.1f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
