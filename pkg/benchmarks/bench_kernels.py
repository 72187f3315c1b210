"""Compare the compiled and numpy kernel backends on the hot loops.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.  Prints a small
table of per-call timings and the speedup of the compiled backend.
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from hadronvqe.ansatz import build_hea
from hadronvqe.blfq import builtin_operator_4_1
from hadronvqe.circuit import _packed
from hadronvqe.kernels import get_backend


def cases():
    op = builtin_operator_4_1()
    xs, zs, nys, _ = _packed(op)
    rng = np.random.default_rng(0)
    for n, reps in ((2, 2), (4, 6), (8, 6)):
        c = build_hea(n, reps)
        angles = c.angles(rng.uniform(-np.pi, np.pi, c.n_parameters))
        yield f"HEA({n},{reps}) circuit, {len(c)} gates", "gates", (c, angles)
    state = np.random.default_rng(1).normal(size=16) + 0j
    state /= np.linalg.norm(state)
    yield f"4-qubit Pauli expectations, {len(xs)} strings", "paulis", (state, xs, zs, nys)


def time_case(backend, kind, payload, repeat):
    if kind == "gates":
        c, angles = payload

        def call():
            psi = np.zeros(1 << c.n_qubits, dtype=complex)
            psi[0] = 1
            backend.apply_gates(psi, c._kinds, c._targets, c._controls, angles)
    else:
        state, xs, zs, nys = payload

        def call():
            backend.pauli_expectations(state, xs, zs, nys)
    number = max(1, repeat)
    best = min(timeit.repeat(call, number=number, repeat=5)) / number
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = ap.parse_args(argv)
    py = get_backend("python")
    try:
        cy = get_backend("cython")
    except ImportError:
        cy = None
    rows = []
    for label, kind, payload in cases():
        t_py = time_case(py, kind, payload, args.repeat)
        t_cy = time_case(cy, kind, payload, args.repeat) if cy is not None else float("nan")
        rows.append({"case": label, "python_us": t_py * 1e6, "cython_us": t_cy * 1e6, "speedup": t_py / t_cy})
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if cy is None:
        print("compiled backend not built; showing numpy timings only")
    print(f"{'case':44s} {'numpy [us]':>12s} {'cython [us]':>12s} {'speedup':>8s}")
    for r in rows:
        print(f"{r['case']:44s} {r['python_us']:12.2f} {r['cython_us']:12.2f} {r['speedup']:8.1f}")


if __name__ == "__main__":
    main()
