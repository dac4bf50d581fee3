"""Gibbs kernel throughput: numba vs the interpreted fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time by PBIT_GRNG_DISABLE_NUMBA. Both start from the same state and
seed, so the final (readout, rng state) must match exactly.

    python benchmarks/bench_kernels.py [--n-bits 64] [--sweeps 20000]
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def run_one(n_bits, sweeps, order):
    from pbit_grng import kernels
    from pbit_grng._jit import backend_name
    from pbit_grng.coupling import GrngSpec, couplings_for
    from pbit_grng.rng import seed_state
    from pbit_grng.sampler import field_table

    spec = GrngSpec(n_bits, 0.5, 0.1)
    table = field_table(couplings_for(spec))
    g0, rng0 = np.uint64(0x5A5A5A5A5A5A5A5A & spec.g0), np.uint64(seed_state(7))
    with np.errstate(over="ignore"):
        kernels.gibbs_sweeps(g0, rng0, order, 1, *table)  # compile / warm up
        t0 = time.perf_counter()
        g, rng = kernels.gibbs_sweeps(g0, rng0, order, sweeps, *table)
        dt = time.perf_counter() - t0
    return {
        "backend": backend_name(),
        "order": order,
        "updates": sweeps * n_bits,
        "seconds": dt,
        "updates_per_s": sweeps * n_bits / dt,
        "final_g": int(g),
        "final_rng": int(rng),
    }


def spawn(backend, n_bits, sweeps, order):
    env = dict(os.environ)
    env["PBIT_GRNG_DISABLE_NUMBA"] = "1" if backend == "python" else "0"
    cmd = [sys.executable, __file__, "--worker", "--n-bits", str(n_bits),
           "--sweeps", str(sweeps), "--order", str(order)]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n-bits", type=int, default=64)
    ap.add_argument("--sweeps", type=int, default=20000, help="sweeps for the numba run")
    ap.add_argument("--python-sweeps", type=int, default=200)
    ap.add_argument("--order", type=int, default=1, help="0 sequential, 1 random scan")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        print(json.dumps(run_one(args.n_bits, args.sweeps, args.order)))
        return

    fast = spawn("numba", args.n_bits, args.sweeps, args.order)
    slow = spawn("python", args.n_bits, args.python_sweeps, args.order)
    check = spawn("numba", args.n_bits, args.python_sweeps, args.order)
    same = (check["final_g"], check["final_rng"]) == (slow["final_g"], slow["final_rng"])
    for r in (fast, slow):
        print(f"{r['backend']:>7}: {r['updates']:>10d} updates in {r['seconds']:.3f} s "
              f"-> {r['updates_per_s']:.3e} updates/s")
    print(f"speedup: {fast['updates_per_s'] / slow['updates_per_s']:.0f}x")
    print(f"bit-identical after {args.python_sweeps} sweeps: {same}")
    if not same:
        sys.exit(1)


if __name__ == "__main__":
    main()
