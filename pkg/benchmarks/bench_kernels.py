"""Time the hot kernels with numba enabled and disabled.

Each configuration runs in its own interpreter because the backend is chosen
at import time from COLORSDP_DISABLE_NUMBA.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from colorsdp import _accel
from colorsdp.graph import oracle_3color, random_graph, petersen
from colorsdp.encoder import build_primal
from colorsdp.solver import canonicalize, solve, SolverOptions
from colorsdp.kernels import schur_hkm, copositive_search

repeat = int(sys.argv[1])

def best(fn):
    fn()  # warm-up (pays JIT compilation)
    times = []
    for _ in range(repeat):
        t = time.perf_counter(); fn(); times.append(time.perf_counter() - t)
    return min(times)

g20 = random_graph(20, 0.25, 3)
g12 = random_graph(12, 0.35, 2)
blmi = canonicalize(build_primal(g12))
blk = blmi.blocks[0]
rng = np.random.default_rng(0)
R = rng.normal(size=(blk.side, blk.side))
Z = R @ R.T + np.eye(blk.side)
Sinv = np.linalg.inv(Z + np.eye(blk.side))
# Horn matrix: copositive, neither PSD nor nonnegative, so the search runs deep
A = np.array([[1, -1, 1, 1, -1], [-1, 1, -1, 1, 1], [1, -1, 1, -1, 1],
              [1, 1, -1, 1, -1], [-1, 1, 1, -1, 1]], dtype=float)

out = {
    "numba": _accel.USE_NUMBA,
    "oracle_petersen": best(lambda: oracle_3color(petersen())),
    "oracle_random20": best(lambda: oracle_3color(g20)),
    "schur_n12": best(lambda: schur_hkm(blk.ptr, blk.rows, blk.cols, blk.vals, Z, Sinv)),
    "copositive_horn_depth10": best(lambda: copositive_search(A, 10)),
    "solve_n12": best(lambda: solve(blmi, SolverOptions())),
}
print(json.dumps(out))
"""


def run(disable: bool, repeat: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["COLORSDP_DISABLE_NUMBA"] = "1"
    else:
        env.pop("COLORSDP_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'kernel':26s} {'numba [s]':>12s} {'fallback [s]':>13s} {'speed-up':>9s}")
    for key in fast:
        if key == "numba":
            continue
        print(f"{key:26s} {fast[key]:12.5f} {slow[key]:13.5f} {slow[key] / fast[key]:9.1f}")


if __name__ == "__main__":
    main()
