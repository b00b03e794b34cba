"""Compare the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time by ``OSCAVG_DISABLE_NUMBA``. Compilation is excluded by a warm-up
call before timing.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from oscavg._jit import USING_NUMBA
from oscavg.series import _kernels
from oscavg import compute_normal_form, make_ex1, make_ex2
from oscavg.simulate import IntegratorConfig, integrate_cartesian, to_cartesian

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)


def cube(a, b, R):
    return rng.normal(size=(2 * a + 1, 2 * b + 1, R + 1)) + 1j * rng.normal(size=(2 * a + 1, 2 * b + 1, R + 1))


A, B = cube(6, 3, 8), cube(6, 3, 8)
# typical perturbation terms: a handful of modes with short radial polynomials
SA, SB = np.zeros_like(A), np.zeros_like(B)
for k1, k2 in [(0, 0), (2, 0), (-2, 0), (1, 1), (-1, -1)]:
    SA[6 + k1, 3 + k2, :3] = A[6 + k1, 3 + k2, :3]
    SB[6 - k1, 3 + k2, :2] = B[6 - k1, 3 + k2, :2]
C = cube(8, 4, 8)
n = 100_000
r, phi, s = rng.uniform(0, 1, n), rng.uniform(0, 6.3, n), rng.uniform(0, 6.3, n)
spec = make_ex1()
x0, y0 = to_cartesian(spec, 0.8, 0.2)
cfg = IntegratorConfig(sample_grid=200)

cases = {
    "convolve dense": lambda: _kernels.convolve(A, B, 8),
    "convolve sparse": lambda: _kernels.convolve(SA, SB, 8),
    "evaluate 1e5 points": lambda: _kernels.evaluate(C, 8, 4, r, phi, s),
    "dop853 ex1 [1, 300]": lambda: integrate_cartesian(spec, (x0, y0), 1.0, 300.0, cfg),
    "normal form ex2": lambda: compute_normal_form(make_ex2()),
}
out = {"numba": USING_NUMBA, "times": {}}
for name, fn in cases.items():
    fn()
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    out["times"][name] = best
print(json.dumps(out))
"""


def run_backend(disable: bool, repeat: int) -> dict:
    env = dict(os.environ, OSCAVG_DISABLE_NUMBA="1" if disable else "0")
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="timed repetitions per case (best is reported)")
    ap.add_argument("--json", help="also write the results to this file")
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    jit = run_backend(False, args.repeat)
    ref = run_backend(True, args.repeat)
    if not jit["numba"]:
        print("numba is not importable; both columns use the fallback", file=sys.stderr)

    print(f"{'case':<24} {'numba [s]':>12} {'numpy [s]':>12} {'speedup':>9}")
    rows = {}
    for name, t_jit in jit["times"].items():
        t_ref = ref["times"][name]
        rows[name] = {"numba": t_jit, "numpy": t_ref, "speedup": t_ref / t_jit}
        print(f"{name:<24} {t_jit:12.5f} {t_ref:12.5f} {t_ref / t_jit:8.1f}x")
    print(f"total wall time {time.perf_counter() - t0:.1f} s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2, sort_keys=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
