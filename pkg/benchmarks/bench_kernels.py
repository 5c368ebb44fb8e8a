"""Compare the compiled and pure-Python plant kernels.

    python3 benchmarks/bench_kernels.py [--steps 2000] [--repeat 3] [--scenario]
"""
import argparse
import time

import numpy as np

from cranectl import plant as plant_mod
from cranectl.config import preset
from cranectl.harness import run_scenario
from cranectl.params import table_parameters
from cranectl.plant import CraneState, Plant


def bench_steps(backend: str, steps: int, repeat: int) -> tuple[float, np.ndarray]:
    p = table_parameters()
    pl = Plant(p, substeps=10, backend=backend)
    x0 = CraneState(v_x=0.1, theta_x=0.2, omega_y=0.3, l=0.3).to_array()
    best = float("inf")
    for _ in range(repeat):
        x = x0.copy()
        t0 = time.perf_counter()
        for k in range(steps):
            x = pl.step_array(x, (5.0 * np.sin(0.01 * k), 3.0, 1.0), 0.01)
        best = min(best, time.perf_counter() - t0)
    return best, x


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scenario", action="store_true",
                    help="also time one fast closed-loop run per backend")
    args = ap.parse_args()

    backends = ["python"]
    if plant_mod.BACKEND == "compiled":
        backends.insert(0, "compiled")
    else:
        print("compiled kernels not built; timing the Python fallback only")

    results = {}
    for b in backends:
        t, x = bench_steps(b, args.steps, args.repeat)
        results[b] = (t, x)
        print(f"{b:>9s}: {args.steps} RK4 steps (10 substeps) in {t * 1e3:8.1f} ms "
              f"({t / args.steps * 1e6:7.1f} us/step)")
    if len(results) == 2:
        (tc, xc), (tp, xp) = results["compiled"], results["python"]
        print(f"  speed-up {tp / tc:.1f}x, bit-identical: {xc.tobytes() == xp.tobytes()}")

    if args.scenario:
        cfg = preset("fast", controller="sfb", scenario="III", repetitions=1)
        for b in backends:
            t0 = time.perf_counter()
            run_scenario(cfg, backend=b)
            print(f"{b:>9s}: fast sfb Scenario III transition in "
                  f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
