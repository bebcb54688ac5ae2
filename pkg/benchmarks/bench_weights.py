"""Time the compiled and numpy weight kernels on a few graphs of each order.

    python3 benchmarks/bench_weights.py [--samples 200000] [--repeat 3]

Both backends consume the same random stream, so the estimates are printed
alongside the timings as a cross-check.
"""
import argparse
import time

from kontra.graphs import parse_key
from kontra.weights import BACKENDS, weight_estimate

GRAPHS = ["n1:(L,R)", "n2:(2,L)(1,R)", "n2:(L,R)(L,R)", "n3:(2,3)(L,R)(1,L)"]


def best_time(key: str, samples: int, backend: str, repeat: int):
    g = parse_key(key)
    best, est = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        est = weight_estimate(g, samples, 1, backend=backend)
        best = min(best, time.perf_counter() - t)
    return best, est


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if "compiled" not in BACKENDS:
        print("compiled kernel not built; run `python3 setup.py build_ext --inplace`. Timing numpy only.")
    backends = [b for b in ("python", "compiled") if b in BACKENDS]

    print(f"samples={args.samples} repeat={args.repeat}")
    header = f"{'graph':<22}" + "".join(f"{b + ' s':>14}" for b in backends) + f"{'speedup':>10}{'estimate':>14}{'|diff|':>10}"
    print(header)
    for key in GRAPHS:
        rows = {b: best_time(key, args.samples, b, args.repeat) for b in backends}
        line = f"{key:<22}" + "".join(f"{rows[b][0]:>14.4f}" for b in backends)
        if len(rows) == 2:
            (tp, ep), (tc, ec) = rows["python"], rows["compiled"]
            line += f"{tp / tc:>9.1f}x{ec.estimate:>14.6f}{abs(ep.estimate - ec.estimate):>10.1e}"
        else:
            line += f"{'-':>10}{rows['python'][1].estimate:>14.6f}{'-':>10}"
        print(line)


if __name__ == "__main__":
    main()
