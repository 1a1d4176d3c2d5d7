"""Compare the compiled and pure-Python argmin kernels on generated instances.

    python3 benchmarks/bench_kernels.py --preset 30beds-var1 --weeks 2 --seeds 0-2
"""
from __future__ import annotations

import argparse
import statistics

from iprnpa.heuristic import run_heuristic
from iprnpa.instgen import generate_instance, preset
from iprnpa.kernels import available_backends


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="30beds-var1")
    ap.add_argument("--weeks", type=int, default=2)
    ap.add_argument("--seeds", default="0-2")
    ap.add_argument("--repetitions", type=int, default=3)
    args = ap.parse_args()
    a, _, b = args.seeds.partition("-")
    seeds = range(int(a), int(b or a) + 1)
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the Python kernel is timed")
    times: dict[str, list[float]] = {b: [] for b in backends}
    for seed in seeds:
        inst = generate_instance(preset(args.preset, weeks=args.weeks), seed)
        totals = set()
        for be in backends:
            walls = []
            for _ in range(args.repetitions):
                res = run_heuristic(inst, backend=be)
                walls.append(res.wall_ms)
            totals.add(res.breakdown.weighted_total)
            times[be].append(min(walls))
            print(f"seed {seed}  {be:<8} {min(walls):9.1f} ms  total {res.breakdown.weighted_total:.6f}")
        if len(totals) != 1:
            raise SystemExit(f"backends disagree on seed {seed}: {sorted(totals)}")
    for be, ws in times.items():
        print(f"{be:<8} median {statistics.median(ws):9.1f} ms")
    if len(times) == 2:
        print(f"speedup  {statistics.median(times['python']) / statistics.median(times['compiled']):.2f}x")


if __name__ == "__main__":
    main()
