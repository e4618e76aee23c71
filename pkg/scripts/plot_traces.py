"""Plot log10(RSE) traces written by ``greedycd bench``.

Usage: python scripts/plot_traces.py BENCH_DIR [--m 200 --n 50 --c 0.9] [--out fig.png]

Trace files carry iteration counts only (they are compared byte for byte
across runs), so the time axis is the iteration index scaled by the
per-iteration wall time of the same run taken from runs.csv.
"""

import argparse
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from greedycd.bench import trace_name  # noqa: E402
from greedycd.io import fmt, read_csv  # noqa: E402


def seconds_per_iteration(runs, m, n, c, method):
    key = (str(m), str(n), fmt(c), method)
    seeds = [r for r in runs if (r["m"], r["n"], r["c"], r["method"]) == key
             and r["iterations"] not in ("", "0")]
    if not seeds:
        return None
    first = min(seeds, key=lambda r: int(r["seed"]))
    return float(first["cpu_seconds"]) / int(first["iterations"])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("bench_dir", type=Path)
    p.add_argument("--m", type=int, default=200)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--c", type=float, default=0.9)
    p.add_argument("--methods", nargs="+", default=["gcd", "twostep_gs", "gdscd"])
    p.add_argument("--iterations", action="store_true", help="x axis in iterations, not seconds")
    p.add_argument("--out", type=Path, default=Path("traces.png"))
    args = p.parse_args(argv)

    runs = read_csv(args.bench_dir / "runs.csv")
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in args.methods:
        path = args.bench_dir / "traces" / trace_name(args.m, args.n, args.c, method)
        if not path.exists():
            print(f"skipping {method}: no {path.name}")
            continue
        rows = [r for r in read_csv(path) if r["rse"]]
        k = [int(r["k"]) for r in rows]
        y = [math.log10(max(float(r["rse"]), 1e-300)) for r in rows]
        spi = None if args.iterations else seconds_per_iteration(
            runs, args.m, args.n, args.c, method)
        x = k if spi is None else [i * spi for i in k]
        ax.plot(x, y, label=method)
    ax.set_xlabel("iteration" if args.iterations else "CPU seconds (approx.)")
    ax.set_ylabel("log10(RSE)")
    ax.set_title(f"{args.m} x {args.n}, c = {args.c:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
