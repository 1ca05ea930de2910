#!/usr/bin/env python3
"""Run the three benchmark refinement ladders and write the report files.

The radial cases finish in seconds; the lattice case takes several minutes
at its finest spacing.  Reports land in ./reports by default.
"""
import argparse
import time
from pathlib import Path

from emikit.verify import emit_report, run_schedule, write_atomic


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="reports")
    parser.add_argument("--presets", default="exp1,exp2,exp3",
                        help="comma-separated subset of the benchmarks")
    parser.add_argument("--tag", default=None, help="file tag (default: timestamp)")
    args = parser.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = args.tag or time.strftime("%Y%m%d-%H%M%S")

    for name in args.presets.split(","):
        print(f"=== {name}")
        report = run_schedule(name, progress=lambda r: print(
            f"  c_l={r.c_l:<7g} n_f={r.n_f:<5d} [{r.wall_time:7.1f}s] "
            + "  ".join(f"{v}={e:.3e}" for v, e in r.errors.items())))
        for fmt, ext in (("csv", "csv"), ("markdown", "md")):
            path = outdir / f"{name}_{tag}.{ext}"
            write_atomic(path, emit_report(report, fmt))
            print(f"  wrote {path}")
        print(report.to_markdown())


if __name__ == "__main__":
    main()
