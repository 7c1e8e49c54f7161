#!/usr/bin/env python3
"""Wall-time benchmark of the three distances across degradation severities."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from pcdist.reports import run_bench

ROOT = Path(__file__).parent.parent


def main():
    report = run_bench(
        sizes=(512, 2048),
        trials=20,
        seed=13,
        emd_eps=0.004,
        progress=lambda lv, size, d, t: print(f"{lv} n={size}: {d}/{t}", flush=True),
    )
    out = ROOT / "results"
    out.mkdir(exist_ok=True)
    (out / "timing_bench.csv").write_text(report.to_csv())
    print(report.to_csv())
    for size in (512, 2048):
        for name, ok in report.ordering_checks(size).items():
            print(f"check n={size} {name}: {'PASS' if ok else 'FAIL'}")


if __name__ == "__main__":
    main()
