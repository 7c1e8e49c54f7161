#!/usr/bin/env python3
"""Per-pair gradient magnitude curves for the three losses.

Emits results/gradient_profile_<loss>.csv plus the frequency and temperature
families for the density-aware loss.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

import numpy as np

from pcdist import DcdParams, gradient_profile

ROOT = Path(__file__).parent.parent


def write(path, curve):
    path.write_text("l,grad\n" + "\n".join(f"{l!r},{g!r}" for l, g in curve) + "\n")


def main():
    out = ROOT / "results"
    out.mkdir(exist_ok=True)
    grid = np.linspace(0.0, 0.5, 501)
    for loss in ("cd-t", "cd-p", "dcd"):
        curve = gradient_profile(loss, DcdParams(alpha=50.0), grid, n=1)
        write(out / f"gradient_profile_{loss.replace('-', '_')}.csv", curve)
    for n in (1, 2, 4, 8):
        curve = gradient_profile("dcd", DcdParams(alpha=50.0), grid, n=n)
        write(out / f"gradient_profile_dcd_n{n}.csv", curve)
    for alpha in (20.0, 50.0, 100.0, 200.0):
        curve = gradient_profile("dcd", DcdParams(alpha=alpha), grid, n=1)
        write(out / f"gradient_profile_dcd_alpha{alpha:g}.csv", curve)
    print(f"wrote gradient profile CSVs to {out}")


if __name__ == "__main__":
    main()
