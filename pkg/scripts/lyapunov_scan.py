#!/usr/bin/env python3
"""Phase-space averaged largest Lyapunov exponent versus control parameter."""
import argparse
import math

import numpy as np

from chaoscorr.dicke_classical import phase_avg_lyapunov_dicke
from chaoscorr.dicke_quantum import DickeParams
from chaoscorr.io import write_csv
from chaoscorr.kt_classical import phase_avg_lyapunov


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", choices=["kicked_top", "dicke"], default="kicked_top")
    ap.add_argument("--controls", type=float, nargs="+")
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--duration", type=float, default=20000,
                    help="kicks for the kicked top, evolution time for Dicke")
    ap.add_argument("--energy", type=float, default=1.2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/lyapunov_scan.csv")
    args = ap.parse_args()
    if args.model == "kicked_top":
        controls = args.controls or np.linspace(0.2, 7, 35)
        run = lambda c: phase_avg_lyapunov(math.pi / 3, c, args.samples, int(args.duration), args.seed)
    else:
        controls = args.controls or np.linspace(0.05, 1.0, 20)
        run = lambda c: phase_avg_lyapunov_dicke(DickeParams(xi=c), args.energy, args.samples,
                                                 args.duration, args.seed)
    rows = []
    for c in controls:
        est = run(float(c))
        rows.append((float(c), est.mean, est.stderr))
        print(f"control={c:.3f} mean={est.mean:.5f} stderr={est.stderr:.5f}", flush=True)
    write_csv(args.out, ["control", "lyapunov_mean", "lyapunov_stderr"], rows)


if __name__ == "__main__":
    main()
