#!/usr/bin/env python3
"""Rescaled average ratio versus control parameter for several system sizes."""
import argparse
import math

import numpy as np

from chaoscorr.dicke_quantum import DickeParams, dicke_shell
from chaoscorr.io import write_csv
from chaoscorr.kt_quantum import KtParams, kt_spectrum
from chaoscorr.spectral_stats import rescaled_average, spacing_ratios


def rtilde(model, size, control, n_tr):
    if model == "kicked_top":
        levels, circular = kt_spectrum(KtParams(size, math.pi / 3, control)).alphas, True
    else:
        levels, circular = dicke_shell(DickeParams(size, xi=control, n_tr=n_tr)).levels, False
    rs = spacing_ratios(levels, circular=circular)
    return rescaled_average(rs).r_tilde, len(levels)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", choices=["kicked_top", "dicke"], default="kicked_top")
    ap.add_argument("--sizes", type=int, nargs="+", default=[200, 400])
    ap.add_argument("--controls", type=float, nargs="+")
    ap.add_argument("--n-tr", type=int, default=160)
    ap.add_argument("--out", default="results/rtilde_scan.csv")
    args = ap.parse_args()
    controls = args.controls or (np.linspace(0.2, 7, 35) if args.model == "kicked_top"
                                 else np.linspace(0.05, 1.0, 20))
    rows = []
    for size in args.sizes:
        for c in controls:
            r, n = rtilde(args.model, size, float(c), args.n_tr)
            rows.append((size, float(c), r, n))
            print(f"size={size} control={c:.3f} r_tilde={r:.4f} levels={n}", flush=True)
    write_csv(args.out, ["size", "control", "r_tilde", "n_levels"], rows)


if __name__ == "__main__":
    main()
