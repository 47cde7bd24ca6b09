#!/usr/bin/env python3
"""Shell-level shift of the Dicke spectrum as the boson cutoff is raised."""
import argparse

from chaoscorr.dicke_quantum import DickeParams, truncation_convergence
from chaoscorr.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-atoms", type=int, default=30)
    ap.add_argument("--xi", type=float, default=1.0)
    ap.add_argument("--cutoffs", type=int, nargs="+", default=[120, 160, 200, 240])
    ap.add_argument("--out", default="results/truncation_scan.csv")
    args = ap.parse_args()
    rows = []
    for lo, hi in zip(args.cutoffs, args.cutoffs[1:]):
        rep = truncation_convergence(DickeParams(args.n_atoms, xi=args.xi, n_tr=lo), n_tr_refined=hi)
        rows.append((lo, hi, rep.count, rep.count_refined, rep.max_shift))
        print(f"n_tr {lo} -> {hi}: levels {rep.count}/{rep.count_refined} shift {rep.max_shift:.3e}", flush=True)
    write_csv(args.out, ["n_tr", "n_tr_refined", "count", "count_refined", "max_shift"], rows)


if __name__ == "__main__":
    main()
