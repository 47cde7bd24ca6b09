#!/usr/bin/env python3
"""Run a correspondence sweep from a YAML config, fit it, and write the outputs."""
import argparse
import json
import time

import yaml

from chaoscorr.correspondence import SweepConfig, emit_outputs, fit_sweep, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", help="YAML sweep config, e.g. scripts/configs/kt_fit.yaml")
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    with open(args.config) as fh:
        raw = yaml.safe_load(fh) or {}
    raw.update(out=args.out, workers=args.workers)
    cfg = SweepConfig.from_dict(raw)
    t0 = time.perf_counter()
    result = run_sweep(cfg)
    fit = fit_sweep(result)
    path = emit_outputs(result, fit, cfg.out)
    print(json.dumps({"out": str(path), "kappa": fit.kappa, "q": fit.q, "rss": fit.rss,
                      "seconds": round(time.perf_counter() - t0, 1)}, indent=2))


if __name__ == "__main__":
    main()
