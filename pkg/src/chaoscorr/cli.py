"""Command-line entry point: ``chaoscorr <subcommand> [options]``.

Every subcommand accepts ``--config FILE`` (YAML or JSON key-value pairs),
``--seed`` and ``--out``. Values given on the command line override the
config file, which overrides the defaults.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
import typing
from pathlib import Path

import numpy as np
import yaml

from .chaos_measure import (DICKE_DOMAIN, KT_DOMAIN, build_grid, chaos_measure, chaos_measure_batch,
                            count_local_maxima, ensemble_average, measure_distribution)
from .correspondence import (POINTS_HEADER, SweepConfig, SweepError, emit_outputs, fit_correspondence,
                             fit_sweep, run_sweep)
from .dicke_classical import (DEFAULT_TOL, ensemble_sections, phase_avg_lyapunov_dicke, sample_shell,
                              shell_discriminant, traversal_time)
from .dicke_quantum import DickeParams, dicke_shell
from .errors import ConfigError, EmptyShellError, NumericalError
from .io import read_csv, write_csv, write_json
from .kt_classical import kt_trajectory, phase_avg_lyapunov, sample_sphere, sphere_state
from .kt_quantum import KtParams, kt_spectrum
from .rng import task_rng
from .spectral_stats import histogram, rescaled_average, spacing_ratios

log = logging.getLogger("chaoscorr")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a key-value mapping")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit command-line values."""
    merged = dict(defaults)
    merged.update(load_config(args.config))
    for k, v in vars(args).items():
        if k in ("config", "command", "func", "verbose") or v is None:
            continue
        merged[k] = v
    return merged


def _pick(opts: dict, defaults: dict) -> dict:
    unknown = set(opts) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown options: {sorted(unknown)}")
    return opts


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON file with option values")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def _floats(p, name, help=None):
    p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, nargs="+", help=help)


# ---------------------------------------------------------------- kicked top

KT_QUANTUM = dict(j=400, beta=math.pi / 3, gammas=[0.2, 7.0], seed=0, out="results")


def cmd_kt_quantum(o: dict) -> int:
    out = Path(o["out"])
    rows = []
    for g in o["gammas"]:
        spec = kt_spectrum(KtParams(int(o["j"]), float(o["beta"]), float(g)))
        rs = spacing_ratios(spec, circular=True)
        rr = rescaled_average(rs)
        write_csv(out / f"kt_quasienergies_j{o['j']}_g{g:g}.csv", ("k", "alpha"), enumerate(spec.alphas))
        h = histogram(rs.ratios)
        write_csv(out / f"kt_ratio_hist_j{o['j']}_g{g:g}.csv", ("r_mid", "density"), zip(h.mids, h.density))
        rows.append((g, rr.mean_r, rr.r_tilde))
        print(f"gamma={g:g}  <r>={rr.mean_r:.6f}  r_tilde={rr.r_tilde:.6f}")
    write_csv(out / f"kt_rtilde_j{o['j']}.csv", ("gamma", "mean_r", "r_tilde"), rows)
    return EXIT_OK


KT_CLASSICAL = dict(beta=math.pi / 3, gamma=2.3, n_kicks=1000, theta=1.0, phi=0.5,
                    lyapunov_gammas=None, samples=2000, steps=20000, seed=0, out="results")


def cmd_kt_classical(o: dict) -> int:
    out = Path(o["out"])
    traj = kt_trajectory(sphere_state(o["theta"], o["phi"]), int(o["n_kicks"]), o["beta"], o["gamma"])
    write_csv(out / f"kt_trajectory_g{o['gamma']:g}.csv", ("kick", "phi", "cos_theta"),
              zip(range(len(traj.phi)), traj.phi, traj.cos_theta))
    if o["lyapunov_gammas"]:
        rows = []
        for g in o["lyapunov_gammas"]:
            est = phase_avg_lyapunov(o["beta"], g, int(o["samples"]), int(o["steps"]), int(o["seed"]))
            rows.append((g, est.mean, est.stderr))
            print(f"gamma={g:g}  Lambda_m={est.mean:.6f} +- {est.stderr:.2e}")
        write_csv(out / "kt_lyapunov.csv", ("gamma", "lambda_mean", "lambda_stderr"), rows)
    return EXIT_OK


KT_MEASURE = dict(beta=math.pi / 3, gamma=2.3, n_kicks=1000, ensemble=1600, bins=50,
                  exact_cells=False, seed=0, out="results")


def cmd_kt_measure(o: dict) -> int:
    out = Path(o["out"])
    s0 = sample_sphere(int(o["ensemble"]), task_rng(int(o["seed"]), "kt-ensemble", 0))
    traj = kt_trajectory(s0, int(o["n_kicks"]), o["beta"], o["gamma"])
    grid = build_grid(KT_DOMAIN, int(o["n_kicks"]), exact=bool(o["exact_cells"]))
    samples = chaos_measure_batch(traj.points(), grid)
    _write_measure(out, f"kt_g{o['gamma']:g}_nk{o['n_kicks']}", samples, int(o["bins"]))
    return EXIT_OK


def _write_measure(out: Path, tag: str, samples, bins: int) -> None:
    write_csv(out / f"rc_samples_{tag}.csv",
              ("trajectory_id", "r_c", "m_occupied", "n_points", "m_cells", "p_occ"),
              [(i, s.r_c, s.m_occupied, s.n_points, s.m_cells, s.p_occ) for i, s in enumerate(samples)])
    dist = measure_distribution(samples, bins)
    write_csv(out / f"rc_distribution_{tag}.csv", ("r_c_mid", "density"), zip(dist.mids, dist.density))
    mean, se = ensemble_average(samples)
    r = np.array([s.r_c for s in samples])
    print(f"<R_c>={mean:.6f} +- {se:.2e}  std={r.std(ddof=1) if len(r) > 1 else 0.0:.4f}  "
          f"maxima={count_local_maxima(dist.density)}")


# ---------------------------------------------------------------- Dicke

DICKE_QUANTUM = dict(n_atoms=30, n_tr=160, omega=1.0, omega0=1.0, xis=[0.1, 1.0], e_center=1.2,
                     lo_offset=0.15, hi_offset=0.02, seed=0, out="results")


def cmd_dicke_quantum(o: dict) -> int:
    out = Path(o["out"])
    rows = []
    for xi in o["xis"]:
        p = DickeParams(int(o["n_atoms"]), o["omega"], o["omega0"], float(xi), int(o["n_tr"]))
        shell = dicke_shell(p, o["e_center"], o["lo_offset"], o["hi_offset"])
        rr = rescaled_average(spacing_ratios(shell.levels))
        write_csv(out / f"dicke_shell_N{p.n_atoms}_xi{xi:g}.csv", ("k", "E_scaled"), enumerate(shell.levels))
        rows.append((xi, shell.count, rr.mean_r, rr.r_tilde))
        print(f"xi={xi:g}  levels={shell.count}  <r>={rr.mean_r:.6f}  r_tilde={rr.r_tilde:.6f}")
    write_csv(out / f"dicke_rtilde_N{o['n_atoms']}.csv", ("xi", "n_levels", "mean_r", "r_tilde"), rows)
    return EXIT_OK


DICKE_CLASSICAL = dict(omega=1.0, omega0=1.0, xi=1.0, e_center=1.2, t_max=3000.0, tol=DEFAULT_TOL,
                       lyapunov_xis=None, samples=500, lyapunov_t=1000.0, renorm_dt=1.0,
                       seed=0, out="results")


def cmd_dicke_classical(o: dict) -> int:
    out = Path(o["out"])
    p = DickeParams(omega=o["omega"], omega0=o["omega0"], xi=float(o["xi"]))
    s0 = sample_shell(o["e_center"], p, 1, task_rng(int(o["seed"]), "dicke-single"))
    sec = ensemble_sections(s0, p, o["t_max"], tol=o["tol"])[0]
    write_csv(out / f"dicke_section_xi{o['xi']:g}.csv", ("t", "P", "Q", "direction"),
              zip(sec.t, sec.P, sec.Q, sec.direction.astype(int)))
    if len(sec) > 1:
        print(f"crossings={len(sec)}  T_r={traversal_time(sec):.4f}")
    if o["lyapunov_xis"]:
        rows = []
        for xi in o["lyapunov_xis"]:
            q = DickeParams(omega=o["omega"], omega0=o["omega0"], xi=float(xi))
            est = phase_avg_lyapunov_dicke(q, o["e_center"], int(o["samples"]), o["lyapunov_t"],
                                           int(o["seed"]), renorm_dt=o["renorm_dt"])
            rows.append((xi, est.mean, est.stderr))
            print(f"xi={xi:g}  Upsilon_m={est.mean:.6f} +- {est.stderr:.2e}")
        write_csv(out / "dicke_lyapunov.csv", ("xi", "upsilon_mean", "upsilon_stderr"), rows)
    return EXIT_OK


DICKE_MEASURE = dict(omega=1.0, omega0=1.0, xi=1.0, e_center=1.2, t_max=1000.0, ensemble=400,
                     tol=DEFAULT_TOL, bins=50, exact_cells=False, seed=0, out="results")


def cmd_dicke_measure(o: dict) -> int:
    out = Path(o["out"])
    p = DickeParams(omega=o["omega"], omega0=o["omega0"], xi=float(o["xi"]))
    s0 = sample_shell(o["e_center"], p, int(o["ensemble"]), task_rng(int(o["seed"]), "dicke-ensemble", 0))
    secs = ensemble_sections(s0, p, o["t_max"], tol=o["tol"])
    t_r = traversal_time(secs)
    grid = build_grid(DICKE_DOMAIN, max(1, round(o["t_max"] / t_r)),
                      lambda Q, P: shell_discriminant(P, Q, o["e_center"], p) >= 0,
                      exact=bool(o["exact_cells"]))
    samples = [chaos_measure(s.points(), grid) for s in secs]
    print(f"T_r={t_r:.4f}  cells={grid.m_cells}")
    _write_measure(out, f"dicke_xi{o['xi']:g}_tm{o['t_max']:g}", samples, int(o["bins"]))
    return EXIT_OK


# ---------------------------------------------------------------- sweep / fit

def _sweep_defaults() -> dict:
    return SweepConfig().to_dict()


def cmd_sweep(o: dict) -> int:
    cfg = SweepConfig.from_dict(o)
    try:
        result = run_sweep(cfg)
    except SweepError as exc:
        if exc.partial.points:
            path = emit_outputs(exc.partial, None)
            log.error("partial results written to %s", path)
        raise exc.cause
    fit = fit_sweep(result) if len(result.points) >= 3 else None
    path = emit_outputs(result, fit)
    print(f"wrote {path}")
    if fit is not None:
        print(f"fit: q={fit.q:.6f} kappa={fit.kappa:.6f} amplitude={fit.amplitude:.4f} "
              f"rss={fit.rss:.3e} n={fit.n_points} converged={fit.converged}")
    return EXIT_OK


FIT = dict(points=None, amplitude=1.02, fit_amplitude=False, weighted=False, seed=0, out=None)


def cmd_fit(o: dict) -> int:
    if not o["points"]:
        raise ConfigError("fit needs at least one points CSV (--points)")
    xs, ys, ses = [], [], []
    for path in o["points"]:
        header, data = read_csv(path)
        if tuple(header) != POINTS_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(POINTS_HEADER)}")
        xs.append(data[:, 1])
        ses.append(data[:, 2])
        ys.append(data[:, 3])
    xy = np.column_stack([np.concatenate(xs), np.concatenate(ys)])
    weights = None
    if o["weighted"]:
        se = np.concatenate(ses)
        weights = 1.0 / np.maximum(se, 1e-6) ** 2
        weights /= weights.mean()
    fit = fit_correspondence(xy, float(o["amplitude"]), bool(o["fit_amplitude"]), weights)
    summary = dataclasses.asdict(fit)
    print(json.dumps(summary, indent=2))
    if o["out"]:
        write_json(Path(o["out"]) / "fit.json", {"fit": summary, "inputs": [str(p) for p in o["points"]]})
    return EXIT_OK


def _sweep_parser(p: argparse.ArgumentParser) -> None:
    hints = typing.get_type_hints(SweepConfig)
    for f in dataclasses.fields(SweepConfig):
        if f.name in ("seed", "out"):
            continue
        flag = f"--{f.name.replace('_', '-')}"
        hint = hints[f.name]
        if hint is bool:
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif typing.get_origin(hint) is list:
            inner = typing.get_args(hint)[0]
            p.add_argument(flag, dest=f.name, type=inner, nargs="+")
        else:
            p.add_argument(flag, dest=f.name, type=hint)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chaoscorr", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kt-quantum", help="kicked-top quasienergies and spacing ratios")
    _common(p)
    p.add_argument("--j", type=int)
    p.add_argument("--beta", type=float)
    _floats(p, "gammas")
    p.set_defaults(func=cmd_kt_quantum, defaults=KT_QUANTUM)

    p = sub.add_parser("kt-classical", help="classical kicked-top trajectory and Lyapunov sweep")
    _common(p)
    for name in ("beta", "gamma", "theta", "phi"):
        p.add_argument(f"--{name}", type=float)
    for name in ("n_kicks", "samples", "steps"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    _floats(p, "lyapunov_gammas", "gamma values for the phase-averaged exponent")
    p.set_defaults(func=cmd_kt_classical, defaults=KT_CLASSICAL)

    p = sub.add_parser("kt-measure", help="R_c ensemble for the kicked top")
    _common(p)
    for name in ("beta", "gamma"):
        p.add_argument(f"--{name}", type=float)
    for name in ("n_kicks", "ensemble", "bins"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    p.add_argument("--exact-cells", dest="exact_cells", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_kt_measure, defaults=KT_MEASURE)

    p = sub.add_parser("dicke-quantum", help="Dicke energy shell and spacing ratios")
    _common(p)
    for name in ("n_atoms", "n_tr"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    for name in ("omega", "omega0", "e_center", "lo_offset", "hi_offset"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    _floats(p, "xis")
    p.set_defaults(func=cmd_dicke_quantum, defaults=DICKE_QUANTUM)

    p = sub.add_parser("dicke-classical", help="Dicke Poincare section and Lyapunov sweep")
    _common(p)
    for name in ("omega", "omega0", "xi", "e_center", "t_max", "tol", "lyapunov_t", "renorm_dt"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.add_argument("--samples", type=int)
    _floats(p, "lyapunov_xis", "xi values for the area-averaged exponent")
    p.set_defaults(func=cmd_dicke_classical, defaults=DICKE_CLASSICAL)

    p = sub.add_parser("dicke-measure", help="R_c ensemble for the Dicke model")
    _common(p)
    for name in ("omega", "omega0", "xi", "e_center", "t_max", "tol"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    for name in ("ensemble", "bins"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--exact-cells", dest="exact_cells", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_dicke_measure, defaults=DICKE_MEASURE)

    p = sub.add_parser("sweep", help="paired quantum/classical sweep with fit")
    _common(p)
    _sweep_parser(p)
    p.set_defaults(func=cmd_sweep, defaults=None)

    p = sub.add_parser("fit", help="fit y = A - exp(-q x^kappa) to points CSVs")
    _common(p)
    p.add_argument("--points", nargs="+", help="points CSV files")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--fit-amplitude", dest="fit_amplitude", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--weighted", action=argparse.BooleanOptionalAction, default=None)
    p.set_defaults(func=cmd_fit, defaults=FIT)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    defaults = args.defaults if args.defaults is not None else _sweep_defaults()
    ns = argparse.Namespace(**{k: v for k, v in vars(args).items() if k != "defaults"})
    try:
        opts = _pick(_merge(ns, defaults), defaults)
        return args.func(opts)
    except (ConfigError, EmptyShellError, ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
