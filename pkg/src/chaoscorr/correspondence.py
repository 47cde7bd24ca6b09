"""Parameter sweeps pairing quantum r-tilde with classical <R_c>, and the universal-curve fit."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy.optimize import minimize

from . import __version__
from .chaos_measure import (DICKE_DOMAIN, KT_DOMAIN, build_grid, chaos_measure, chaos_measure_batch,
                            ensemble_average, measure_distribution)
from .dicke_classical import ensemble_sections, sample_shell, shell_discriminant, traversal_time
from .dicke_quantum import DickeParams, dicke_shell
from .errors import ConfigError
from .io import write_csv, write_json
from .kt_classical import kt_trajectory, sample_sphere
from .kt_quantum import KtParams, kt_spectrum
from .rng import task_rng
from .spectral_stats import histogram, rescaled_average, spacing_ratios

log = logging.getLogger(__name__)

POINTS_HEADER = ("control", "x_rc_mean", "x_rc_stderr", "y_rtilde")
MODELS = ("kicked_top", "dicke")


@dataclass
class SweepConfig:
    model: str = "kicked_top"
    controls: list[float] = field(default_factory=lambda: [0.2, 1.0, 2.0, 3.0, 5.0, 7.0])
    # kicked top: spin sizes j; dicke: atom numbers N
    sizes: list[int] = field(default_factory=lambda: [400])
    # kicked top: kick counts N_k; dicke: evolution times T_m
    durations: list[float] = field(default_factory=lambda: [1000])
    ensemble: int = 1600
    seed: int = 0
    beta: float = math.pi / 3
    omega: float = 1.0
    omega0: float = 1.0
    n_tr: int = 160
    e_center: float = 1.2
    lo_offset: float = 0.15
    hi_offset: float = 0.02
    tol: float = 1e-12
    bins: int = 50
    exact_cells: bool = False
    amplitude: float = 1.02
    fit_amplitude: bool = False
    weighted: bool = False
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.controls = [float(c) for c in self.controls]
        self.sizes = [int(s) for s in self.sizes]
        self.durations = [float(d) for d in self.durations]
        self.validate()

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if not self.controls:
            raise ConfigError("control grid is empty")
        if not self.sizes or not self.durations:
            raise ConfigError("sizes and durations must be non-empty")
        if self.ensemble < 1:
            raise ConfigError("ensemble size must be >= 1")
        if any(c < 0 for c in self.controls):
            raise ConfigError("control values must be >= 0")
        if any(d <= 0 for d in self.durations):
            raise ConfigError("durations must be positive")
        if self.model == "kicked_top":
            if any(s <= 0 or s % 2 for s in self.sizes):
                raise ConfigError("kicked-top sizes j must be positive even integers")
            if any(d != int(d) for d in self.durations):
                raise ConfigError("kicked-top durations are kick counts and must be integers")
        else:
            if any(s <= 0 or s % 2 for s in self.sizes):
                raise ConfigError("Dicke sizes N must be positive even integers")
            if self.omega <= 0 or self.omega0 <= 0 or self.n_tr < 1:
                raise ConfigError("omega, omega0 must be positive and n_tr >= 1")
        if self.bins < 1 or self.workers < 1:
            raise ConfigError("bins and workers must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def semantic_dict(self) -> dict:
        d = self.to_dict()
        d.pop("out")
        d.pop("workers")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class CorrespondencePoint:
    control: float
    x: float
    y: float
    x_stderr: float
    size: int
    duration: float

    def __post_init__(self):
        if not self.x > 0:
            raise ValueError(f"<R_c> must be positive, got {self.x}")
        if self.y < 0:
            raise ValueError(f"r-tilde must be non-negative, got {self.y}")


@dataclass
class QuantumResult:
    control: float
    size: int
    r_tilde: float
    mean_r: float
    n_levels: int
    ratios: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)


@dataclass
class ClassicalResult:
    control: float
    duration: float
    rc_mean: float
    rc_stderr: float
    r_c: np.ndarray = field(repr=False)
    m_cells: int
    n_points_nominal: int
    traversal_time: float | None = None


@dataclass
class SweepResult:
    config: SweepConfig
    points: list[CorrespondencePoint]
    quantum: list[QuantumResult]
    classical: list[ClassicalResult]
    timings: dict = field(default_factory=dict)


def _quantum_task(cfg: SweepConfig, control: float, size: int) -> QuantumResult:
    if cfg.model == "kicked_top":
        spec = kt_spectrum(KtParams(size, cfg.beta, control))
        levels = spec.alphas
        rs = spacing_ratios(levels, circular=True)
    else:
        p = DickeParams(size, cfg.omega, cfg.omega0, control, cfg.n_tr)
        levels = dicke_shell(p, cfg.e_center, cfg.lo_offset, cfg.hi_offset).levels
        rs = spacing_ratios(levels, circular=False)
    rr = rescaled_average(rs)
    return QuantumResult(control, size, rr.r_tilde, rr.mean_r, len(levels), rs.ratios, levels)


def _kt_classical_task(cfg: SweepConfig, index: int, control: float) -> list[ClassicalResult]:
    rng = task_rng(cfg.seed, "kt-ensemble", index)
    s0 = sample_sphere(cfg.ensemble, rng)
    n_max = int(max(cfg.durations))
    traj = kt_trajectory(s0, n_max, cfg.beta, control)
    pts = traj.points()
    out = []
    for nk in sorted({int(d) for d in cfg.durations}):
        grid = build_grid(KT_DOMAIN, nk, exact=cfg.exact_cells)
        samples = chaos_measure_batch(pts[:, :nk], grid)
        mean, se = ensemble_average(samples)
        out.append(ClassicalResult(control, float(nk), mean, se, np.array([s.r_c for s in samples]),
                                   grid.m_cells, nk))
    return out


def _dicke_classical_task(cfg: SweepConfig, index: int, control: float) -> list[ClassicalResult]:
    params = DickeParams(max(cfg.sizes), cfg.omega, cfg.omega0, control, cfg.n_tr)
    rng = task_rng(cfg.seed, "dicke-ensemble", index)
    s0 = sample_shell(cfg.e_center, params, cfg.ensemble, rng)
    t_max = max(cfg.durations)
    sections = ensemble_sections(s0, params, t_max, direction=1, tol=cfg.tol)
    t_r = traversal_time(sections)

    def accessible(Q, P):
        return shell_discriminant(P, Q, cfg.e_center, params) >= 0

    out = []
    for tm in sorted(set(cfg.durations)):
        n_nominal = max(1, round(tm / t_r))
        grid = build_grid(DICKE_DOMAIN, n_nominal, accessible, exact=cfg.exact_cells)
        r_c = []
        for sec in sections:
            keep = sec.t <= tm
            pts = sec.points()[keep]
            if len(pts) == 0:
                raise ConfigError(f"trajectory produced no section crossings before T_m={tm}")
            r_c.append(chaos_measure(pts, grid).r_c)
        mean, se = ensemble_average(r_c)
        out.append(ClassicalResult(control, tm, mean, se, np.array(r_c), grid.m_cells, n_nominal, t_r))
    return out


def _run_control(cfg: SweepConfig, index: int, control: float):
    t0 = time.perf_counter()
    try:
        quantum = [_quantum_task(cfg, control, size) for size in cfg.sizes]
        t1 = time.perf_counter()
        task = _kt_classical_task if cfg.model == "kicked_top" else _dicke_classical_task
        classical = task(cfg, index, control)
    except Exception as exc:
        exc.args = (f"control={control}: {exc}",) + exc.args[1:]
        raise
    t2 = time.perf_counter()
    return quantum, classical, {"quantum_s": t1 - t0, "classical_s": t2 - t1}


def _assemble(cfg: SweepConfig, done: list) -> SweepResult:
    quantum: list[QuantumResult] = []
    classical: list[ClassicalResult] = []
    timings = {}
    for c, (q, cl, tm) in done:
        quantum.extend(q)
        classical.extend(cl)
        timings[repr(c)] = tm
    points = []
    for size in cfg.sizes:
        for dur in sorted(set(cfg.durations)):
            for q in quantum:
                if q.size != size:
                    continue
                cl = next(c for c in classical if c.control == q.control and c.duration == dur)
                points.append(CorrespondencePoint(q.control, cl.rc_mean, q.r_tilde, cl.rc_stderr, size, dur))
    return SweepResult(cfg, points, quantum, classical, timings)


class SweepError(RuntimeError):
    """A control value failed; ``partial`` holds the controls completed before it."""

    def __init__(self, message: str, partial: SweepResult, cause: BaseException):
        super().__init__(message)
        self.partial = partial
        self.cause = cause


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Evaluate every control value and pair quantum and classical measures.

    Each (size, duration) combination yields one point per control value. All
    randomness is drawn from streams keyed by (seed, control index), so the
    result does not depend on ``workers``. On failure a ``SweepError`` carries
    the completed part of the sweep.
    """
    cfg.validate()
    done = []
    try:
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                futures = [pool.submit(_run_control, cfg, i, c) for i, c in enumerate(cfg.controls)]
                for c, fut in zip(cfg.controls, futures):
                    done.append((c, fut.result()))
        else:
            for i, c in enumerate(cfg.controls):
                log.info("control %s (%d/%d)", c, i + 1, len(cfg.controls))
                done.append((c, _run_control(cfg, i, c)))
    except Exception as exc:
        raise SweepError(str(exc), _assemble(cfg, [(c, r) for c, r in done]), exc) from exc
    return _assemble(cfg, done)


@dataclass(frozen=True)
class FitResult:
    amplitude: float
    kappa: float
    q: float
    rss: float
    n_points: int
    converged: bool
    weighted: bool = False

    def curve(self, x):
        return self.amplitude - np.exp(-self.q * np.asarray(x, dtype=float) ** self.kappa)


def correspondence_curve(x, q: float, kappa: float, amplitude: float = 1.02):
    return amplitude - np.exp(-q * np.asarray(x, dtype=float) ** kappa)


def fit_correspondence(points, amplitude: float = 1.02, fit_amplitude: bool = False,
                       weights=None, max_iter: int = 20000) -> FitResult:
    """Least-squares fit of ``y = amplitude - exp(-q x**kappa)``.

    Nelder-Mead in ``(log q, log kappa)`` from a 3x3 grid of starts
    ``q in {1, 4, 8}``, ``kappa in {1, 3, 5}``; the best local minimum wins.
    ``points`` is a sequence of ``CorrespondencePoint`` or an ``(n, 2)`` array of (x, y).
    """
    if isinstance(points, np.ndarray):
        xy = np.asarray(points, dtype=float)
    else:
        xy = np.array([(p.x, p.y) for p in points], dtype=float)
    if xy.ndim != 2 or len(xy) < 3:
        raise ValueError("need at least 3 points to fit")
    x, y = xy[:, 0], xy[:, 1]
    if np.any(x <= 0):
        raise ValueError("all x values must be positive")
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    logx = np.log(x)

    def rss(theta):
        q, kappa = np.exp(theta[0]), np.exp(theta[1])
        a = np.exp(theta[2]) if fit_amplitude else amplitude
        r = y - a + np.exp(-q * np.exp(kappa * logx))
        return float(np.sum(w * r * r))

    best = None
    opts = {"xatol": 1e-10, "fatol": np.inf, "maxiter": max_iter, "maxfev": 4 * max_iter}
    for q0 in (1.0, 4.0, 8.0):
        for k0 in (1.0, 3.0, 5.0):
            start = [math.log(q0), math.log(k0)] + ([math.log(amplitude)] if fit_amplitude else [])
            res = minimize(rss, start, method="Nelder-Mead", options=opts)
            if best is None or res.fun < best.fun:
                best = res
    theta = best.x
    a = float(np.exp(theta[2])) if fit_amplitude else float(amplitude)
    return FitResult(a, float(np.exp(theta[1])), float(np.exp(theta[0])), float(best.fun), len(x),
                     bool(best.success), weights is not None)


def fit_sweep(result: SweepResult) -> FitResult:
    cfg = result.config
    weights = None
    if cfg.weighted:
        se = np.array([p.x_stderr for p in result.points])
        weights = 1.0 / np.maximum(se, 1e-6) ** 2
        weights /= weights.mean()
    return fit_correspondence(result.points, cfg.amplitude, cfg.fit_amplitude, weights)


def _series_name(cfg: SweepConfig, size: int, duration: float) -> str:
    if cfg.model == "kicked_top":
        return f"j{size}_nk{int(duration)}"
    return f"N{size}_tm{duration:g}"


def emit_outputs(result: SweepResult, fit: FitResult | None = None, out: str | Path | None = None) -> Path:
    """Write points/distribution/spectrum CSVs and a JSON summary; returns the sweep directory."""
    cfg = result.config
    if not result.points:
        raise ValueError("no results to write")
    stem = f"{cfg.model}-{cfg.config_hash()[:12]}"
    root = Path(out if out is not None else cfg.out) / stem
    series = []
    for size in cfg.sizes:
        for dur in sorted(set(cfg.durations)):
            pts = [p for p in result.points if p.size == size and p.duration == dur]
            name = _series_name(cfg, size, dur)
            path = write_csv(root / f"points_{name}.csv", POINTS_HEADER,
                             [(p.control, p.x, p.x_stderr, p.y) for p in pts])
            series.append({"file": path.name, "size": size, "duration": dur})
    for cl in result.classical:
        dist = measure_distribution(cl.r_c, bins=cfg.bins)
        tag = _series_name(cfg, 0, cl.duration).split("_", 1)[1]
        write_csv(root / "distributions" / f"rc_c{cl.control:g}_{tag}.csv", ("r_c_mid", "density"),
                  zip(dist.mids, dist.density))
    for q in result.quantum:
        level_name = "alpha" if cfg.model == "kicked_top" else "E_scaled"
        size_tag = f"j{q.size}" if cfg.model == "kicked_top" else f"N{q.size}"
        write_csv(root / "spectra" / f"levels_c{q.control:g}_{size_tag}.csv", ("k", level_name),
                  enumerate(q.levels))
        h = histogram(q.ratios, bins=20, range=(0.0, 1.0))
        write_csv(root / "spectra" / f"ratios_c{q.control:g}_{size_tag}.csv", ("r_mid", "density"),
                  zip(h.mids, h.density))
    rtilde_rows = [(q.control, q.size, q.r_tilde) for q in result.quantum]
    write_csv(root / "rtilde.csv", ("control", "size", "r_tilde"), rtilde_rows)
    summary = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "series": series,
        "fit": None if fit is None else dataclasses.asdict(fit),
        "fit_weighting": "inverse-variance of <R_c>" if cfg.weighted else "unweighted",
        "seeds": {"master": cfg.seed, "streams": "SeedSequence(seed, spawn_key=(crc32(task), control_index))"},
        "traversal_times": {repr(c.control): c.traversal_time for c in result.classical
                            if c.traversal_time is not None},
        "cell_grids": {f"{c.control:g}/{c.duration:g}": {"m_cells": c.m_cells, "n_points": c.n_points_nominal}
                       for c in result.classical},
        "dicke_grid_masked_to_accessible_region": cfg.model == "dicke",
        "versions": {"chaoscorr": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_times_s": result.timings,
    }
    write_json(root / "summary.json", summary)
    return root
