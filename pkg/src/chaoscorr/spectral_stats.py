"""Level-spacing-ratio statistics and the rescaled average ratio."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

# Gaps below this fraction of the mean gap count as exact degeneracies.
ZERO_GAP_RTOL = 1e-9


@dataclass(frozen=True)
class SpectrumSample:
    levels: np.ndarray
    model: str = ""
    sector: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=float))

    def __len__(self):
        return len(self.levels)


@dataclass(frozen=True)
class RatioSample:
    ratios: np.ndarray
    n_levels: int
    circular: bool
    n_dropped_zero: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.ratios))


@dataclass(frozen=True)
class RescaledRatio:
    mean_r: float
    r_tilde: float
    ref_poisson: float
    ref_wd: float


def _as_levels(levels) -> np.ndarray:
    if isinstance(levels, SpectrumSample):
        return levels.levels
    if hasattr(levels, "alphas"):
        return np.asarray(levels.alphas, dtype=float)
    return np.asarray(levels, dtype=float)


def spacing_ratios(levels, circular: bool = False) -> RatioSample:
    """Ratios ``min(d[k+1]/d[k], d[k]/d[k+1])`` of consecutive spacings.

    In circular mode the levels are phases on [-pi, pi) and the wraparound gap
    ``levels[0] + 2 pi - levels[-1]`` closes the ring, giving one ratio per level.

    Degenerate gaps: a pair of zero gaps is dropped and counted in
    ``n_dropped_zero``; a single zero gap gives ``r = 0``.
    """
    x = _as_levels(levels)
    if x.ndim != 1 or len(x) < 3:
        raise ValueError(f"need at least 3 levels, got {x.size}")
    if np.any(np.diff(x) < 0):
        raise ValueError("levels must be sorted ascending")
    d = np.diff(x)
    if circular:
        d = np.append(d, x[0] + 2 * math.pi - x[-1])
    zero_tol = ZERO_GAP_RTOL * np.mean(d)
    if circular:
        d_next = np.roll(d, -1)
    else:
        d, d_next = d[:-1], d[1:]
    z0, z1 = d <= zero_tol, d_next <= zero_tol
    both = z0 & z1
    one = z0 ^ z1
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.minimum(d, d_next) / np.maximum(d, d_next)
    r = np.where(one, 0.0, r)[~both]
    return RatioSample(np.clip(r, 0.0, 1.0), n_levels=len(x), circular=circular,
                       n_dropped_zero=int(both.sum()))


def reference_pdf(r, kind: str):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r > 1):
        raise ValueError("r must lie in [0, 1]")
    if kind == "poisson":
        out = 2.0 / (1.0 + r) ** 2
    elif kind == "wigner_dyson":
        out = 6.75 * (r + r * r) / (1.0 + r + r * r) ** 2.5
    else:
        raise ValueError(f"unknown reference distribution {kind!r}")
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=1)
def reference_means() -> tuple[float, float]:
    """(<r>_Poisson, <r>_WD) by adaptive quadrature of r P(r) over [0, 1]."""
    out = []
    for kind in ("poisson", "wigner_dyson"):
        val, _ = integrate.quad(lambda r: r * reference_pdf(r, kind), 0.0, 1.0,
                                epsabs=1e-12, epsrel=1e-12)
        out.append(val)
    return out[0], out[1]


def rescaled_average(sample: RatioSample | np.ndarray) -> RescaledRatio:
    r = sample.ratios if isinstance(sample, RatioSample) else np.asarray(sample, dtype=float)
    if r.size == 0:
        raise ValueError("no ratios to average")
    p, wd = reference_means()
    mean_r = float(np.mean(r))
    return RescaledRatio(mean_r, abs(mean_r - p) / (wd - p), p, wd)


@dataclass(frozen=True)
class DensityTable:
    edges: np.ndarray
    density: np.ndarray

    @property
    def mids(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


def histogram(values, bins: int = 20, range: tuple[float, float] = (0.0, 1.0)) -> DensityTable:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot histogram an empty sample")
    lo, hi = range
    if bins < 1 or not hi > lo:
        raise ValueError(f"invalid binning: bins={bins}, range={range}")
    counts, edges = np.histogram(v, bins=bins, range=(lo, hi))
    total = counts.sum()
    if total == 0:
        raise ValueError("no values fall inside the histogram range")
    return DensityTable(edges, counts / (total * np.diff(edges)))
