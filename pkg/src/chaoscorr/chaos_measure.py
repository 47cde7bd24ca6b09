"""Finite-time chaoticity of a point cloud from cell occupancy on a 2-D grid.

A trajectory leaves ``N`` points on a section. The section is cut into ``M``
equal cells, ``M_occ`` of which are hit. For ``N`` points thrown uniformly at
random, each cell is hit with probability ``p = 1 - (1 - 1/M)**N``, so the
ratio ``R_c = M_occ / (p M)`` is close to 1 for structureless (chaotic)
clouds and small for clustered (regular) ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.signal import find_peaks

from .spectral_stats import DensityTable


@dataclass(frozen=True)
class Domain:
    u_name: str
    u_lo: float
    u_hi: float
    v_name: str
    v_lo: float
    v_hi: float

    def __post_init__(self):
        if not (self.u_hi > self.u_lo and self.v_hi > self.v_lo):
            raise ValueError("domain must have positive area")

    @property
    def area(self) -> float:
        return (self.u_hi - self.u_lo) * (self.v_hi - self.v_lo)

    def transposed(self) -> "Domain":
        return Domain(self.v_name, self.v_lo, self.v_hi, self.u_name, self.u_lo, self.u_hi)

    def as_dict(self) -> dict:
        return {"u": [self.u_name, self.u_lo, self.u_hi], "v": [self.v_name, self.v_lo, self.v_hi]}


KT_DOMAIN = Domain("phi", -math.pi, math.pi, "cos_theta", -1.0, 1.0)
DICKE_DOMAIN = Domain("Q", -math.pi, math.pi, "P", -1.0, 1.0)


@dataclass(frozen=True)
class CellGrid:
    domain: Domain
    n_u: int
    n_v: int
    mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != (self.n_u, self.n_v):
                raise ValueError(f"mask shape {m.shape} != grid shape {(self.n_u, self.n_v)}")
            m.setflags(write=False)
            object.__setattr__(self, "mask", m)
        if self.m_cells < 1:
            raise ValueError("grid has no admissible cells")

    @property
    def m_cells(self) -> int:
        return self.n_u * self.n_v if self.mask is None else int(self.mask.sum())

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        return _centers(self.domain, self.n_u, self.n_v)

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        """Flat cell index ``iu * n_v + iv`` for points of shape ``(..., 2)``."""
        pts = np.asarray(points, dtype=float)
        d = self.domain
        u, v = pts[..., 0], pts[..., 1]
        if np.any((u < d.u_lo) | (u > d.u_hi) | (v < d.v_lo) | (v > d.v_hi)) or np.any(np.isnan(pts)):
            raise ValueError("point outside the grid domain")
        iu = np.minimum(((u - d.u_lo) * (self.n_u / (d.u_hi - d.u_lo))).astype(np.int64), self.n_u - 1)
        iv = np.minimum(((v - d.v_lo) * (self.n_v / (d.v_hi - d.v_lo))).astype(np.int64), self.n_v - 1)
        return iu * self.n_v + iv

    def transposed(self) -> "CellGrid":
        mask = None if self.mask is None else self.mask.T
        return CellGrid(self.domain.transposed(), self.n_v, self.n_u, mask)

    def metadata(self) -> dict:
        return {"domain": self.domain.as_dict(), "n_u": self.n_u, "n_v": self.n_v,
                "m_cells": self.m_cells, "masked": self.mask is not None}


@dataclass(frozen=True)
class ChaosMeasureSample:
    r_c: float
    n_points: int
    m_cells: int
    m_occupied: int
    p_occ: float
    n_masked_points: int = 0


def occupancy_probability(m_cells: int, n_points: int) -> float:
    """Chance that a given cell is hit by ``n_points`` uniform throws into ``m_cells`` cells."""
    if m_cells < 1 or n_points < 1:
        raise ValueError("m_cells and n_points must be >= 1")
    if m_cells == 1:
        return 1.0
    return float(-np.expm1(n_points * np.log1p(-1.0 / m_cells)))


def cell_entropy(m_cells: int, n_points: int) -> float:
    p = occupancy_probability(m_cells, n_points)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def optimal_cell_count(n_points: int, exact: bool = False) -> int:
    """Cell count for ``n_points`` points: ``n_points`` itself, or the entropy maximizer ``N/ln 2``."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    return round(n_points / math.log(2)) if exact else int(n_points)


def _centers(d: Domain, n_u: int, n_v: int) -> tuple[np.ndarray, np.ndarray]:
    u = d.u_lo + (np.arange(n_u) + 0.5) * (d.u_hi - d.u_lo) / n_u
    v = d.v_lo + (np.arange(n_v) + 0.5) * (d.v_hi - d.v_lo) / n_v
    return np.meshgrid(u, v, indexing="ij")


def _shape_for(target: float, domain: Domain) -> tuple[int, int]:
    aspect = (domain.u_hi - domain.u_lo) / (domain.v_hi - domain.v_lo)
    n_u = max(1, round(math.sqrt(target * aspect)))
    n_v = max(1, math.ceil(target / n_u))
    return n_u, n_v


def build_grid(domain: Domain, n_points: int,
               accessible: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
               exact: bool = False, rtol: float = 0.02, max_iter: int = 60) -> CellGrid:
    """Near-square cells whose admissible count matches the optimal cell count.

    ``accessible(u, v)`` marks admissible cells by their centers. When it is
    given the total cell count is rescaled until the admissible count is within
    ``rtol`` of the target.
    """
    target = optimal_cell_count(n_points, exact)
    if accessible is None:
        return CellGrid(domain, *_shape_for(target, domain))
    trial = float(target)
    best = None
    for _ in range(max_iter):
        n_u, n_v = _shape_for(trial, domain)
        uu, vv = _centers(domain, n_u, n_v)
        mask = np.asarray(accessible(uu, vv), dtype=bool)
        count = int(mask.sum())
        if count == 0:
            raise ValueError("accessibility predicate admits no cells")
        err = abs(count - target) / target
        if best is None or err < best[0]:
            best = (err, n_u, n_v, mask)
        if err <= rtol:
            break
        trial *= target / count
    _, n_u, n_v, mask = best
    return CellGrid(domain, n_u, n_v, mask)


def chaos_measure(points: np.ndarray, grid: CellGrid) -> ChaosMeasureSample:
    """R_c of one point cloud of shape ``(n, 2)``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n < 1:
        raise ValueError("need at least one point")
    idx = np.unique(grid.cell_index(pts))
    n_masked = 0
    if grid.mask is not None:
        ok = grid.mask.ravel()
        all_idx = grid.cell_index(pts)
        n_masked = int((~ok[all_idx]).sum())
        idx = idx[ok[idx]]
    m_occ = len(idx)
    p = occupancy_probability(grid.m_cells, n)
    return ChaosMeasureSample(m_occ / (p * grid.m_cells), n, grid.m_cells, m_occ, p, n_masked)


def chaos_measure_batch(points: np.ndarray, grid: CellGrid) -> list[ChaosMeasureSample]:
    """R_c for a stack of equal-length clouds ``(n_traj, n, 2)`` in one pass."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 3 or pts.shape[-1] != 2:
        raise ValueError(f"expected shape (n_traj, n, 2), got {pts.shape}")
    n = pts.shape[1]
    idx = np.sort(grid.cell_index(pts), axis=1)
    first = np.ones(idx.shape, dtype=bool)
    first[:, 1:] = idx[:, 1:] != idx[:, :-1]
    if grid.mask is not None:
        ok = grid.mask.ravel()[idx]
        n_masked = (~ok).sum(axis=1)
        first &= ok
    else:
        n_masked = np.zeros(len(idx), dtype=int)
    m_occ = first.sum(axis=1)
    p = occupancy_probability(grid.m_cells, n)
    return [ChaosMeasureSample(int(k) / (p * grid.m_cells), n, grid.m_cells, int(k), p, int(b))
            for k, b in zip(m_occ, n_masked)]


def measure_distribution(samples, bins: int = 50) -> DensityTable:
    r = np.array([s.r_c if isinstance(s, ChaosMeasureSample) else s for s in samples], dtype=float)
    if r.size == 0:
        raise ValueError("need at least one sample")
    hi = max(1.05, float(r.max()))
    counts, edges = np.histogram(r, bins=bins, range=(0.0, hi))
    return DensityTable(edges, counts / (r.size * np.diff(edges)))


def ensemble_average(samples) -> tuple[float, float]:
    """Mean R_c over an ensemble and its standard error."""
    r = np.array([s.r_c if isinstance(s, ChaosMeasureSample) else s for s in samples], dtype=float)
    if r.size == 0:
        raise ValueError("need at least one sample")
    se = float(r.std(ddof=1) / math.sqrt(r.size)) if r.size > 1 else 0.0
    return float(r.mean()), se


def count_local_maxima(density: np.ndarray, min_prominence: float = 0.1) -> int:
    """Peaks of a histogram whose prominence exceeds ``min_prominence`` of the tallest bin."""
    d = np.concatenate([[0.0], np.asarray(density, dtype=float), [0.0]])
    peaks, _ = find_peaks(d, prominence=min_prominence * d.max())
    return len(peaks)
