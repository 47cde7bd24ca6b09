"""Adaptive Dormand-Prince 8(5,3) integration of many trajectories at once.

All trajectories in a batch share one step size, chosen so that the worst
trajectory meets the tolerance. This trades a few extra steps for running
every stage as a single vectorized evaluation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate._ivp import dop853_coefficients as _dop

from .errors import NumericalError

N_STAGES = _dop.N_STAGES
A = _dop.A[:N_STAGES, :N_STAGES]
B = _dop.B
C = _dop.C[:N_STAGES]
E3 = _dop.E3
E5 = _dop.E5

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0

Rhs = Callable[[np.ndarray], np.ndarray]


def rk_step(fun: Rhs, y: np.ndarray, f: np.ndarray, h) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One DOP853 step of size ``h`` for an autonomous system.

    ``y`` and ``f`` are ``(n, d)``; ``h`` is a scalar or an ``(n,)`` array of
    per-row step sizes. Returns ``(y_new, f_new, K)`` with ``K`` of shape
    ``(N_STAGES + 1, n, d)``.
    """
    h = np.asarray(h, dtype=float)
    hcol = h[..., None] if h.ndim else h
    K = np.empty((N_STAGES + 1,) + y.shape)
    K[0] = f
    for s in range(1, N_STAGES):
        dy = np.tensordot(A[s, :s], K[:s], axes=1) * hcol
        K[s] = fun(y + dy)
    y_new = y + hcol * np.tensordot(B, K[:N_STAGES], axes=1)
    f_new = fun(y_new)
    K[-1] = f_new
    return y_new, f_new, K


def error_norms(K: np.ndarray, h: float, scale: np.ndarray) -> np.ndarray:
    """Per-row scaled error estimate (same norm as the reference DOP853)."""
    err5 = np.tensordot(E5, K, axes=1) / scale
    err3 = np.tensordot(E3, K, axes=1) / scale
    e5 = np.sum(err5 ** 2, axis=-1)
    e3 = np.sum(err3 ** 2, axis=-1)
    denom = e5 + 0.01 * e3
    d = K.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(denom > 0, abs(h) * e5 / np.sqrt(denom * d), 0.0)
    return out


@dataclass
class StepRecord:
    t0: float
    h: float
    y0: np.ndarray
    y1: np.ndarray


@dataclass
class EnsembleSolution:
    t_final: float
    y_final: np.ndarray
    n_steps: int
    n_rejected: int
    ts: np.ndarray | None = None
    ys: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


def _initial_step(fun: Rhs, y0, f0, rtol, atol) -> float:
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 8)
    return min(100 * h0, h1)


def integrate_ensemble(fun: Rhs, y0: np.ndarray, t_max: float, rtol: float = 1e-10,
                       atol: float = 1e-10, on_step: Callable[[StepRecord], None] | None = None,
                       save_every: float | None = None, max_steps: int = 50_000_000,
                       h_max: float = np.inf,
                       stride_hook: Callable[[float, np.ndarray], np.ndarray] | None = None,
                       project: Callable[[np.ndarray], np.ndarray] | None = None,
                       ) -> EnsembleSolution:
    """Integrate ``y' = fun(y)`` from ``t = 0`` to ``t_max`` for a ``(n, d)`` batch.

    ``on_step`` is called after every accepted step. If ``save_every`` is set,
    the step size is capped so that every multiple of it is hit exactly; at
    those times the state is stored, or, when ``stride_hook`` is given, passed
    through ``stride_hook(t, y)`` and replaced by its return value instead.
    ``project`` maps every accepted state back onto an invariant manifold.
    """
    y = np.array(y0, dtype=float)
    if y.ndim != 2:
        raise ValueError("y0 must have shape (n, d)")
    direction = 1.0 if t_max >= 0 else -1.0
    span = abs(t_max)
    g = fun if direction > 0 else (lambda z: -fun(z))
    f = g(y)
    h = min(_initial_step(g, y, f, rtol, atol), h_max, span if span > 0 else np.inf)
    t = 0.0
    steps = rejected = 0
    ts, ys = None, None
    next_save = None
    if save_every is not None:
        ts, ys = [0.0], [y.copy()]
        next_save = save_every
    h_min_floor = 1e-14 * max(1.0, span)
    while t < span:
        if steps >= max_steps:
            raise NumericalError(f"step budget of {max_steps} exhausted at t={t}")
        stop = span if next_save is None else min(span, next_save)
        h_free = h
        capped = stop - t < h
        h = min(h, stop - t)
        if h < h_min_floor and stop - t > h_min_floor:
            raise NumericalError(f"step size underflow at t={direction * t:.6g}")
        y_new, f_new, K = rk_step(g, y, f, h)
        scale = atol + np.maximum(np.abs(y), np.abs(y_new)) * rtol
        err = float(np.max(error_norms(K, h, scale)))
        if not np.isfinite(err):
            raise NumericalError(f"non-finite state or error estimate at t={direction * t:.6g}")
        if err <= 1.0:
            if project is not None:
                y_new = project(y_new)
                f_new = g(y_new)
            rec = StepRecord(direction * t, direction * h, y, y_new)
            t = stop if abs(stop - (t + h)) < 1e-12 * max(1.0, span) else t + h
            y, f = y_new, f_new
            steps += 1
            if on_step is not None:
                on_step(rec)
            if next_save is not None and t >= next_save - 1e-12 * max(1.0, span):
                if stride_hook is not None:
                    y = stride_hook(direction * t, y)
                    f = g(y)
                else:
                    ts.append(direction * t)
                    ys.append(y.copy())
                next_save += save_every
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** ERROR_EXPONENT)
            h = min(h * factor, h_max)
            if capped:
                # a step shortened to land on a stride point says little about the free step size
                h = max(h, min(h_free, h_max)) if factor >= 1 else min(h, h_free)
        else:
            rejected += 1
            h *= max(MIN_FACTOR, SAFETY * err ** ERROR_EXPONENT)
    sol = EnsembleSolution(direction * t, y, steps, rejected)
    if ts is not None and stride_hook is None:
        sol.ts, sol.ys = np.array(ts), np.stack(ys)
    return sol
