"""Classical kicked top: the sphere map, its tangent map, and Lyapunov exponents.

All functions accept a single state of shape ``(3,)`` or a stack ``(n, 3)``
and operate on the whole stack at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import task_rng

NORM_TOL = 1e-9


@dataclass(frozen=True)
class KtTrajectory:
    phi: np.ndarray  # (n_kicks,) or (n_traj, n_kicks)
    cos_theta: np.ndarray
    beta: float
    gamma: float
    initial: np.ndarray

    @property
    def n_kicks(self) -> int:
        return self.phi.shape[-1]

    def points(self) -> np.ndarray:
        """Section cloud as ``(..., n_kicks, 2)`` pairs ``(phi, cos_theta)``."""
        return np.stack([self.phi, self.cos_theta], axis=-1)


def _check_unit(s: np.ndarray) -> None:
    dev = np.abs(np.linalg.norm(s, axis=-1) - 1.0)
    if np.any(dev > NORM_TOL):
        raise ValueError(f"state is not on the unit sphere (|X| - 1 = {dev.max():.3g})")


def sphere_state(theta: float, phi: float) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def _step_raw(s: np.ndarray, cb: float, sb: float, gamma: float) -> np.ndarray:
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    xr = x * cb - y * sb
    yr = x * sb + y * cb
    th = gamma * xr
    ct, st = np.cos(th), np.sin(th)
    return np.stack([xr, yr * ct - z * st, yr * st + z * ct], axis=-1)


def kt_step(s, beta: float, gamma: float) -> np.ndarray:
    """One kick: rotate by ``beta`` about z, then by ``gamma * X'`` about x.

    This is the orthogonal composition of the two rotations; the output is
    renormalized to guard against round-off drift.
    """
    s = np.asarray(s, dtype=float)
    _check_unit(s)
    out = _step_raw(s, math.cos(beta), math.sin(beta), gamma)
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def kt_jacobian(s, beta: float, gamma: float) -> np.ndarray:
    """Exact derivative of ``kt_step`` (before renormalization), shape ``(..., 3, 3)``."""
    s = np.asarray(s, dtype=float)
    _check_unit(s)
    return _jacobian_raw(s, math.cos(beta), math.sin(beta), gamma)


def _jacobian_raw(s: np.ndarray, cb: float, sb: float, gamma: float) -> np.ndarray:
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    xr = x * cb - y * sb
    yr = x * sb + y * cb
    th = gamma * xr
    ct, st = np.cos(th), np.sin(th)
    # d(theta)/dX = gamma * (cb, -sb, 0)
    dth = gamma * np.stack([np.full_like(x, cb), np.full_like(x, -sb), np.zeros_like(x)], axis=-1)
    # Y'' = yr ct - z st ; Z'' = yr st + z ct
    dyr = np.stack([np.full_like(x, sb), np.full_like(x, cb), np.zeros_like(x)], axis=-1)
    dz = np.stack([np.zeros_like(x), np.zeros_like(x), np.ones_like(x)], axis=-1)
    row0 = np.stack([np.full_like(x, cb), np.full_like(x, -sb), np.zeros_like(x)], axis=-1)
    row1 = dyr * ct[..., None] - dz * st[..., None] + (-yr * st - z * ct)[..., None] * dth
    row2 = dyr * st[..., None] + dz * ct[..., None] + (yr * ct - z * st)[..., None] * dth
    return np.stack([row0, row1, row2], axis=-2)


def tangent_frame(s: np.ndarray) -> np.ndarray:
    """Orthonormal basis ``(2, 3)`` of the plane orthogonal to a unit vector ``s``."""
    s = np.asarray(s, dtype=float)
    helper = np.array([1.0, 0.0, 0.0]) if abs(s[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = helper - s * (helper @ s)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(s, e1)
    return np.stack([e1, e2])


def kt_trajectory(s0, n_kicks: int, beta: float, gamma: float) -> KtTrajectory:
    """Iterate ``n_kicks`` kicks, recording ``(phi, cos_theta)`` after each kick.

    ``s0`` may be a single state or a stack of states (one trajectory each).
    """
    s = np.asarray(s0, dtype=float)
    _check_unit(s)
    cb, sb = math.cos(beta), math.sin(beta)
    phi = np.empty(s.shape[:-1] + (n_kicks,))
    ct = np.empty_like(phi)
    cur = s
    for k in range(n_kicks):
        cur = _step_raw(cur, cb, sb, gamma)
        cur /= np.linalg.norm(cur, axis=-1, keepdims=True)
        phi[..., k] = np.arctan2(cur[..., 1], cur[..., 0])
        ct[..., k] = cur[..., 2]
    # arctan2 returns (-pi, pi]; fold pi onto -pi for the half-open domain
    phi[phi >= math.pi] -= 2 * math.pi
    np.clip(ct, -1.0, 1.0, out=ct)
    return KtTrajectory(phi, ct, beta, gamma, s.copy())


def _initial_tangent(s: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
    v = rng.standard_normal(s.shape) if rng is not None else np.broadcast_to([0.3, 0.5, 0.7], s.shape).copy()
    v = v - s * np.sum(v * s, axis=-1, keepdims=True)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def max_lyapunov(s0, n: int, beta: float, gamma: float,
                 rng: np.random.Generator | None = None) -> np.ndarray | float:
    """Benettin estimate of the largest Lyapunov exponent after ``n`` kicks.

    A tangent vector is pushed through the exact tangent map and renormalized
    every kick; the estimate is the mean log stretch per kick. No transient is
    discarded.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = np.asarray(s0, dtype=float)
    _check_unit(s)
    scalar = s.ndim == 1
    s = np.atleast_2d(s).copy()
    v = _initial_tangent(s, rng)
    cb, sb = math.cos(beta), math.sin(beta)
    acc = np.zeros(len(s))
    for _ in range(n):
        jac = _jacobian_raw(s, cb, sb, gamma)
        v = np.einsum("nij,nj->ni", jac, v)
        s = _step_raw(s, cb, sb, gamma)
        s /= np.linalg.norm(s, axis=-1, keepdims=True)
        # tangent space is invariant; re-project to remove round-off leakage
        v -= s * np.sum(v * s, axis=-1, keepdims=True)
        norm = np.linalg.norm(v, axis=-1)
        acc += np.log(norm)
        v /= norm[:, None]
    lam = acc / n
    return float(lam[0]) if scalar else lam


def lyapunov_qr_product(s0, n: int, beta: float, gamma: float) -> float:
    """Largest exponent from the QR-stabilized product of 3x3 Jacobians."""
    s = np.asarray(s0, dtype=float)
    q = np.eye(3)
    log_r = np.zeros(3)
    for _ in range(n):
        jac = kt_jacobian(s, beta, gamma)
        q, r = np.linalg.qr(jac @ q)
        d = np.sign(np.diag(r))
        q, r = q * d, r * d[:, None]
        log_r += np.log(np.abs(np.diag(r)))
        s = kt_step(s, beta, gamma)
    return float(log_r.max() / n)


def sample_sphere(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the unit sphere: cos(theta) and phi uniform."""
    ct = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(-math.pi, math.pi, n)
    st = np.sqrt(1.0 - ct * ct)
    return np.stack([st * np.cos(phi), st * np.sin(phi), ct], axis=-1)


@dataclass(frozen=True)
class LyapunovEstimate:
    mean: float
    stderr: float
    n_samples: int
    n_steps: int


def phase_avg_lyapunov(beta: float, gamma: float, n_samples: int, n_steps: int, seed: int,
                       chunk: int = 4096) -> LyapunovEstimate:
    """Sphere-averaged largest Lyapunov exponent (Monte Carlo, uniform measure)."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    s0 = sample_sphere(n_samples, task_rng(seed, "kt-lyapunov-init"))
    tangent_rng = task_rng(seed, "kt-lyapunov-tangent")
    lams = np.concatenate([
        max_lyapunov(s0[i:i + chunk], n_steps, beta, gamma, rng=tangent_rng)
        for i in range(0, n_samples, chunk)
    ])
    return LyapunovEstimate(float(lams.mean()), float(lams.std(ddof=1) / math.sqrt(n_samples)),
                            n_samples, n_steps)
