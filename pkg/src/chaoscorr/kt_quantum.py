"""Kicked-top Floquet operator on the even-parity subspace and its quasienergies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import NumericalError
from .spectral_stats import SpectrumSample
from .spin_ops import OperatorMatrix, SpinBasis, build_jx, build_jz, parity_sector, project


@dataclass(frozen=True)
class KtParams:
    j: int
    beta: float = math.pi / 3
    gamma: float = 0.0

    def __post_init__(self):
        if int(self.j) != self.j or self.j <= 0 or int(self.j) % 2:
            raise ValueError(f"j must be a positive even integer, got {self.j}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0 <= self.beta < 2 * math.pi:
            raise ValueError(f"beta must lie in [0, 2pi), got {self.beta}")


@dataclass(frozen=True)
class QuasienergySpectrum:
    alphas: np.ndarray
    params: KtParams | None = None

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        if np.any(a < -math.pi) or np.any(a >= math.pi):
            raise ValueError("quasienergies must lie in [-pi, pi)")
        if np.any(np.diff(a) < 0):
            raise ValueError("quasienergies must be sorted")
        object.__setattr__(self, "alphas", a)

    def __len__(self):
        return len(self.alphas)

    def as_sample(self) -> SpectrumSample:
        p = self.params
        meta = {} if p is None else {"j": p.j, "beta": p.beta, "gamma": p.gamma}
        return SpectrumSample(self.alphas, model="kicked_top", sector="even", params=meta)


@dataclass(frozen=True)
class _KickEigensystem:
    evals: np.ndarray  # eigenvalues of Jx^2 restricted to the even sector
    evecs: np.ndarray
    m: np.ndarray = field(repr=False)


@lru_cache(maxsize=8)
def _kick_eigensystem(j: int) -> _KickEigensystem:
    basis = SpinBasis(j)
    sector = parity_sector(basis, "even")
    jx = build_jx(basis).entries
    jx2 = project(OperatorMatrix(jx @ jx, hermitian=True), sector).entries
    try:
        w, v = np.linalg.eigh(jx2)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition of Jx^2 failed for j={j}") from exc
    m = basis.m[sector.index_map]
    for a in (w, v, m):
        a.setflags(write=False)
    return _KickEigensystem(w, v, m)


def even_sector_m(j: int) -> np.ndarray:
    return _kick_eigensystem(j).m


def build_floquet(params: KtParams) -> OperatorMatrix:
    """``exp(-i gamma/(2j) Jx^2) exp(-i beta Jz)`` on the even sector.

    The kick factor is assembled from the (cached, per-``j``) eigensystem of
    the real-symmetric even-sector ``Jx^2``, so gamma sweeps at fixed ``j``
    cost one matrix product each.
    """
    es = _kick_eigensystem(params.j)
    kick_phase = np.exp(-1j * params.gamma / (2 * params.j) * es.evals)
    kick = (es.evecs * kick_phase) @ es.evecs.T
    precession = np.exp(-1j * params.beta * es.m)
    return OperatorMatrix(kick * precession[np.newaxis, :], basis_tag=f"kt j={params.j} [even]")


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def wrap_phase(x: np.ndarray) -> np.ndarray:
    """Principal angle mapped onto the half-open interval [-pi, pi)."""
    a = np.angle(np.exp(1j * np.asarray(x, dtype=float)))
    return np.where(a >= math.pi, a - 2 * math.pi, a)


def quasienergies(F: OperatorMatrix | np.ndarray, params: KtParams | None = None) -> QuasienergySpectrum:
    u = F.entries if isinstance(F, OperatorMatrix) else np.asarray(F)
    try:
        lam = np.linalg.eigvals(u)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("eigenvalue computation of the Floquet operator failed") from exc
    dev = float(np.abs(np.abs(lam) - 1.0).max())
    if dev > 1e-6:
        raise ValueError(f"operator is not unitary: eigenvalue modulus deviates by {dev:.3g}")
    alpha = np.angle(lam)
    alpha = np.where(alpha >= math.pi, alpha - 2 * math.pi, alpha)
    return QuasienergySpectrum(np.sort(alpha), params)


def kt_spectrum(params: KtParams) -> QuasienergySpectrum:
    return quasienergies(build_floquet(params), params)
