"""Dicke Hamiltonian on the even-parity boson x spin subspace."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import EmptyShellError, NumericalError
from .spectral_stats import SpectrumSample
from .spin_ops import (OperatorMatrix, ProductBasis, SpinBasis, build_boson_ops, build_jx,
                       build_jz, parity_sector, project)

MAX_SECTOR_DIM = 20000


@dataclass(frozen=True)
class DickeParams:
    n_atoms: int = 30
    omega: float = 1.0
    omega0: float = 1.0
    xi: float = 1.0
    n_tr: int = 160

    def __post_init__(self):
        if self.n_atoms <= 0 or self.n_atoms % 2:
            raise ValueError(f"n_atoms must be a positive even integer, got {self.n_atoms}")
        if self.omega <= 0 or self.omega0 <= 0:
            raise ValueError("omega and omega0 must be positive")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")
        if self.n_tr < 1:
            raise ValueError("n_tr must be >= 1")

    @property
    def j(self) -> int:
        return self.n_atoms // 2

    @property
    def basis(self) -> ProductBasis:
        return ProductBasis(self.j, self.n_tr)


@dataclass(frozen=True)
class EnergyShell:
    e_center: float
    window: tuple[float, float]
    levels: np.ndarray

    @property
    def count(self) -> int:
        return len(self.levels)


def dicke_terms(p: DickeParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full-space ``a+a``, ``Jz`` and ``(a + a+) Jx`` on the boson-major product basis."""
    spin = SpinBasis(p.j)
    a, ad = build_boson_ops(p.n_tr)
    n_op = ad.entries @ a.entries
    eye_b = np.eye(p.n_tr + 1)
    eye_s = np.eye(spin.dim)
    number = np.kron(n_op, eye_s)
    jz = np.kron(eye_b, build_jz(spin).entries)
    coupling = np.kron(a.entries + ad.entries, build_jx(spin).entries)
    return number, jz, coupling


def build_dicke_full(p: DickeParams) -> OperatorMatrix:
    number, jz, coupling = dicke_terms(p)
    h = p.omega * number + p.omega0 * jz + (2 * p.xi / math.sqrt(p.n_atoms)) * coupling
    return OperatorMatrix(h, hermitian=True, basis_tag=f"dicke N={p.n_atoms} n_tr={p.n_tr}")


def build_dicke_hamiltonian(p: DickeParams, max_dim: int = MAX_SECTOR_DIM) -> OperatorMatrix:
    """Real-symmetric Dicke Hamiltonian on the even-parity sector.

    Assembled sector-wise from the diagonal labels and the two coupling
    bands so the full product-space matrix is never formed.
    """
    basis = p.basis
    sector = parity_sector(basis, "even")
    if sector.dim > max_dim:
        raise ValueError(f"even-sector dimension {sector.dim} exceeds cap {max_dim}")
    n_all, m_all = basis.labels()
    n, m = n_all[sector.index_map], m_all[sector.index_map]
    h = np.diag(p.omega * n + p.omega0 * m)
    # (a + a+) Jx connects (n, m) with (n +- 1, m +- 1)
    pos = {(int(nn), float(mm)): k for k, (nn, mm) in enumerate(zip(n, m))}
    g = 2 * p.xi / math.sqrt(p.n_atoms)
    j = p.j
    for k, (nn, mm) in enumerate(zip(n, m)):
        if nn >= p.n_tr:
            continue
        boson = math.sqrt(nn + 1)
        for dm in (1.0, -1.0):
            target = pos.get((int(nn) + 1, mm + dm))
            if target is None:
                continue
            spin = 0.5 * math.sqrt(j * (j + 1) - mm * (mm + dm))
            h[target, k] = h[k, target] = g * boson * spin
    return OperatorMatrix(h, hermitian=True,
                          basis_tag=f"dicke N={p.n_atoms} n_tr={p.n_tr} [even]")


def scaled_spectrum(H: OperatorMatrix, j: float, eigenvectors: bool = False):
    """Eigenvalues divided by ``j``, ascending; optionally with eigenvectors."""
    try:
        if eigenvectors:
            w, v = np.linalg.eigh(H.entries)
        else:
            w = np.linalg.eigvalsh(H.entries)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Hermitian eigensolver failed") from exc
    sample = SpectrumSample(w / j, model="dicke", sector="even", params={"j": j})
    return (sample, v) if eigenvectors else sample


def select_shell(spec, e_center: float = 1.2, lo_offset: float = 0.15,
                 hi_offset: float = 0.02) -> EnergyShell:
    levels = spec.levels if isinstance(spec, SpectrumSample) else np.asarray(spec, dtype=float)
    if np.any(np.diff(levels) < 0):
        raise ValueError("spectrum must be sorted")
    lo, hi = e_center - lo_offset, e_center + hi_offset
    i0, i1 = np.searchsorted(levels, lo, "left"), np.searchsorted(levels, hi, "right")
    if i1 <= i0:
        raise EmptyShellError(
            f"no levels in [{lo:.4g}, {hi:.4g}] (spectrum spans [{levels[0]:.4g}, {levels[-1]:.4g}]); "
            "increase N or widen the window")
    return EnergyShell(e_center, (lo, hi), levels[i0:i1].copy())


def dicke_shell(p: DickeParams, e_center: float = 1.2, lo_offset: float = 0.15,
                hi_offset: float = 0.02) -> EnergyShell:
    spec = scaled_spectrum(build_dicke_hamiltonian(p), p.j)
    return select_shell(spec, e_center, lo_offset, hi_offset)


@dataclass(frozen=True)
class ConvergenceReport:
    max_shift: float
    n_tr: int
    n_tr_refined: int
    count: int
    count_refined: int

    @property
    def converged(self) -> bool:
        return self.count == self.count_refined


def truncation_convergence(p: DickeParams, e_center: float = 1.2, lo_offset: float = 0.15,
                           hi_offset: float = 0.02, n_tr_factor: float = 1.25,
                           n_tr_refined: int | None = None) -> ConvergenceReport:
    """Largest rank-matched shell-level shift when the boson cutoff is raised."""
    if n_tr_refined is None:
        n_tr_refined = math.ceil(n_tr_factor * p.n_tr)
    a = dicke_shell(p, e_center, lo_offset, hi_offset)
    q = DickeParams(p.n_atoms, p.omega, p.omega0, p.xi, n_tr_refined)
    b = dicke_shell(q, e_center, lo_offset, hi_offset)
    if a.count != b.count:
        return ConvergenceReport(math.inf, p.n_tr, n_tr_refined, a.count, b.count)
    return ConvergenceReport(float(np.abs(a.levels - b.levels).max()), p.n_tr, n_tr_refined,
                             a.count, b.count)


def coherent_state(p: DickeParams, q: float, pq: float, P: float, Q: float) -> np.ndarray:
    """Glauber x Bloch coherent state on the full product basis, normalized.

    ``alpha = sqrt(j/2) (q + i p)``, ``z = sqrt((1+P)/(1-P)) exp(iQ)``.
    """
    j = p.j
    alpha = math.sqrt(j / 2) * (q + 1j * pq)
    n = np.arange(p.n_tr + 1)
    boson = np.exp(n * np.log(alpha + 0j) - 0.5 * gammaln(n + 1)) if alpha != 0 else (n == 0).astype(complex)
    boson = boson / np.linalg.norm(boson)
    k = np.arange(2 * j + 1)  # k = j + m
    c, s = math.sqrt(max(0.0, (1 + P) / 2)), math.sqrt(max(0.0, (1 - P) / 2))
    log_binom = 0.5 * (gammaln(2 * j + 1) - gammaln(k + 1) - gammaln(2 * j - k + 1))
    with np.errstate(divide="ignore"):
        amp = np.exp(log_binom + k * np.log(c) + (2 * j - k) * np.log(s))
    amp = np.nan_to_num(amp)
    spin = amp * np.exp(1j * k * Q)
    spin = spin / np.linalg.norm(spin)
    return np.kron(boson, spin)
