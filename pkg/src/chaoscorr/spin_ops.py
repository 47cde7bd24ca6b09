"""Angular-momentum and boson operators in fixed, labelled bases.

Ordering conventions used everywhere in the package:

* spin states by increasing ``m`` (``-j, -j+1, ..., j``);
* Fock states by increasing occupation ``n``;
* boson x spin product states boson-major (``n`` outer, ``m`` inner), so the
  flat index of ``(n, m)`` is ``n * (2j+1) + (m + j)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class SpinBasis:
    j: float
    m: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        two_j = 2 * self.j
        if self.j < 0 or abs(two_j - round(two_j)) > 1e-12:
            raise ValueError(f"j must be a non-negative half-integer, got {self.j}")
        m = -self.j + np.arange(round(two_j) + 1, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @property
    def dim(self) -> int:
        return len(self.m)


@dataclass(frozen=True)
class ProductBasis:
    """Truncated Fock space (``0..n_tr``) times a spin-``j`` multiplet."""

    j: float
    n_tr: int

    def __post_init__(self):
        if self.n_tr < 1:
            raise ValueError(f"n_tr must be >= 1, got {self.n_tr}")
        SpinBasis(self.j)

    @property
    def spin(self) -> SpinBasis:
        return SpinBasis(self.j)

    @property
    def dim(self) -> int:
        return (self.n_tr + 1) * self.spin.dim

    def labels(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(n, m)`` arrays for every flat index."""
        spin_m = self.spin.m
        n = np.repeat(np.arange(self.n_tr + 1), len(spin_m))
        m = np.tile(spin_m, self.n_tr + 1)
        return n, m


@dataclass(frozen=True)
class OperatorMatrix:
    entries: np.ndarray
    hermitian: bool = False
    basis_tag: str = ""

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"operator must be square, got shape {a.shape}")
        if self.hermitian and hermiticity_residual(a) > HERMITIAN_TOL * max(1.0, np.abs(a).max(initial=0.0)):
            raise ValueError("matrix flagged hermitian is not hermitian to 1e-12")
        a = a.view()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, other: "OperatorMatrix") -> np.ndarray:
        return self.entries @ other.entries


@dataclass(frozen=True)
class ParitySector:
    sector: str
    index_map: np.ndarray
    full_dim: int

    def __post_init__(self):
        if self.sector not in ("even", "odd"):
            raise ValueError(f"sector must be 'even' or 'odd', got {self.sector!r}")
        idx = np.asarray(self.index_map, dtype=np.intp)
        if len(np.unique(idx)) != len(idx):
            raise ValueError("sector indices must be distinct")
        if len(idx) and (idx.min() < 0 or idx.max() >= self.full_dim):
            raise IndexError("sector index out of basis bounds")
        idx.setflags(write=False)
        object.__setattr__(self, "index_map", idx)

    @property
    def dim(self) -> int:
        return len(self.index_map)


def hermiticity_residual(a: np.ndarray) -> float:
    return float(np.abs(a - a.conj().T).max(initial=0.0))


def build_jz(basis: SpinBasis) -> OperatorMatrix:
    return OperatorMatrix(np.diag(basis.m), hermitian=True, basis_tag=f"spin j={basis.j}")


def _ladder_up(basis: SpinBasis) -> np.ndarray:
    # <m+1|J+|m> = sqrt(j(j+1) - m(m+1)); column index m, row index m+1
    j, m = basis.j, basis.m[:-1]
    return np.diag(np.sqrt(j * (j + 1) - m * (m + 1)), k=-1)


def build_jx(basis: SpinBasis) -> OperatorMatrix:
    up = _ladder_up(basis)
    return OperatorMatrix(0.5 * (up + up.T), hermitian=True, basis_tag=f"spin j={basis.j}")


def build_jy(basis: SpinBasis) -> OperatorMatrix:
    up = _ladder_up(basis)
    return OperatorMatrix(-0.5j * (up - up.T), hermitian=True, basis_tag=f"spin j={basis.j}")


def build_boson_ops(n_tr: int) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Annihilation and creation operators on Fock states ``0..n_tr``.

    The truncated pair does not satisfy ``[a, a+] = 1`` on the top state: the
    ``(n_tr, n_tr)`` entry of the commutator is ``-n_tr``.
    """
    if n_tr < 1:
        raise ValueError(f"n_tr must be >= 1, got {n_tr}")
    a = np.diag(np.sqrt(np.arange(1, n_tr + 1, dtype=float)), k=1)
    tag = f"fock n_tr={n_tr}"
    return OperatorMatrix(a, basis_tag=tag), OperatorMatrix(a.T.copy(), basis_tag=tag)


def kt_parity(basis: SpinBasis) -> np.ndarray:
    """Eigenvalues of (-1)^(j + Jz) in basis order."""
    return _sign(basis.j + basis.m)


def dicke_parity(basis: ProductBasis) -> np.ndarray:
    """Eigenvalues of (-1)^(j + Jz + a+a) in basis order."""
    n, m = basis.labels()
    return _sign(basis.j + m + n)


def _sign(exponent: np.ndarray) -> np.ndarray:
    k = np.rint(exponent).astype(np.int64)
    if np.any(np.abs(exponent - k) > 1e-9):
        raise ValueError("parity exponent must be integral (j + m is always an integer)")
    return np.where(k % 2 == 0, 1, -1)


def parity_sector(
    basis: SpinBasis | ProductBasis,
    sector: str = "even",
    parity_rule: Callable[..., np.ndarray] | None = None,
) -> ParitySector:
    """Indices of basis states with parity +1 (even) or -1 (odd).

    The rule defaults to ``kt_parity`` for a bare spin basis and to
    ``dicke_parity`` for a product basis.
    """
    if parity_rule is None:
        parity_rule = dicke_parity if isinstance(basis, ProductBasis) else kt_parity
    if parity_rule is kt_parity and sector == "even":
        two_j = round(2 * basis.j)
        if two_j % 4 != 0:
            raise ValueError(f"kicked-top even sector requires even integer j, got j={basis.j}")
    want = 1 if sector == "even" else -1
    eig = parity_rule(basis)
    return ParitySector(sector, np.flatnonzero(eig == want), full_dim=basis.dim)


def dicke_even_dim(n_atoms: int, n_tr: int) -> int:
    """Closed-form even-sector size, valid for even ``n_atoms`` and even ``n_tr``."""
    return (n_atoms // 2 + 1) * (n_tr + 1) - n_tr // 2


def project(op: OperatorMatrix, sector: ParitySector) -> OperatorMatrix:
    if op.dim != sector.full_dim:
        raise ValueError(f"operator dim {op.dim} does not match basis dim {sector.full_dim}")
    idx = sector.index_map
    sub = op.entries[np.ix_(idx, idx)]
    return OperatorMatrix(sub, hermitian=op.hermitian, basis_tag=f"{op.basis_tag} [{sector.sector}]")


def cross_block(op: OperatorMatrix, sector: ParitySector) -> np.ndarray:
    """Matrix elements between ``sector`` and its complement."""
    inside = np.zeros(op.dim, dtype=bool)
    inside[sector.index_map] = True
    return op.entries[np.ix_(inside, ~inside)]


def kron_boson_spin(boson: np.ndarray, spin: np.ndarray) -> np.ndarray:
    """Operator on the boson-major product basis."""
    return np.kron(boson, spin)
