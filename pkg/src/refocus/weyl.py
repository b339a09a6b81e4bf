"""Shift and clock operators, the Weyl basis, and the Pauli matrices."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, total_ordering

import numpy as np

from .matcore import MAX_DIM, DimensionError

I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
for _m in (I2, PAULI_X, PAULI_Y, PAULI_Z):
    _m.flags.writeable = False

# conjugator order of the qubit map f(U) = XUX YUY ZUZ U
QUBIT_ORDER = (PAULI_X, PAULI_Y, PAULI_Z, I2)


def _check_dim(d: int) -> None:
    if not 2 <= d <= MAX_DIM:
        raise DimensionError(f"dimension must be in [2, {MAX_DIM}], got {d}")


def omega(d: int) -> complex:
    return complex(np.exp(2j * np.pi / d))


@lru_cache(maxsize=None)
def _shift(d: int) -> np.ndarray:
    x = np.zeros((d, d), dtype=np.complex128)
    x[(np.arange(d) + 1) % d, np.arange(d)] = 1.0
    x.flags.writeable = False
    return x


@lru_cache(maxsize=None)
def _clock(d: int) -> np.ndarray:
    # exact values at multiples of pi/2 keep d = 2, 4 free of rounding noise
    phases = np.exp(2j * np.pi * np.arange(d) / d)
    phases.real[np.abs(phases.real) < 1e-15] = 0.0
    phases.imag[np.abs(phases.imag) < 1e-15] = 0.0
    z = np.diag(phases)
    z.flags.writeable = False
    return z


def weyl_x(d: int) -> np.ndarray:
    """Cyclic shift: X|x> = |x+1 mod d>."""
    _check_dim(d)
    return _shift(d)


def weyl_z(d: int) -> np.ndarray:
    """Clock: Z|x> = w^x |x> with w = exp(2 pi i / d)."""
    _check_dim(d)
    return _clock(d)


@total_ordering
@dataclass(frozen=True)
class WeylIndex:
    a1: int
    a2: int
    dim: int

    def __post_init__(self):
        if not (0 <= self.a1 < self.dim and 0 <= self.a2 < self.dim):
            raise ValueError(f"Weyl index ({self.a1}, {self.a2}) out of range for d={self.dim}")

    @property
    def rank(self) -> int:
        return self.dim * self.a1 + self.a2

    def __lt__(self, other: "WeylIndex") -> bool:
        if self.dim != other.dim:
            return NotImplemented
        return self.rank < other.rank

    def is_zero(self) -> bool:
        return self.a1 == 0 and self.a2 == 0


def symplectic(a: WeylIndex, b: WeylIndex) -> int:
    """[a, b] = a^T Omega b with Omega = [[0, 1], [-1, 0]], reduced mod d."""
    return (a.a1 * b.a2 - a.a2 * b.a1) % a.dim


def weyl_indices(d: int) -> list[WeylIndex]:
    """All indices of [d]^2 in canonical order (d*a1 + a2 ascending)."""
    _check_dim(d)
    return [WeylIndex(a1, a2, d) for a1 in range(d) for a2 in range(d)]


@lru_cache(maxsize=None)
def _sigma(a1: int, a2: int, d: int) -> np.ndarray:
    s = np.linalg.matrix_power(_clock(d), a1) @ np.linalg.matrix_power(_shift(d), a2)
    s.flags.writeable = False
    return s


def sigma(a: WeylIndex) -> np.ndarray:
    """sigma_a = Z^a1 X^a2."""
    return _sigma(a.a1, a.a2, a.dim)


@lru_cache(maxsize=None)
def weyl_basis(d: int) -> np.ndarray:
    """Stack of all sigma_a in canonical order, shape (d^2, d, d)."""
    stack = np.stack([sigma(a) for a in weyl_indices(d)])
    stack.flags.writeable = False
    return stack


def conjugators(map_name: str, d: int) -> np.ndarray:
    """Ordered conjugators of the refocusing map: ``f(U) = prod_j S_j U S_j^dag``."""
    if map_name == "qubit":
        if d != 2:
            raise DimensionError("the qubit map needs d = 2")
        return np.stack(QUBIT_ORDER)
    if map_name == "weyl":
        return weyl_basis(d)
    raise ValueError(f"unknown map {map_name!r}")


def conjugation_product(u: np.ndarray, conj: np.ndarray) -> np.ndarray:
    out = np.eye(u.shape[0], dtype=np.complex128)
    for s in conj:
        out = out @ s @ u @ s.conj().T
    return out
