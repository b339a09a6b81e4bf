"""Gate sets over SU(d) and words over them."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..matcore import as_matrix, product
from ..weyl import weyl_indices, sigma

TARGET = -1  # symbol for the black-box unitary being inverted


def to_special(m: np.ndarray) -> np.ndarray:
    """Divide out the global phase so that det = 1 (principal root)."""
    m = as_matrix(m)
    return m / np.linalg.det(m) ** (1.0 / m.shape[0])


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    d = a.shape[0]
    return abs(abs(np.trace(a.conj().T @ b)) - d) <= tol * d


@dataclass
class GateSet:
    """Named gates, stored as SU(d) representatives.

    Symbols ``0..n-1`` are the gates, ``n..2n-1`` their formal inverses.
    """

    names: list[str]
    matrices: np.ndarray

    def __post_init__(self):
        self.matrices = np.stack([to_special(m) for m in self.matrices])
        if len(self.names) != self.matrices.shape[0]:
            raise ValueError("one name per gate")

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def alphabet(self) -> np.ndarray:
        """Gates followed by their inverses."""
        return np.concatenate([self.matrices, np.conj(np.swapaxes(self.matrices, 1, 2))])

    def symbol_name(self, s: int) -> str:
        if s == TARGET:
            return "U"
        n = self.size
        return self.names[s] if s < n else self.names[s - n] + "^-1"

    def weyl_symbols(self) -> dict[tuple[int, int], int | None]:
        """For each Weyl index, the gate equal to sigma_a up to phase (None for the identity)."""
        found: dict[tuple[int, int], int | None] = {}
        for a in weyl_indices(self.dim):
            if a.is_zero():
                found[(0, 0)] = None
                continue
            for i, m in enumerate(self.matrices):
                if equal_up_to_phase(m, sigma(a)):
                    found[(a.a1, a.a2)] = i
                    break
        return found

    @property
    def has_weyl(self) -> bool:
        return len(self.weyl_symbols()) == self.dim**2

    def hash(self) -> str:
        h = hashlib.sha256()
        h.update("|".join(self.names).encode())
        h.update(np.round(self.matrices, 12).tobytes())
        return h.hexdigest()


def standard_gateset() -> GateSet:
    """{H, T, X, Y, Z}: Clifford+T with the Paulis, universal and Weyl-complete for d = 2."""
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    t = np.diag([1, np.exp(1j * np.pi / 4)])
    x = np.array([[0, 1], [1, 0]])
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1, -1])
    return GateSet(["H", "T", "X", "Y", "Z"], np.array([h, t, x, y, z], dtype=complex))


def weyl_gateset(d: int) -> GateSet:
    idx = [a for a in weyl_indices(d) if not a.is_zero()]
    return GateSet([f"W{a.a1}{a.a2}" for a in idx], np.array([sigma(a) for a in idx]))


GATESETS = {"std": standard_gateset, "weyl2": lambda: weyl_gateset(2)}


@dataclass
class GateWord:
    """Symbols in matrix-product order: ``[s0, s1, ..]`` means ``G[s0] G[s1] ..``.

    The rightmost symbol acts first, as in ``V_L ... V_1 V_0``.
    """

    symbols: np.ndarray
    product: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.symbols = np.asarray(self.symbols, dtype=np.int64).ravel()

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __matmul__(self, other: "GateWord") -> "GateWord":
        return GateWord(np.concatenate([self.symbols, other.symbols]), self.product @ other.product)

    def inverse(self, n_gates: int) -> "GateWord":
        s = self.symbols[::-1].copy()
        if np.any(s == TARGET):
            raise ValueError("cannot formally invert a word containing the black-box target")
        s = np.where(s < n_gates, s + n_gates, s - n_gates)
        return GateWord(s, self.product.conj().T)

    def inverse_count(self, n_gates: int) -> int:
        return int(np.count_nonzero(self.symbols >= n_gates))

    @classmethod
    def empty(cls, d: int) -> "GateWord":
        return cls(np.zeros(0, dtype=np.int64), np.eye(d, dtype=np.complex128))


def free_reduce(symbols, n_gates: int) -> np.ndarray:
    """Cancel adjacent ``s s^-1`` pairs; the product is unchanged."""
    out: list[int] = []
    for s in np.asarray(symbols, dtype=np.int64).tolist():
        if out and s != TARGET and out[-1] != TARGET and abs(out[-1] - s) == n_gates:
            out.pop()
        else:
            out.append(s)
    return np.asarray(out, dtype=np.int64)


def word_product(symbols, gs: GateSet, target: np.ndarray | None = None) -> np.ndarray:
    """Recompute a word's product from scratch."""
    symbols = np.asarray(symbols, dtype=np.int64)
    alpha = gs.alphabet
    if np.any(symbols == TARGET):
        if target is None:
            raise ValueError("word contains the target symbol but no target was given")
        alpha = np.concatenate([alpha, as_matrix(target)[None]])
        symbols = np.where(symbols == TARGET, alpha.shape[0] - 1, symbols)
    if symbols.size == 0:
        return np.eye(gs.dim, dtype=np.complex128)
    return product(alpha[symbols])
