"""Small dense complex matrices: products, distances, random unitaries.

Every operator in the package is a plain ``numpy`` array of shape ``(d, d)``
and dtype ``complex128``.  The helpers here validate shape and unitarity at
the boundaries and leave the arithmetic to numpy.
"""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass
from typing import Iterator

import numpy as np

MAX_DIM = 8


@dataclass(frozen=True)
class Tolerances:
    atol: float = 1e-12
    unitary: float = 1e-12  # scaled by d
    det: float = 1e-10
    su2_norm: float = 1e-10


TOL = Tolerances()


@contextlib.contextmanager
def tolerances(**overrides) -> Iterator[Tolerances]:
    """Temporarily replace fields of the global tolerance record."""
    global TOL
    saved = TOL
    TOL = dataclasses.replace(TOL, **overrides)
    try:
        yield TOL
    finally:
        TOL = saved


class DimensionError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def unitarity_defect(m: np.ndarray) -> float:
    d = m.shape[0]
    return float(np.max(np.abs(m.conj().T @ m - np.eye(d))))


def check_unitary(m, tol: float | None = None) -> np.ndarray:
    """Return ``m`` as a complex array, raising if it is not unitary."""
    a = as_matrix(m)
    d = a.shape[0]
    limit = (TOL.unitary if tol is None else tol) * d
    defect = unitarity_defect(a)
    if defect > limit:
        raise NotUnitaryError(f"|M^dag M - 1|_max = {defect:.3e} exceeds {limit:.1e}")
    return a


def project_special_unitary(m: np.ndarray) -> np.ndarray:
    """Nearest unitary (polar factor) with the determinant phase divided out.

    Iterated maps that reuse their argument d^2 times amplify rounding away
    from SU(d) geometrically; protocols call this once per round.
    """
    w, _, vh = np.linalg.svd(m)
    p = w @ vh
    return p / np.linalg.det(p) ** (1.0 / p.shape[0])


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def multiply(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return a @ b


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def op_norm(a: np.ndarray) -> float:
    """Largest singular value, from the eigenvalues of ``a^dag a``."""
    w = np.linalg.eigvalsh(a.conj().T @ a)
    return float(np.sqrt(max(w[-1], 0.0)))


def op_norm_dist(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    return op_norm(a - b)


def op_norm_dist_many(stack: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Operator-norm distance from every matrix in ``stack`` to ``b``."""
    diff = stack - b[None, :, :]
    gram = np.conj(np.swapaxes(diff, 1, 2)) @ diff
    w = np.linalg.eigvalsh(gram)[:, -1]
    return np.sqrt(np.clip(w, 0.0, None))


def hs_norm(a: np.ndarray) -> float:
    """Half the Frobenius norm; the qubit convention 1/2 sqrt(tr A^dag A)."""
    return 0.5 * float(np.sqrt(np.sum(np.abs(a) ** 2)))


def hs_norm_dist(a, b) -> float:
    a, b = as_matrix(a), as_matrix(b)
    _same_dim(a, b)
    if a.shape[0] != 2:
        raise DimensionError("the Hilbert-Schmidt distance is only used for qubits (d = 2)")
    return hs_norm(a - b)


def dist_to_identity(u: np.ndarray, norm: str = "operator") -> float:
    eye = np.eye(u.shape[0])
    if norm == "hs":
        return hs_norm_dist(u, eye)
    if norm == "operator":
        return op_norm_dist(u, eye)
    raise ValueError(f"unknown norm {norm!r}")


def product(mats) -> np.ndarray:
    """Ordered product ``M_0 M_1 ... M_{n-1}`` of a stack, by pairwise reduction."""
    stack = np.asarray(mats, dtype=np.complex128)
    if stack.ndim != 3:
        raise DimensionError("expected a stack of matrices")
    if stack.shape[0] == 0:
        return np.eye(stack.shape[1], dtype=np.complex128)
    while stack.shape[0] > 1:
        if stack.shape[0] % 2:
            tail = stack[-1:]
            stack = np.concatenate([stack[:-2:2] @ stack[1:-1:2], tail])
        else:
            stack = stack[0::2] @ stack[1::2]
    return stack[0].copy()


# -- randomness ------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream named by ``(seed, stream_id)``.

    Backed by the counter-based Philox generator, keyed directly by the pair,
    so distinct stream ids give independent streams.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not 0 <= v < 2**64:
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def generator(self) -> np.random.Generator:
        key = (self.stream_id << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, index: int) -> "RngStream":
        """Substream for trial ``index``; a pure function of the parent and index."""
        ss = np.random.SeedSequence(entropy=[self.stream_id, index, 0x5EED])
        return RngStream(self.seed, int(ss.generate_state(1, np.uint64)[0]))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot make a generator from {type(rng).__name__}")


def haar_unitaries(d: int, n: int, rng) -> np.ndarray:
    """``n`` Haar-random SU(d) matrices, shape ``(n, d, d)``.

    QR of a complex Ginibre matrix, with the phases of R's diagonal moved
    into Q, then the determinant divided out by its principal d-th root.
    """
    if d < 2:
        raise DimensionError("d must be at least 2")
    gen = as_generator(rng)
    while True:
        g = (gen.standard_normal((n, d, d)) + 1j * gen.standard_normal((n, d, d))) / np.sqrt(2)
        q, r = np.linalg.qr(g)
        diag = np.diagonal(r, axis1=1, axis2=2)
        if np.all(np.abs(diag) > 1e-300):
            break
    q = q * (diag / np.abs(diag))[:, None, :]
    det = np.linalg.det(q)
    return q / (det ** (1.0 / d))[:, None, None]


def haar_unitary(d: int, rng) -> np.ndarray:
    return haar_unitaries(d, 1, rng)[0]


def random_unit_vectors3(n: int, rng) -> np.ndarray:
    gen = as_generator(rng)
    v = gen.standard_normal((n, 3))
    norms = np.linalg.norm(v, axis=1)
    while np.any(norms == 0.0):  # pragma: no cover - probability zero
        bad = norms == 0.0
        v[bad] = gen.standard_normal((int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1)
    return v / norms[:, None]


def random_unit_vector3(rng) -> np.ndarray:
    return random_unit_vectors3(1, rng)[0]


# -- exchange format -------------------------------------------------------


def matrix_to_json(m: np.ndarray) -> dict:
    m = as_matrix(m)
    return {"dim": m.shape[0], "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    try:
        d = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj["im"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed matrix object: {exc}") from None
    if re.shape != (d, d) or im.shape != (d, d):
        raise DimensionError(f"matrix entries must be {d}x{d}")
    return as_matrix(re + 1j * im)
