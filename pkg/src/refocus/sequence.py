"""Pulse sequences ``R_1 U R_2 U ... R_n U`` and the protocol traces they come from.

A composite map such as ``(f o g)^k`` is replayed symbolically on a *word*
``C_0 U C_1 U ... U C_n``: conjugation by ``V`` touches only the two ends,
and one application of ``f`` concatenates ``d^2`` copies of the word with the
neighbouring constants multiplied together.  The result is a stack of pulses
that never looks at the entries of ``U``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .matcore import (
    DimensionError,
    NotUnitaryError,
    TOL,
    as_matrix,
    hs_norm,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    product,
)
from .weyl import conjugators

FORMAT_VERSION = 1
NORMS = ("hs", "operator")
MAX_ENTRIES = 2**24  # complex entries in a flattened pulse stack (256 MiB)


def stack_unitarity_defect(stack: np.ndarray) -> float:
    """max over the stack of |M^dag M - 1|_max, one Gram entry at a time."""
    if stack.shape[0] == 0:
        return 0.0
    d = stack.shape[1]
    cols = [np.ascontiguousarray(stack[:, :, j]) for j in range(d)]
    defect = 0.0
    for i in range(d):
        for j in range(i, d):
            g = np.einsum("nk,nk->n", cols[i].conj(), cols[j])
            if i == j:
                g = g - 1.0
            defect = max(defect, float(np.max(np.abs(g))))
    return defect


def _check_stack_unitary(stack: np.ndarray) -> None:
    # pulses are long products, so allow more slack than for a single matrix
    d = stack.shape[1]
    defect = stack_unitarity_defect(stack)
    if defect > TOL.unitary * d * 1000:
        raise NotUnitaryError(f"pulse stack fails the unitarity check (defect {defect:.2e})")


@dataclass
class PulseSequence:
    """Pulses ``R_1..R_n`` (stack of shape ``(n, d, d)``), one per use of U.

    ``trailing`` holds an ``R_{n+1}`` that has not yet been absorbed by
    :func:`normalize`; a sequence with ``trailing is None`` is in normal form.
    """

    dim: int
    pulses: np.ndarray
    norm: str = "operator"
    trailing: np.ndarray | None = None
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        self.pulses = np.asarray(self.pulses, dtype=np.complex128).reshape(-1, self.dim, self.dim)
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")
        if self.norm == "hs" and self.dim != 2:
            raise DimensionError("the hs norm is only defined here for d = 2")
        if self.check:
            _check_stack_unitary(self.pulses)
        if self.trailing is not None:
            self.trailing = as_matrix(self.trailing)
            _check_stack_unitary(self.trailing[None])

    @property
    def uses_of_U(self) -> int:
        return self.pulses.shape[0]

    @property
    def has_trailing(self) -> bool:
        return self.trailing is not None

    def product(self, u: np.ndarray) -> np.ndarray:
        u = as_matrix(u)
        if u.shape[0] != self.dim:
            raise DimensionError(f"sequence is for d={self.dim}, U has d={u.shape[0]}")
        out = product(self.pulses @ u) if self.uses_of_U else np.eye(self.dim, dtype=np.complex128)
        if self.trailing is not None:
            out = out @ self.trailing
        return out


# -- protocol traces -------------------------------------------------------


@dataclass
class RoundRecord:
    eps_before: float
    eps_after: float
    pulse: np.ndarray | None  # conjugation drawn this round, None for an f-only round
    jumped: bool

    def to_json(self) -> dict:
        return {
            "eps_before": self.eps_before,
            "eps_after": self.eps_after,
            "pulse": None if self.pulse is None else matrix_to_json(self.pulse),
            "jumped": self.jumped,
        }


@dataclass
class ProtocolTrace:
    dim: int
    map: str  # "qubit" or "weyl": which conjugator order f uses
    norm: str
    mode: str
    epsilon: float
    rounds: list[RoundRecord] = field(default_factory=list)
    final: np.ndarray | None = None
    final_eps: float = float("nan")
    success: bool = False
    status: str = ""
    sequence: PulseSequence | None = None

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    @property
    def random_rounds(self) -> int:
        return sum(r.pulse is not None for r in self.rounds)

    @property
    def uses_of_U(self) -> int:
        """Uses of U in the flattened sequence, exact even when it is too long to build."""
        return (self.dim * self.dim) ** self.n_rounds

    def to_json(self, include_sequence: bool = True) -> dict:
        out = {
            "dim": self.dim,
            "map": self.map,
            "mode": self.mode,
            "norm": self.norm,
            "epsilon": self.epsilon,
            "rounds": [r.to_json() for r in self.rounds],
            "final_eps": self.final_eps,
            "success": self.success,
            "status": self.status,
        }
        if include_sequence:
            out["sequence"] = None if self.sequence is None else sequence_to_json(self.sequence)
        return out


# -- flattening ------------------------------------------------------------


class SequenceTooLong(ValueError):
    def __init__(self, uses: int, dim: int):
        super().__init__(f"flattened sequence would hold {uses} pulses of size {dim}x{dim}")
        self.uses = uses


def emit_sequence(trace: "ProtocolTrace", u: np.ndarray) -> None:
    """Attach the normalized sequence to ``trace``, or leave it None if too long to hold."""
    try:
        trace.sequence = normalize(flatten(trace, u))
    except SequenceTooLong as exc:
        trace.sequence = None
        trace.status += f"; sequence not emitted ({exc.uses} uses of U)"


def _conjugate_word(consts: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = consts.copy()
    out[0] = v @ out[0]
    out[-1] = out[-1] @ v.conj().T
    return out


def _apply_map(consts: np.ndarray, conj: np.ndarray) -> np.ndarray:
    """Word for ``prod_j S_j W S_j^dag`` given the constants of word W."""
    k = conj.shape[0]
    first, last, inner = consts[0], consts[-1], consts[1:-1]
    conj_dag = np.conj(np.swapaxes(conj, 1, 2))
    heads = conj @ first  # S_j C_0
    tails = last @ conj_dag  # C_n S_j^dag
    joints = tails[:-1] @ heads[1:]  # C_n S_j^dag S_{j+1} C_0
    parts = [heads[:1]]
    for j in range(k):
        parts.append(inner)
        parts.append(joints[j : j + 1] if j < k - 1 else tails[-1:])
    return np.concatenate(parts)


def _fold_phases(consts: np.ndarray) -> np.ndarray:
    """Make every constant but the first phase-canonical; the phases go to the first.

    Works in place.
    Canonical: the first entry of row 0 with modulus >= 1/(2 sqrt d) is real
    positive.  Scalars commute, so the product is unchanged.
    """
    if consts.shape[0] < 2:
        return consts
    d = consts.shape[1]
    row0 = consts[1:, 0, :]
    pick = np.argmax(np.abs(row0) >= 0.5 / np.sqrt(d), axis=1)
    ref = row0[np.arange(row0.shape[0]), pick]
    phases = ref / np.abs(ref)
    total = np.prod(phases)
    consts[1:] /= phases[:, None, None]
    consts[0] *= total / abs(total)
    return consts


def flatten(trace: ProtocolTrace, u: np.ndarray) -> PulseSequence:
    """Expand the composite map recorded in ``trace`` into explicit pulses.

    The returned sequence keeps its trailing pulse; ``normalize`` removes it.
    ``u`` is used only for the dimension check: pulses never depend on it.
    """
    u = as_matrix(u)
    d = trace.dim
    if u.shape[0] != d:
        raise DimensionError(f"trace is for d={d}, U has d={u.shape[0]}")
    if trace.uses_of_U * d * d > MAX_ENTRIES:
        raise SequenceTooLong(trace.uses_of_U, d)
    conj = conjugators(trace.map, d)
    consts = np.stack([np.eye(d, dtype=np.complex128)] * 2)
    for rnd in trace.rounds:
        if rnd.pulse is not None:
            consts = _conjugate_word(consts, rnd.pulse)
        consts = _apply_map(consts, conj)
    consts = _fold_phases(consts)
    return PulseSequence(d, consts[:-1], norm=trace.norm, trailing=consts[-1])


def map_sequence(map_name: str, d: int, rounds: int = 1, norm: str = "operator") -> PulseSequence:
    """Pulses of ``f`` iterated ``rounds`` times with no conjugations."""
    trace = ProtocolTrace(d, map_name, norm, "fixed", float("nan"))
    trace.rounds = [RoundRecord(np.nan, np.nan, None, False) for _ in range(rounds)]
    return flatten(trace, np.eye(d))


def normalize(seq: PulseSequence) -> PulseSequence:
    """Conjugate by ``R_{n+1}^dag`` so the product ends with U."""
    if seq.trailing is None:
        return seq
    if seq.uses_of_U == 0:
        return PulseSequence(seq.dim, seq.pulses, seq.norm, check=False)
    pulses = seq.pulses.copy()
    pulses[0] = seq.trailing @ pulses[0]
    return PulseSequence(seq.dim, pulses, seq.norm, check=False)


def verify(seq: PulseSequence, u: np.ndarray) -> float:
    """Distance from ``R_1 U ... R_n U (R_{n+1})`` to the identity in ``seq.norm``."""
    p = seq.product(u)
    diff = p - np.eye(seq.dim)
    return hs_norm(diff) if seq.norm == "hs" else op_norm(diff)


# -- serialization ---------------------------------------------------------


class SequenceFormatError(ValueError):
    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class UnsupportedVersionError(SequenceFormatError):
    pass


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _matrix_text(m: np.ndarray) -> str:
    rows_re = ",".join("[" + ",".join(_num(x) for x in row) + "]" for row in m.real)
    rows_im = ",".join("[" + ",".join(_num(x) for x in row) + "]" for row in m.imag)
    return f'{{"dim": {m.shape[0]}, "re": [{rows_re}], "im": [{rows_im}]}}'


def sequence_to_json(seq: PulseSequence) -> dict:
    return json.loads(serialize(seq))


def serialize(seq: PulseSequence) -> bytes:
    if seq.trailing is not None:
        raise ValueError("normalize the sequence before serializing it")
    pulses = ", ".join(_matrix_text(p) for p in seq.pulses)
    text = (
        f'{{"format_version": {FORMAT_VERSION}, "dim": {seq.dim}, "norm": "{seq.norm}", '
        f'"uses_of_U": {seq.uses_of_U}, "pulses": [{pulses}]}}'
    )
    return text.encode("ascii")


def _key_offset(raw: bytes, key: str) -> int:
    pos = raw.find(f'"{key}"'.encode())
    return max(pos, 0)


def deserialize(raw: bytes | str) -> PulseSequence:
    if isinstance(raw, str):
        raw = raw.encode("utf-8")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise SequenceFormatError("input is not UTF-8", exc.start) from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise SequenceFormatError(f"invalid JSON: {exc.msg}", offset) from None
    if not isinstance(obj, dict):
        raise SequenceFormatError("top level must be an object", 0)
    for key in ("format_version", "dim", "norm", "uses_of_U", "pulses"):
        if key not in obj:
            raise SequenceFormatError(f"missing field {key!r}", 0)
    if obj["format_version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"unsupported format_version {obj['format_version']!r} (expected {FORMAT_VERSION})",
            _key_offset(raw, "format_version"),
        )
    try:
        d = int(obj["dim"])
        pulses = [matrix_from_json(p) for p in obj["pulses"]]
        if any(p.shape[0] != d for p in pulses):
            raise DimensionError("pulse dimension differs from dim")
        stack = np.stack(pulses) if pulses else np.zeros((0, d, d), dtype=np.complex128)
        seq = PulseSequence(d, stack, norm=obj["norm"])
    except (ValueError, TypeError) as exc:
        raise SequenceFormatError(f"bad pulse data: {exc}", _key_offset(raw, "pulses")) from None
    if seq.uses_of_U != obj["uses_of_U"]:
        raise SequenceFormatError(
            f"uses_of_U = {obj['uses_of_U']} but {seq.uses_of_U} pulses given",
            _key_offset(raw, "uses_of_U"),
        )
    return seq
