"""One-qubit refocusing.

``U = a 1 + i(b X + c Y + d Z)`` with ``a^2+b^2+c^2+d^2 = 1``.  The map
``f(U) = XUX YUY ZUZ U`` sends U to HS distance ``sqrt(8)|bd|`` from the
identity, which is quadratic in the distance ``sqrt(1-a)`` near the identity.
A random reflection ``U -> (r.sigma) U (r.sigma)^dag`` re-randomizes the
direction of ``(b, c, d)`` at fixed distance, so alternating the two lands
in the region where ``f`` converges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .matcore import (
    DimensionError,
    RngStream,
    as_generator,
    as_matrix,
    hs_norm_dist,
    project_special_unitary,
    random_unit_vector3,
    random_unit_vectors3,
    TOL,
)
from .sequence import ProtocolTrace, RoundRecord, emit_sequence
from .weyl import I2, PAULI_X, PAULI_Y, PAULI_Z

SHRINK_RADIUS = 0.25  # HS distance
JUMP_BOUND = 1 / math.sqrt(128)  # on |b d|
SQRT8 = math.sqrt(8)


class GlobalPhaseError(ValueError):
    pass


@dataclass(frozen=True)
class Su2Params:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        s = self.a**2 + self.b**2 + self.c**2 + self.d**2
        if abs(s - 1.0) > TOL.su2_norm:
            raise ValueError(f"a^2+b^2+c^2+d^2 = {s!r}, not 1")

    @property
    def u(self) -> np.ndarray:
        return np.array([self.b, self.c, self.d])

    def matrix(self) -> np.ndarray:
        return self.a * I2 + 1j * (self.b * PAULI_X + self.c * PAULI_Y + self.d * PAULI_Z)


def _require_qubit(u) -> np.ndarray:
    u = as_matrix(u)
    if u.shape[0] != 2:
        raise DimensionError(f"expected a 2x2 matrix, got {u.shape}")
    return u


def su2_decompose(u) -> Su2Params:
    u = _require_qubit(u)
    det = complex(np.linalg.det(u))
    if abs(det - 1.0) > TOL.det:
        raise GlobalPhaseError(
            f"det U = {det:.6g} (phase {np.angle(det):.6g} rad); divide out the global phase first"
        )
    return Su2Params(*_coords(u))


def _coords(u: np.ndarray) -> tuple[float, float, float, float]:
    a = (u[0, 0] + u[1, 1]).real / 2
    b = (u[0, 1] + u[1, 0]).imag / 2
    c = (u[0, 1] - u[1, 0]).real / 2
    d = (u[0, 0] - u[1, 1]).imag / 2
    return float(a), float(b), float(c), float(d)


def f_qubit(u) -> np.ndarray:
    u = _require_qubit(u)
    x, y, z = PAULI_X, PAULI_Y, PAULI_Z
    return x @ u @ x @ y @ u @ y @ z @ u @ z @ u


def hs_dist_to_identity(u) -> float:
    return hs_norm_dist(u, I2)


def epsilon_after_f(p: Su2Params) -> float:
    """Closed form of the HS distance from f(U) to the identity."""
    return SQRT8 * abs(p.b * p.d)


def in_shrinking_region(u) -> bool:
    return hs_dist_to_identity(_require_qubit(u)) <= SHRINK_RADIUS


def in_jumping_region(u) -> bool:
    p = su2_decompose(u)
    return abs(p.b * p.d) <= JUMP_BOUND


def _jumping(u: np.ndarray) -> bool:
    # no determinant check: det(f(U)) = det(U)^4 amplifies rounding 4x per round
    _, b, _, d = _coords(u)
    return abs(b * d) <= JUMP_BOUND


def pauli_dot(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return r[0] * PAULI_X + r[1] * PAULI_Y + r[2] * PAULI_Z


def g_qubit(u, rng) -> tuple[np.ndarray, np.ndarray]:
    """Conjugate by ``R = r.sigma`` for a uniformly random unit vector r."""
    u = _require_qubit(u)
    rmat = pauli_dot(random_unit_vector3(rng))
    return rmat @ u @ rmat.conj().T, rmat


def jump_probability_mc(
    samples: int,
    rng,
    threshold: float = JUMP_BOUND,
    confidence: float = 0.99,
    chunk: int = 1_000_000,
) -> tuple[float, float]:
    """Estimate P[|cos t sin t cos p| <= threshold] over uniform sphere directions.

    Returns the estimate and the normal-approximation half-width at ``confidence``.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    gen = as_generator(rng)
    hits = 0
    left = samples
    while left:
        n = min(chunk, left)
        r = random_unit_vectors3(n, gen)
        # (x, y, z) = (sin t cos p, sin t sin p, cos t)
        hits += int(np.count_nonzero(np.abs(r[:, 0] * r[:, 2]) <= threshold))
        left -= n
    p = hits / samples
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    return p, z * math.sqrt(p * (1 - p) / samples)


def qubit_m(epsilon: float) -> int:
    """f-iterations that take HS distance 1/4 down to ``epsilon``."""
    if not 0 < epsilon < SHRINK_RADIUS:
        raise ValueError("epsilon must lie in (0, 1/4)")
    return max(0, math.ceil(math.log2(math.log2(1 / (SQRT8 * epsilon))) + 1))


def qubit_k(epsilon: float, eta: float) -> int:
    """Smallest k with k >= log2(1/eta)/log2(4/3) + log2 log2(1/(sqrt8 eps)) + 1."""
    if not 0 < epsilon < SHRINK_RADIUS:
        raise ValueError("epsilon must lie in (0, 1/4)")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    bound = math.log2(1 / eta) / math.log2(4 / 3) + math.log2(math.log2(1 / (SQRT8 * epsilon))) + 1
    return max(1, math.ceil(bound))


def pulse_count_bound(epsilon: float, eta: float) -> float:
    """Upper bound (16/eta^5) log2^2(1/(sqrt8 eps)) on n = 4^k."""
    return 16 / eta**5 * math.log2(1 / (SQRT8 * epsilon)) ** 2


@dataclass(frozen=True)
class QubitProtocolConfig:
    epsilon: float
    eta: float
    mode: str = "oblivious"
    seed: RngStream = RngStream(0)
    max_random_rounds: int = 200
    emit_sequence: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon < SHRINK_RADIUS:
            raise ValueError("epsilon must lie in (0, 1/4)")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")
        if self.mode not in ("oblivious", "monitored"):
            raise ValueError(f"unknown mode {self.mode!r}")


def refocus_qubit(u, cfg: QubitProtocolConfig) -> ProtocolTrace:
    """Run ``(f o g)^k`` (oblivious) or the early-stopping variant (monitored)."""
    u0 = _require_qubit(u)
    su2_decompose(u0)  # rejects a global phase
    gen = cfg.seed.generator()
    trace = ProtocolTrace(2, "qubit", "hs", cfg.mode, cfg.epsilon)
    cur = u0
    if cfg.mode == "oblivious":
        for _ in range(qubit_k(cfg.epsilon, cfg.eta)):
            before = hs_dist_to_identity(cur)
            cur, rmat = g_qubit(cur, gen)
            jumped = _jumping(cur)
            cur = project_special_unitary(f_qubit(cur))
            trace.rounds.append(RoundRecord(before, hs_dist_to_identity(cur), rmat, jumped))
        trace.status = "completed fixed rounds"
    else:
        cur = _run_monitored(cur, cfg, gen, trace)
    trace.final = cur
    trace.final_eps = hs_dist_to_identity(cur)
    trace.success = trace.final_eps <= cfg.epsilon
    if cfg.emit_sequence:
        emit_sequence(trace, u0)
    return trace


def _run_monitored(cur, cfg: QubitProtocolConfig, gen, trace: ProtocolTrace) -> np.ndarray:
    jumped = False
    f_budget = qubit_m(cfg.epsilon) + 1
    random_rounds = 0
    while True:
        eps = hs_dist_to_identity(cur)
        if eps <= cfg.epsilon:
            trace.status = "reached epsilon"
            break
        pulse = None
        jumped_now = False
        if not jumped:
            if _jumping(cur):
                jumped_now = True
            else:
                if random_rounds >= cfg.max_random_rounds:
                    trace.status = "random phase did not reach the jumping region"
                    break
                cur, pulse = g_qubit(cur, gen)
                random_rounds += 1
                jumped_now = _jumping(cur)
            jumped = jumped_now
        else:
            if f_budget == 0:
                trace.status = "f-iteration budget exhausted"
                break
        if jumped:
            f_budget -= 1
        cur = project_special_unitary(f_qubit(cur))
        trace.rounds.append(RoundRecord(eps, hs_dist_to_identity(cur), pulse, jumped_now))
    return cur
