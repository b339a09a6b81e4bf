"""Refocusing in dimension d with the Weyl map ``f(U) = prod_a sigma_a U sigma_a^dag``.

Distances are operator norms.  Near the identity ``f`` contracts
quadratically; diagonal unitaries are sent exactly to the identity; a Haar
conjugation brings U near-diagonal with small but positive probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.linalg import schur

from .matcore import (
    MAX_DIM,
    DimensionError,
    RngStream,
    as_matrix,
    haar_unitary,
    hs_norm,
    op_norm,
    project_special_unitary,
)
from .sequence import ProtocolTrace, RoundRecord, emit_sequence
from .weyl import WeylIndex, conjugation_product, sigma, weyl_basis

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class QuditConstants:
    dim: int
    alpha: float
    alpha_tight: float
    delta: float
    p_bound: float
    log10_p_bound: float
    nu: float

    @classmethod
    def for_dim(cls, d: int) -> "QuditConstants":
        if not 2 <= d <= MAX_DIM:
            raise DimensionError(f"dimension must be in [2, {MAX_DIM}]")
        alpha = 2.0 ** (d * d + 1)
        alpha_tight = 2.0 ** (d * d) + d * d * (4 * math.e - 9) - 1
        delta = 1 / (2 * alpha * d * d)
        log10_p = (d * d - 1) * math.log10(delta / 10)
        return cls(
            dim=d,
            alpha=alpha,
            alpha_tight=alpha_tight,
            delta=delta,
            p_bound=10.0**log10_p,
            log10_p_bound=log10_p,
            nu=2 * math.asin(delta / 2),
        )

    @property
    def shrink_radius(self) -> float:
        return 1 / (2 * self.alpha)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "alpha": self.alpha,
            "alpha_tight": self.alpha_tight,
            "delta": self.delta,
            "p_bound": self.p_bound,
            "log10_p_bound": self.log10_p_bound,
            "nu": self.nu,
            "shrink_radius": self.shrink_radius,
        }


def dist_to_identity(u: np.ndarray) -> float:
    return op_norm(u - np.eye(u.shape[0]))


def _require(u) -> np.ndarray:
    u = as_matrix(u)
    if not 2 <= u.shape[0] <= MAX_DIM:
        raise DimensionError(f"dimension must be in [2, {MAX_DIM}]")
    return u


def f_qudit(u, order: Sequence[WeylIndex] | None = None) -> np.ndarray:
    """Ordered product of ``sigma_a U sigma_a^dag``; smallest index leftmost by default."""
    u = _require(u)
    d = u.shape[0]
    conj = weyl_basis(d) if order is None else np.stack([sigma(a) for a in order])
    return conjugation_product(u, conj)


def _region(d: int, region: str) -> str:
    if region == "auto":
        return "qubit" if d == 2 else "generic"
    if region == "qubit" and d != 2:
        raise DimensionError("the qubit region needs d = 2")
    if region not in ("qubit", "generic"):
        raise ValueError(f"unknown region {region!r}")
    return region


def in_shrinking_region_d(u, region: str = "generic") -> bool:
    """``generic``: ||U - 1|| <= 1/(2 alpha).  ``qubit`` (d = 2): HS distance <= 1/4."""
    u = _require(u)
    d = u.shape[0]
    if _region(d, region) == "qubit":
        return hs_norm(u - np.eye(2)) <= 0.25
    return dist_to_identity(u) <= QuditConstants.for_dim(d).shrink_radius


def in_jumping_region_d(u, region: str = "generic") -> bool:
    """Ground truth: f(U) lands in the shrinking region."""
    return in_shrinking_region_d(f_qudit(u), region)


def nearest_special_diagonal(u) -> np.ndarray | None:
    """Diagonal SU(d) matrix with the phases of U's diagonal, best over the d branches."""
    u = _require(u)
    d = u.shape[0]
    diag = np.diagonal(u)
    if np.any(np.abs(diag) < 1e-12):
        return None
    phases = diag / np.abs(diag)
    base = phases / np.prod(phases) ** (1 / d)
    best, best_dist = None, math.inf
    for k in range(d):
        cand = np.diag(base * np.exp(2j * np.pi * k / d))
        dist = op_norm(u - cand)
        if dist < best_dist:
            best, best_dist = cand, dist
    return best


def near_diagonal(u, delta: float | None = None) -> bool:
    """Certificate for the jumping region: within ``delta`` of a diagonal SU(d) matrix."""
    u = _require(u)
    if delta is None:
        delta = QuditConstants.for_dim(u.shape[0]).delta
    dstar = nearest_special_diagonal(u)
    if dstar is None:
        return False
    return op_norm(u - dstar) <= delta


def hybrid_bound_check(u, v) -> tuple[float, float]:
    """(||f(U) - f(V)||, d^2 ||U - V||)."""
    u, v = _require(u), _require(v)
    if u.shape != v.shape:
        raise DimensionError("dimension mismatch")
    d = u.shape[0]
    return op_norm(f_qudit(u) - f_qudit(v)), d * d * op_norm(u - v)


def g_qudit(u, rng) -> tuple[np.ndarray, np.ndarray]:
    u = _require(u)
    v = haar_unitary(u.shape[0], rng)
    return v @ u @ v.conj().T, v


def diagonalizer(u) -> np.ndarray:
    """A V0 in SU(d) with V0 U V0^dag diagonal (U normal)."""
    u = _require(u)
    d = u.shape[0]
    # Schur form of a normal matrix is diagonal and its Q is unitary
    _, q = schur(u, output="complex")
    v0 = q.conj().T
    return v0 / np.linalg.det(v0) ** (1 / d)


@dataclass(frozen=True)
class QuditCost:
    dim: int
    k: int
    first_term: float
    second_term: float
    log10_n: str  # decimal string; can exceed the float range
    n: int | None
    unbounded: bool

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "k": str(self.k) if self.k > 2**53 else self.k,
            "first_term": _finite_or_str(self.first_term),
            "second_term": self.second_term,
            "log10_n": self.log10_n,
            "n": self.n,
            "unbounded": self.unbounded,
        }


def _finite_or_str(x: float):
    return x if math.isfinite(x) else repr(x)


def qudit_k(d: int, epsilon: float, eta: float, budget: int = DEFAULT_BUDGET) -> QuditCost:
    """Rounds k >= log2(eta)/log2(1-p) + log2 log2(1/(alpha eps)) and the pulse count d^(2k).

    Evaluated in extended precision, so the astronomically large k of the
    generic bound is reported exactly; ``n`` is None when it exceeds ``budget``.
    """
    c = QuditConstants.for_dim(d)
    if not 0 < epsilon < c.shrink_radius:
        raise ValueError(f"epsilon must lie in (0, 1/(2 alpha)) = (0, {c.shrink_radius:g})")
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    with mpmath.workdps(50):
        delta = 1 / (2 * mpmath.mpf(2) ** (d * d + 1) * d * d)
        p = (delta / 10) ** (d * d - 1)
        first = mpmath.log(eta) / mpmath.log1p(-p)
        second = mpmath.log(mpmath.log(1 / (mpmath.mpf(c.alpha) * epsilon), 2), 2)
        k = max(1, int(mpmath.ceil(first + second)))
        log10_n = 2 * k * mpmath.log10(d)
        unbounded = log10_n > mpmath.log10(budget)
        return QuditCost(
            dim=d,
            k=k,
            first_term=float(first),
            second_term=float(second),
            log10_n=mpmath.nstr(log10_n, 12),
            n=None if unbounded else d ** (2 * k),
            unbounded=bool(unbounded),
        )


class CostRefused(RuntimeError):
    def __init__(self, cost: QuditCost):
        super().__init__(
            f"refusing oblivious run: n = d^(2k) = {cost.dim}^(2*{cost.k}) ~ 10^{cost.log10_n} pulses"
        )
        self.cost = cost


Conjugator = Callable[[np.ndarray, np.random.Generator], np.ndarray]


@dataclass(frozen=True)
class QuditProtocolConfig:
    epsilon: float
    eta: float = 0.25
    mode: str = "monitored"
    seed: RngStream = RngStream(0)
    region: str = "auto"
    max_random_rounds: int = 500
    max_f_rounds: int = 64
    budget: int = DEFAULT_BUDGET
    conjugator: Conjugator | None = None  # replaces the Haar draw, for controlled experiments
    emit_sequence: bool = True

    def __post_init__(self):
        if self.mode not in ("oblivious", "monitored"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.eta < 1:
            raise ValueError("eta must lie in (0, 1)")


class GlobalPhaseError(ValueError):
    pass


def _step(u: np.ndarray) -> np.ndarray:
    return project_special_unitary(f_qudit(u))


def refocus_qudit(u, cfg: QuditProtocolConfig) -> ProtocolTrace:
    u0 = _require(u)
    d = u0.shape[0]
    det = complex(np.linalg.det(u0))
    if abs(det - 1) > 1e-10:
        # f(e^{i phi} U) = e^{i d^2 phi} f(U): a global phase is not refocusable
        raise GlobalPhaseError(f"det U = {det:.6g}; refocusing needs U in SU(d)")
    region = _region(d, cfg.region)
    gen = cfg.seed.generator()
    trace = ProtocolTrace(d, "weyl", "operator", cfg.mode, cfg.epsilon)

    def conjugate(cur):
        if cfg.conjugator is None:
            return g_qudit(cur, gen)
        v = cfg.conjugator(cur, gen)
        return v @ cur @ v.conj().T, v

    cur = u0
    if cfg.mode == "oblivious":
        cost = qudit_k(d, cfg.epsilon, cfg.eta, cfg.budget)
        if cost.unbounded:
            raise CostRefused(cost)
        for _ in range(cost.k):
            before = dist_to_identity(cur)
            cur, v = conjugate(cur)
            cur = _step(cur)
            trace.rounds.append(
                RoundRecord(before, dist_to_identity(cur), v, in_shrinking_region_d(cur, region))
            )
        trace.status = "completed fixed rounds"
    else:
        cur = _run_monitored(cur, cfg, region, conjugate, trace)
    trace.final = cur
    trace.final_eps = dist_to_identity(cur)
    trace.success = trace.final_eps <= cfg.epsilon
    if cfg.emit_sequence:
        emit_sequence(trace, u0)
    return trace


def _run_monitored(cur, cfg: QuditProtocolConfig, region: str, conjugate, trace: ProtocolTrace):
    jumped = False
    random_rounds = f_rounds = 0
    while True:
        eps = dist_to_identity(cur)
        if eps <= cfg.epsilon:
            trace.status = "reached epsilon"
            return cur
        pulse = None
        if jumped:
            if f_rounds >= cfg.max_f_rounds:
                trace.status = "f-iteration cap reached"
                return cur
            f_rounds += 1
            cur = _step(cur)
            trace.rounds.append(RoundRecord(eps, dist_to_identity(cur), None, False))
            continue
        nxt = _step(cur)
        if not in_shrinking_region_d(nxt, region):
            if random_rounds >= cfg.max_random_rounds:
                trace.status = "round cap exceeded before reaching a jumping region"
                return cur
            random_rounds += 1
            cur, pulse = conjugate(cur)
            nxt = _step(cur)
        jumped = in_shrinking_region_d(nxt, region)
        cur = nxt
        trace.rounds.append(RoundRecord(eps, dist_to_identity(cur), pulse, jumped))
