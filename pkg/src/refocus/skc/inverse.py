"""Approximate inverses built from forward uses of U, and inverse-free compilation.

Given W from the net with ``V = W U`` near the identity, the refocusing map
iterated m times, ``f^m(V) = C_0 V C_1 V ... V C_n``, is within the contraction
bound of the identity.  Conjugating by ``C_n`` and dropping the final U leaves

    g = (C_n C_0) W U C_1 W U ... C_{n-1} W,      g U = C_n f^m(V) C_n^dag,

a product of gates and n - 1 uses of U that approximates U^dag.
"""
from __future__ import annotations

import math

import numpy as np

from ..matcore import as_matrix, hs_norm, op_norm, product
from ..qudit import QuditConstants
from ..sequence import _apply_map
from .gates import TARGET, GateSet, GateWord, to_special, word_product
from .net import EpsilonNet, nearest, nearest_distances

QUBIT_RADIUS = 0.25  # HS
C_CONSTANT = 1.0  # ||g_eps(U) - U^dag|| <= C eps, with m chosen from the explicit bound
MAX_M = 16


class InverseApproxError(ValueError):
    def __init__(self, message: str, required_radius: float):
        super().__init__(message)
        self.required_radius = required_radius


def _weyl_group_words(gs: GateSet) -> tuple[dict[bytes, np.ndarray], np.ndarray, list[int]]:
    """Words for every element of the finite group generated by the Weyl gates."""
    sym = gs.weyl_symbols()
    if len(sym) != gs.dim**2:
        raise ValueError("gate set does not contain all Weyl operators")
    gens = sorted(i for i in sym.values() if i is not None)
    d = gs.dim
    eye = np.eye(d, dtype=np.complex128)
    table = {_group_key(eye): np.zeros(0, dtype=np.int64)}
    frontier = [(eye, np.zeros(0, dtype=np.int64))]
    while frontier:
        nxt = []
        for m, w in frontier:
            for g in gens:
                p = m @ gs.matrices[g]
                k = _group_key(p)
                if k not in table:
                    table[k] = np.append(w, g)
                    nxt.append((p, table[k]))
        frontier = nxt
    return table, gens, sym


def _group_key(m: np.ndarray) -> bytes:
    return np.round(np.concatenate([m.real.ravel(), m.imag.ravel()]) * 1e6).astype(np.int64).tobytes()


def _conjugator_stack(gs: GateSet, mode: str) -> np.ndarray:
    sym = gs.weyl_symbols()
    eye = np.eye(gs.dim, dtype=np.complex128)
    pick = lambda key: eye if sym[key] is None else gs.matrices[sym[key]]  # noqa: E731
    if mode == "qubit":
        # X U X, Y U Y, Z U Z, U; sigma_(1,1) = ZX is Y up to phase
        return np.stack([pick((0, 1)), pick((1, 1)), pick((1, 0)), eye])
    return np.stack([pick(k) for k in sorted(sym, key=lambda a: a[0] * gs.dim + a[1])])


def choose_m(eps0: float, eps: float, mode: str, alpha_tight: float | None = None) -> tuple[int, float]:
    """Smallest m whose explicit contraction bound is <= eps, with that bound (operator norm)."""
    for m in range(MAX_M + 1):
        if eps0 == 0.0:
            return m, 0.0
        if mode == "qubit":
            # HS: eps_m <= sqrt8^(2^m - 1) eps0^(2^m); operator norm is sqrt2 times HS on SU(2)
            log_hs = (2**m - 1) * math.log(math.sqrt(8)) + 2**m * math.log(eps0)
            bound = math.sqrt(2) * math.exp(log_hs)
        else:
            a = alpha_tight
            bound = math.exp(2**m * math.log(a * eps0)) / a
        if bound <= eps:
            return m, bound
    raise InverseApproxError(f"no m <= {MAX_M} reaches eps = {eps:g} from eps0 = {eps0:g}", eps)


def inverse_approx(
    u,
    eps: float,
    net: EpsilonNet,
    gs: GateSet,
    mode: str = "auto",
    mu: float = 0.5,
    u_word: GateWord | None = None,
) -> GateWord:
    """A word g over the gates and U with ``||g - U^dag|| <= eps`` (operator norm, C = 1).

    ``mode="qubit"`` (default for d = 2) uses the qubit map and its HS
    analysis, requiring ``||W U - 1||_HS <= 1/4``; ``mode="generic"`` uses the
    Weyl map with ``alpha_tight ||W U - 1|| <= mu < 1``.  Uses of U appear as the
    symbol ``TARGET`` unless ``u_word`` spells U over the gates.
    """
    d = gs.dim
    if not gs.has_weyl:
        raise ValueError("inverse approximation needs every Weyl operator in the gate set")
    if mode == "auto":
        mode = "qubit" if d == 2 else "generic"
    if mode not in ("qubit", "generic") or (mode == "qubit" and d != 2):
        raise ValueError(f"bad mode {mode!r} for d = {d}")
    if not eps > 0:
        raise ValueError("eps must be positive")
    u = to_special(u) if u_word is None else u_word.product
    w, _ = nearest(net, u.conj().T)
    v = w.product @ u
    eye = np.eye(d)
    alpha_tight = QuditConstants.for_dim(d).alpha_tight
    if mode == "qubit":
        eps0 = hs_norm(v - eye)
        if eps0 > QUBIT_RADIUS:
            raise InverseApproxError(
                f"nearest entry leaves ||WU - 1||_HS = {eps0:.4g}; needs a net of HS radius <= {QUBIT_RADIUS}",
                QUBIT_RADIUS,
            )
    else:
        eps0 = op_norm(v - eye)
        if alpha_tight * eps0 > mu:
            raise InverseApproxError(
                f"nearest entry leaves ||WU - 1|| = {eps0:.4g}; needs a net of radius <= {mu / alpha_tight:.4g}",
                mu / alpha_tight,
            )
    m, bound = choose_m(eps0, eps, mode, alpha_tight)
    word = _expand(w, u, u_word, m, gs, mode)
    word.meta = {"mode": mode, "m": m, "eps0": eps0, "bound": bound, "C": C_CONSTANT, "W_length": len(w)}
    return word


def _expand(w: GateWord, u: np.ndarray, u_word: GateWord | None, m: int, gs: GateSet, mode: str) -> GateWord:
    d = gs.dim
    if m == 0:
        return GateWord(w.symbols.copy(), w.product.copy())
    conj = _conjugator_stack(gs, mode)
    consts = np.stack([np.eye(d, dtype=np.complex128)] * 2)
    for _ in range(m):
        consts = _apply_map(consts, conj)
    table, _, _ = _weyl_group_words(gs)

    def spell(c):
        try:
            return table[_group_key(c)]
        except KeyError:  # pragma: no cover - constants lie in the group by construction
            raise RuntimeError("pulse constant outside the Weyl group") from None

    n = consts.shape[0] - 1
    lead = consts[-1] @ consts[0]
    u_sym = np.array([TARGET]) if u_word is None else u_word.symbols
    pieces = [spell(lead), w.symbols]
    mats = [lead, w.product]
    for j in range(1, n):
        pieces += [u_sym, spell(consts[j]), w.symbols]
        mats += [u, consts[j], w.product]
    return GateWord(np.concatenate(pieces), product(np.stack(mats)))


def audit_shrinking_landing(net: EpsilonNet, samples: np.ndarray) -> float:
    """Largest ``||W U - 1||_HS`` with W = nearest(net, U^dag), over SU(2) samples."""
    if net.dim != 2:
        raise ValueError("the qubit shrinking-region audit is for d = 2")
    # ||W U - 1|| = ||W - U^dag||, and HS = op / sqrt2 on SU(2)
    daggers = np.conj(np.swapaxes(samples, 1, 2))
    return float(nearest_distances(net, daggers).max() / math.sqrt(2))


def inverse_free_compile(
    u,
    eps: float,
    gs: GateSet,
    net: EpsilonNet,
    inverse_net: EpsilonNet | None = None,
    max_depth: int = 6,
) -> GateWord:
    """Compile with inverses to eps/2, then replace each formal inverse by a forward word.

    With L_inv inverse symbols, each is replaced by ``inverse_approx`` at
    budget ``eps / (2 L_inv C)``; unitary invariance makes the errors add.
    """
    from .sk import sk_compile

    if not gs.has_weyl:
        raise ValueError("inverse-free compilation needs every Weyl operator in the gate set")
    base = sk_compile(u, eps / 2, gs, net, allow_inverses=True, max_depth=max_depth)
    n = gs.size
    inv_syms = base.symbols[base.symbols >= n]
    l_inv = int(inv_syms.size)
    meta = {"sk_error": base.meta["error"], "sk_depth": base.meta["depth"], "inverse_count": l_inv}
    if l_inv == 0:
        return GateWord(
            base.symbols, base.product, meta | {"budget": None, "substitutions": {}, "error": base.meta["error"]}
        )
    budget = eps / (2 * l_inv * C_CONSTANT)
    inv_net = net if inverse_net is None else inverse_net
    subs: dict[int, GateWord] = {}
    for s in np.unique(inv_syms).tolist():
        gate = GateWord([s - n], gs.matrices[s - n])
        subs[s] = inverse_approx(gate.product, budget, inv_net, gs, u_word=gate)
    pieces = [subs[s].symbols if s >= n else np.array([s]) for s in base.symbols.tolist()]
    symbols = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.int64)
    prod = word_product(symbols, gs)
    meta |= {
        "budget": budget,
        "substitutions": {gs.symbol_name(s): {"m": g.meta["m"], "length": len(g)} for s, g in subs.items()},
        "error": op_norm(prod - to_special(u)),
    }
    return GateWord(symbols, prod, meta)
