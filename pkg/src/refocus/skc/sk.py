"""Recursive Solovay-Kitaev compilation on SU(2), with a balanced group commutator.

This is the classical construction: approximate U by a net entry, write the
residual ``U U_{n-1}^dag`` as a commutator ``V W V^dag W^dag`` of two rotations
by the same small angle, approximate V and W one level down, and multiply.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..matcore import as_matrix, op_norm
from ..weyl import I2, PAULI_X, PAULI_Y, PAULI_Z
from .gates import GateSet, GateWord, free_reduce, to_special
from .net import EpsilonNet, nearest

_PAULIS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])


def su2(a: float, v) -> np.ndarray:
    """``a 1 + i v.sigma``."""
    return a * I2 + 1j * np.tensordot(np.asarray(v, dtype=float), _PAULIS, axes=1)


def su2_coords(u: np.ndarray) -> tuple[float, np.ndarray]:
    a = (u[0, 0] + u[1, 1]).real / 2
    v = np.array([(u[0, 1] + u[1, 0]).imag, (u[0, 1] - u[1, 0]).real, (u[0, 0] - u[1, 1]).imag]) / 2
    return float(a), v


def _rotation_taking(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """S in SU(2) with ``S (src.sigma) S^dag`` proportional to ``dst.sigma``."""
    s = src / np.linalg.norm(src)
    t = dst / np.linalg.norm(dst)
    axis = np.cross(s, t)
    sin_b = np.linalg.norm(axis)
    cos_b = float(np.clip(s @ t, -1.0, 1.0))
    if sin_b < 1e-14:
        if cos_b > 0:
            return I2.astype(np.complex128)
        # antiparallel: half turn about any axis perpendicular to s
        perp = np.cross(s, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(s, [0.0, 1.0, 0.0])
        axis, sin_b = perp / np.linalg.norm(perp), 0.0
        beta = math.pi
    else:
        axis = axis / sin_b
        beta = math.atan2(sin_b, cos_b)
    # exp(-i beta/2 k.sigma) turns v by +beta about k under conjugation
    return su2(math.cos(beta / 2), -math.sin(beta / 2) * axis)


def group_commutator(delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """V, W in SU(2) with ``V W V^dag W^dag = delta``, both rotations by the same angle."""
    a, vec = su2_coords(as_matrix(delta))
    # commutator of x- and y-rotations by phi has cos(theta/2) = 1 - 2 sin^4(phi/2)
    s2 = math.sqrt(max(0.0, (1.0 - a) / 2))
    phi = 2 * math.asin(min(1.0, math.sqrt(s2)))
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    v = su2(c, [s, 0.0, 0.0])
    w = su2(c, [0.0, s, 0.0])
    comm = v @ w @ v.conj().T @ w.conj().T
    _, cvec = su2_coords(comm)
    if np.linalg.norm(vec) < 1e-15 or np.linalg.norm(cvec) < 1e-15:
        return v, w
    rot = _rotation_taking(cvec, vec)
    return rot @ v @ rot.conj().T, rot @ w @ rot.conj().T


class SKConvergenceError(RuntimeError):
    def __init__(self, message: str, level_errors: list[float]):
        super().__init__(message)
        self.level_errors = level_errors


@dataclass
class _Compiler:
    gs: GateSet
    net: EpsilonNet

    def base(self, u: np.ndarray) -> GateWord:
        return nearest(self.net, u)[0]

    def refine(self, u: np.ndarray, prev: GateWord, depth: int) -> GateWord:
        """One SK level on top of an approximation ``prev`` of U of depth ``depth - 1``."""
        v, w = group_commutator(u @ prev.product.conj().T)
        vw = self.approx(v, depth - 1)
        ww = self.approx(w, depth - 1)
        n = self.gs.size
        return vw @ ww @ vw.inverse(n) @ ww.inverse(n) @ prev

    def approx(self, u: np.ndarray, depth: int) -> GateWord:
        word = self.base(u)
        for level in range(1, depth + 1):
            word = self.refine(u, word, level)
        return word


def sk_compile(
    u,
    eps: float,
    gs: GateSet,
    net: EpsilonNet,
    allow_inverses: bool = True,
    max_depth: int = 6,
    inverse_net: EpsilonNet | None = None,
) -> GateWord:
    """Word over the gates (and, if allowed, their formal inverses) within ``eps`` of U.

    Targets are taken modulo global phase: U is first divided by a square
    root of its determinant.  The depth is increased until the error meets
    ``eps``.  With ``allow_inverses=False`` this is :func:`inverse_free_compile`.
    """
    if gs.dim != 2:
        raise ValueError("Solovay-Kitaev is implemented for d = 2 only")
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not allow_inverses:
        from .inverse import inverse_free_compile

        return inverse_free_compile(u, eps, gs, net, inverse_net=inverse_net, max_depth=max_depth)
    target = to_special(u)
    comp = _Compiler(gs, net)
    word = comp.base(target)
    errors = [op_norm(word.product - target)]
    depth = 0
    while errors[-1] > eps:
        if depth >= max_depth:
            raise SKConvergenceError(
                f"error {errors[-1]:.3e} > {eps:g} at depth {depth}; per-level errors {errors}", errors
            )
        depth += 1
        word = comp.refine(target, word, depth)
        errors.append(op_norm(word.product - target))
    word = GateWord(free_reduce(word.symbols, gs.size), word.product)
    word.meta = {"depth": depth, "level_errors": errors, "error": errors[-1]}
    return word
