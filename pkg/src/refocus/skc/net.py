"""Epsilon-nets of short gate words and exact nearest-neighbour lookup.

Words are enumerated breadth first, appending one gate on the right, and a
product already seen (entries rounded to ``dedup_cell``) is pruned along with
all its extensions.  The surviving entries are therefore ordered by length
and then lexicographically, which is the tie-break order of ``nearest``.

Lookup is exact in the operator norm.  A KD-tree over the real coordinates
of each matrix finds the Frobenius-nearest entry; since
``||A||_op <= ||A||_F <= sqrt(d) ||A||_op`` every operator-norm minimiser lies
in a Frobenius ball of radius ``sqrt(d)`` times that entry's operator distance.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ..matcore import (
    as_generator,
    as_matrix,
    haar_unitaries,
    matrix_from_json,
    matrix_to_json,
    op_norm_dist_many,
)
from .gates import GateSet, GateWord

FORMAT_VERSION = 1
DEFAULT_CELL = 1e-9
AUDIT_SAMPLES = 10_000
SAFETY = 1.1


class NetBuildError(RuntimeError):
    def __init__(self, message: str, v_curve: list[tuple[int, int, float]]):
        super().__init__(message)
        self.v_curve = v_curve


class EmptyNetError(ValueError):
    pass


class NetFormatError(ValueError):
    pass


def _real_coords(stack: np.ndarray) -> np.ndarray:
    n = stack.shape[0]
    return np.concatenate([stack.real.reshape(n, -1), stack.imag.reshape(n, -1)], axis=1)


@dataclass
class EpsilonNet:
    """Immutable after construction.

    ``words[i]`` are the symbols of entry ``i`` (over the gates only) and
    ``matrices[i]`` its product.  ``v_curve`` holds ``(L, size, estimate)``
    for each enumerated length.
    """

    dim: int
    gateset_hash: str
    words: list[np.ndarray]
    matrices: np.ndarray
    declared_radius: float
    build_params: dict
    v_curve: list[tuple[int, int, float]] = field(default_factory=list)

    def __post_init__(self):
        self.matrices = np.asarray(self.matrices, dtype=np.complex128)
        self._tree = cKDTree(_real_coords(self.matrices)) if len(self.words) else None

    def __len__(self) -> int:
        return len(self.words)

    @property
    def entries(self):
        for w, m in zip(self.words, self.matrices):
            yield GateWord(w, m), m

    @property
    def max_word_len(self) -> int:
        return max((len(w) for w in self.words), default=0)

    def word(self, i: int) -> GateWord:
        return GateWord(self.words[i].copy(), self.matrices[i].copy())


def nearest_index(net: EpsilonNet, u: np.ndarray) -> tuple[int, float]:
    if net._tree is None:
        raise EmptyNetError("the net has no entries")
    u = as_matrix(u)
    if u.shape[0] != net.dim:
        raise ValueError(f"net is for d={net.dim}, U has d={u.shape[0]}")
    x = _real_coords(u[None])[0]
    _, i0 = net._tree.query(x)
    r0 = float(op_norm_dist_many(net.matrices[i0 : i0 + 1], u)[0])
    ball = np.asarray(net._tree.query_ball_point(x, math.sqrt(net.dim) * r0 * (1 + 1e-9) + 1e-12))
    dists = op_norm_dist_many(net.matrices[ball], u)
    best = dists.min()
    # ball indices are net order, i.e. (length, lexicographic)
    tied = ball[dists <= best + 1e-12]
    i = int(tied.min())
    return i, float(dists[ball == i][0])


def nearest(net: EpsilonNet, u: np.ndarray) -> tuple[GateWord, float]:
    """Entry minimising the operator-norm distance to U, and that distance."""
    i, dist = nearest_index(net, u)
    return net.word(i), dist


def nearest_distances(net: EpsilonNet, us: np.ndarray) -> np.ndarray:
    """Operator-norm distance from each U to its nearest entry."""
    if net._tree is None:
        raise EmptyNetError("the net has no entries")
    return _nearest_distances(net._tree, net.matrices, us)


def _nearest_distances(tree: cKDTree, mats: np.ndarray, us: np.ndarray) -> np.ndarray:
    d = mats.shape[1]
    frob, idx = tree.query(_real_coords(us))
    upper = op_norm_dist_many_pairs(mats[idx], us)
    # op >= frob / sqrt(d); when that already meets the candidate, it is exact
    exact = upper <= frob / math.sqrt(d) * (1 + 1e-9) + 1e-15
    out = upper.copy()
    for j in np.flatnonzero(~exact):
        x = _real_coords(us[j : j + 1])[0]
        ball = tree.query_ball_point(x, math.sqrt(d) * upper[j] * (1 + 1e-9) + 1e-12)
        out[j] = op_norm_dist_many(mats[ball], us[j]).min()
    return out


def op_norm_dist_many_pairs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a - b
    gram = np.conj(np.swapaxes(diff, 1, 2)) @ diff
    return np.sqrt(np.clip(np.linalg.eigvalsh(gram)[:, -1], 0.0, None))


def _dedup_keys(stack: np.ndarray, cell: float) -> np.ndarray:
    q = np.round(_real_coords(stack) / cell).astype(np.int64)
    return q.view(np.dtype((np.void, q.dtype.itemsize * q.shape[1]))).ravel()


def build_net(
    gs: GateSet,
    target_radius: float,
    max_len: int,
    rng,
    dedup_cell: float = DEFAULT_CELL,
    samples: int = AUDIT_SAMPLES,
    max_entries: int = 5_000_000,
) -> EpsilonNet:
    """Enumerate words over the gates until the covering estimate reaches ``0.9 * target``.

    The estimate ``v(L)`` is the largest nearest-entry distance over a fixed
    set of Haar samples, so it can only decrease as L grows.
    """
    if not target_radius > 0:
        raise ValueError("target_radius must be positive")
    if max_len < 0:
        raise ValueError("max_len must be non-negative")
    d = gs.dim
    gen = as_generator(rng)
    probe = haar_unitaries(d, samples, gen)
    eye = np.eye(d, dtype=np.complex128)[None]
    seen = set(_dedup_keys(eye, dedup_cell).tolist())
    levels_w = [np.zeros((1, 0), dtype=np.int64)]
    levels_m = [eye]
    frontier_w, frontier_m = levels_w[0], eye
    v_curve: list[tuple[int, int, float]] = []
    count = 1

    def estimate() -> float:
        mats = np.concatenate(levels_m)
        return float(_nearest_distances(cKDTree(_real_coords(mats)), mats, probe).max())

    v = estimate()
    v_curve.append((0, count, v))
    length = 0
    while v > 0.9 * target_radius:
        if length >= max_len or frontier_m.shape[0] == 0:
            raise NetBuildError(
                f"covering estimate {v:.4g} > 0.9 * {target_radius:g} after words of length {length}",
                v_curve,
            )
        length += 1
        n = gs.size
        cand_m = (frontier_m[:, None] @ gs.matrices[None]).reshape(-1, d, d)
        cand_w = np.concatenate(
            [np.repeat(frontier_w, n, axis=0), np.tile(np.arange(n), frontier_w.shape[0])[:, None]], axis=1
        )
        keep = []
        for i, k in enumerate(_dedup_keys(cand_m, dedup_cell).tolist()):
            if k not in seen:
                seen.add(k)
                keep.append(i)
        frontier_w, frontier_m = cand_w[keep], cand_m[keep]
        levels_w.append(frontier_w)
        levels_m.append(frontier_m)
        count += len(keep)
        if count > max_entries:
            raise NetBuildError(f"net exceeds {max_entries} entries at length {length}", v_curve)
        v = estimate()
        v_curve.append((length, count, v))
    words = [w for level in levels_w for w in level]
    return EpsilonNet(
        dim=d,
        gateset_hash=gs.hash(),
        words=words,
        matrices=np.concatenate(levels_m),
        declared_radius=SAFETY * v,
        build_params={
            "max_word_len": length,
            "max_len": max_len,
            "dedup_cell_size": dedup_cell,
            "target_radius": target_radius,
            "samples": samples,
        },
        v_curve=v_curve,
    )


def covering_estimate(net: EpsilonNet, probe: np.ndarray) -> float:
    return float(nearest_distances(net, probe).max())


# -- persistence -----------------------------------------------------------


def net_to_json(net: EpsilonNet) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "gateset_hash": net.gateset_hash,
        "build_params": net.build_params,
        "declared_radius": net.declared_radius,
        "v_curve": [list(row) for row in net.v_curve],
        "entries": [
            {"word": w.tolist(), "matrix": matrix_to_json(m)} for w, m in zip(net.words, net.matrices)
        ],
    }


def net_from_json(obj: dict, gs: GateSet | None = None) -> EpsilonNet:
    if obj.get("format_version") != FORMAT_VERSION:
        raise NetFormatError(f"unsupported net format_version {obj.get('format_version')!r}")
    if gs is not None and obj["gateset_hash"] != gs.hash():
        raise NetFormatError("net was built for a different gate set")
    entries = obj["entries"]
    if not entries:
        raise NetFormatError("net file has no entries")
    mats = np.stack([matrix_from_json(e["matrix"]) for e in entries])
    return EpsilonNet(
        dim=mats.shape[1],
        gateset_hash=obj["gateset_hash"],
        words=[np.asarray(e["word"], dtype=np.int64) for e in entries],
        matrices=mats,
        declared_radius=float(obj["declared_radius"]),
        build_params=dict(obj["build_params"]),
        v_curve=[tuple(row) for row in obj.get("v_curve", [])],
    )


def save_net(net: EpsilonNet, path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(net_to_json(net)))
    os.replace(tmp, path)


def load_net(path, gs: GateSet | None = None) -> EpsilonNet:
    return net_from_json(json.loads(Path(path).read_text()), gs)


def default_cache_dir() -> Path:
    return Path(os.environ.get("REFOCUS_CACHE_DIR", "./._netcache"))


def cache_key(gs: GateSet, target_radius: float, max_len: int, seed: int, dedup_cell: float) -> str:
    params = json.dumps([target_radius, max_len, seed, dedup_cell])
    return f"net-{gs.hash()[:16]}-{hashlib.sha256(params.encode()).hexdigest()[:16]}.json"


_MEMO: dict[str, EpsilonNet] = {}


def get_net(
    gs: GateSet,
    target_radius: float,
    max_len: int = 40,
    seed: int = 0,
    cache_dir=None,
    dedup_cell: float = DEFAULT_CELL,
) -> EpsilonNet:
    """Build a net, or load it from the cache directory when one was built before."""
    name = cache_key(gs, target_radius, max_len, seed, dedup_cell)
    if name in _MEMO:
        return _MEMO[name]
    directory = default_cache_dir() if cache_dir is None else Path(cache_dir)
    path = directory / name
    if path.exists():
        net = load_net(path, gs)
    else:
        net = build_net(gs, target_radius, max_len, seed, dedup_cell)
        directory.mkdir(parents=True, exist_ok=True)
        save_net(net, path)
    _MEMO[name] = net
    return net
