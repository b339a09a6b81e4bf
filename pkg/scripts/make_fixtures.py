"""Regenerate the frozen oracle values in tests/data/oracles.json.

Each value is computed by a method independent of the package code path it
checks: a quaternion sampler for Haar SU(2), mpmath for closed forms, and a
plain-Python group closure for the Pauli net.  Run once; the tests read the
JSON and never recompute it.
"""
from __future__ import annotations

import itertools
import json
import math
from pathlib import Path

import mpmath
import numpy as np

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "oracles.json"


def haar_trace_moment(n: int, seed: int = 20240601, chunk: int = 10**6) -> tuple[float, float]:
    """E|tr V|^2 for Haar SU(2), sampling V = a + i(bX + cY + dZ) with (a,b,c,d) uniform on S^3."""
    gen = np.random.default_rng(seed)
    total = total_sq = 0.0
    left = n
    while left:
        m = min(chunk, left)
        q = gen.standard_normal((m, 4))
        a = q[:, 0] / np.linalg.norm(q, axis=1)
        x = 4 * a * a  # |tr V|^2 = |2a|^2
        total += float(x.sum())
        total_sq += float((x * x).sum())
        left -= m
    mean = total / n
    return mean, math.sqrt(total_sq / n - mean * mean)


def qubit_k_oracle(eps: str, eta: str) -> int:
    with mpmath.workdps(60):
        e, h = mpmath.mpf(eps), mpmath.mpf(eta)
        bound = mpmath.log(1 / h, 2) / mpmath.log(mpmath.mpf(4) / 3, 2)
        bound += mpmath.log(mpmath.log(1 / (mpmath.sqrt(8) * e), 2), 2) + 1
        return int(mpmath.ceil(bound))


def qudit_first_term(d: int, eta: str) -> str:
    with mpmath.workdps(60):
        delta = 1 / (2 * mpmath.mpf(2) ** (d * d + 1) * d * d)
        p = (delta / 10) ** (d * d - 1)
        return mpmath.nstr(mpmath.log(mpmath.mpf(eta), 2) / mpmath.log(1 - p, 2), 20)


def pauli_net_levels() -> list[int]:
    """Sizes of the words-of-length-<=L sets over the SU(2)-normalised Paulis, by exact quaternion arithmetic."""

    def qmul(p, q):
        a1, b1, c1, d1 = p
        a2, b2, c2, d2 = q
        return (
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 - c1 * d2 + d1 * c2,
            a1 * c2 + c1 * a2 - d1 * b2 + b1 * d2,
            a1 * d2 + d1 * a2 - b1 * c2 + c1 * b2,
        )

    # -iX, -iY, -iZ as quaternions a + i(b X + c Y + d Z); for the Weyl set, sigma_11 = ZX = iY
    gens = [(0, -1, 0, 0), (0, 0, 1, 0), (0, 0, 0, -1)]
    seen = {(1, 0, 0, 0)}
    frontier = set(seen)
    sizes = [1]
    for _ in range(4):
        frontier = {qmul(p, g) for p, g in itertools.product(frontier, gens)} - seen
        seen |= frontier
        sizes.append(len(seen))
    return sizes


def main() -> None:
    mean, sd = haar_trace_moment(10**7)
    data = {
        "haar_su2_trace_sq": {"mean": mean, "sd": sd, "samples": 10**7, "method": "uniform S^3 quaternions"},
        "qubit_k": {"eps=1e-6,eta=0.1": qubit_k_oracle("1e-6", "0.1"), "eps=1e-4,eta=0.25": qubit_k_oracle("1e-4", "0.25")},
        "qudit_first_term_d2_eta0.1": qudit_first_term(2, "0.1"),
        "pauli_group_sizes_by_length": pauli_net_levels(),
        "cap_probability_r3_gt_half": 0.25,
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=2) + "\n")
    print(json.dumps(data, indent=2))


if __name__ == "__main__":
    main()
