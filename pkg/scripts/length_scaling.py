"""Word lengths against accuracy for Solovay-Kitaev with and without inverses,
and for the inverse approximation alone.

    python3 scripts/length_scaling.py --targets 20 --csv lengths.csv
"""
from __future__ import annotations

import argparse
import csv
import math
import sys

import numpy as np

from refocus.matcore import RngStream, haar_unitaries
from refocus.skc import get_net, inverse_approx, sk_compile, standard_gateset
from refocus.skc.gates import to_special


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--targets", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="write rows here instead of stdout")
    args = p.parse_args()

    gs = standard_gateset()
    fine = get_net(gs, 0.07)
    coarse = get_net(gs, 0.25)
    us = [to_special(u) for u in haar_unitaries(2, args.targets, RngStream(args.seed, 1))]
    rows = []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        for kind in ("sk", "inverse_free"):
            lens = [len(sk_compile(u, eps, gs, fine, allow_inverses=kind == "sk", inverse_net=coarse)) for u in us]
            rows.append(_row(kind, eps, lens))
    for eps in (1e-2, 1e-4, 1e-6, 1e-8):
        words = [inverse_approx(u, eps, coarse, gs) for u in us]
        row = _row("inverse_approx", eps, [len(w) for w in words])
        row["mean_m"] = float(np.mean([w.meta["m"] for w in words]))
        rows.append(row)

    fh = open(args.csv, "w", newline="") if args.csv else sys.stdout
    w = csv.DictWriter(fh, fieldnames=["kind", "eps", "mean_length", "max_length", "max_over_ln4", "mean_m"])
    w.writeheader()
    w.writerows(rows)


def _row(kind: str, eps: float, lens: list[int]) -> dict:
    return {
        "kind": kind,
        "eps": eps,
        "mean_length": float(np.mean(lens)),
        "max_length": max(lens),
        "max_over_ln4": max(lens) / math.log(1 / eps) ** 4,
        "mean_m": "",
    }


if __name__ == "__main__":
    main()
