"""Search for periodic points of the qubit map f away from the identity.

Random SU(2) starts are iterated under f.  A start far from the identity
whose orbit comes back within --tol of it after p steps is refined by least
squares on f^p(U) = U and reported with its period.  Most orbits wander and
eventually fall into the shrinking region; the rare near-returns sit close to
repelling cycles such as the known fixed point and two-cycle.

    python3 scripts/cycle_search.py --starts 200000 --max-period 4
"""
from __future__ import annotations

import argparse
import json

import numpy as np
from scipy.optimize import least_squares

from refocus.matcore import RngStream, haar_unitaries
from refocus.qubit import f_qubit, hs_dist_to_identity
from refocus.skc.sk import su2, su2_coords


def iterate(u: np.ndarray, p: int) -> np.ndarray:
    for _ in range(p):
        u = f_qubit(u)
    return u


def from_params(x: np.ndarray) -> np.ndarray:
    q = x / np.linalg.norm(x)
    return su2(q[0], q[1:])


def refine(u: np.ndarray, p: int) -> tuple[np.ndarray, float]:
    """Solve f^p(U) = U by least squares over the unit quaternion."""
    a, v = su2_coords(u)
    x0 = np.concatenate([[a], v])

    def resid(x):
        w = from_params(x)
        d = iterate(w, p) - w
        return np.concatenate([d.real.ravel(), d.imag.ravel()])

    sol = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    w = from_params(sol.x)
    return w, float(np.linalg.norm(iterate(w, p) - w, 2))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--starts", type=int, default=20000)
    ap.add_argument("--max-period", type=int, default=3)
    ap.add_argument("--tol", type=float, default=0.05)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    found: list[dict] = []
    us = haar_unitaries(2, args.starts, RngStream(args.seed))
    us = us / np.sqrt(np.linalg.det(us))[:, None, None]
    for u in us:
        w = u
        for p in range(1, args.max_period + 1):
            w = f_qubit(w)
            if np.linalg.norm(w - u, 2) < args.tol and hs_dist_to_identity(u) > 0.3:
                cyc, res = refine(u, p)
                if res > 1e-10 or hs_dist_to_identity(cyc) < 0.3:
                    break
                if not any(f["period"] == p and np.linalg.norm(np.array(f["_m"]) - cyc, 2) < 1e-6 for f in found):
                    a, v = su2_coords(cyc)
                    found.append({"period": p, "a": a, "v": v.tolist(), "residual": res, "_m": cyc.tolist()})
                break
    for f in found:
        del f["_m"]
    print(json.dumps({"starts": args.starts, "cycles": found}, indent=2))


if __name__ == "__main__":
    main()
