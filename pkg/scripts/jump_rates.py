"""Jump probabilities: the qubit Monte Carlo estimate against sample size, and
empirical per-round jump rates of monitored runs in dimensions 2..4.

    python3 scripts/jump_rates.py --targets 200 --seed 0 > jump_rates.json
"""
from __future__ import annotations

import argparse
import json

from refocus.matcore import RngStream, haar_unitary
from refocus.qubit import jump_probability_mc
from refocus.qudit import QuditConstants, QuditProtocolConfig, refocus_qudit
from refocus.skc.gates import to_special


def qubit_curve(seed: int) -> list[dict]:
    rows = []
    for n in (10**3, 10**4, 10**5, 10**6):
        p, half = jump_probability_mc(n, RngStream(seed, n))
        rows.append({"samples": n, "estimate": p, "half_width_99": half})
    return rows


def monitored_rates(d: int, targets: int, seed: int, max_rounds: int) -> dict:
    base = RngStream(seed, 100 + d)
    eps = QuditConstants.for_dim(d).shrink_radius * 1e-3
    attempts = jumps = later = ok = 0
    rounds = []
    for i in range(targets):
        u = to_special(haar_unitary(d, base.child(2 * i)))
        cfg = QuditProtocolConfig(eps, seed=base.child(2 * i + 1), max_random_rounds=max_rounds, emit_sequence=False)
        t = refocus_qudit(u, cfg)
        ok += t.success
        rounds.append(t.random_rounds)
        for r in t.rounds:
            if r.pulse is not None:
                attempts += 1
                jumps += r.jumped
            else:
                later += r.jumped  # landed on an f step with no fresh conjugation
    return {
        "dim": d,
        "targets": targets,
        "successes": ok,
        "random_rounds": attempts,
        "jumps": jumps,
        "rate": jumps / attempts if attempts else None,
        "landings_without_pulse": later,
        "mean_random_rounds": sum(rounds) / len(rounds),
    }


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--targets", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rounds", type=int, default=2000)
    args = p.parse_args()
    out = {
        "qubit_mc": qubit_curve(args.seed),
        "monitored": [monitored_rates(d, args.targets, args.seed, args.max_rounds) for d in (2, 3, 4)],
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
