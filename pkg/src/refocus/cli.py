"""Command line front end.

Reports go to stdout as JSON and a one-line summary goes to stderr.  Exit
codes: 0 success or verified, 1 domain failure, 2 usage or input error.
Wall-clock timings appear only in the stderr summary, so that identical flags
and seed give byte-identical reports.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import qubit, qudit
from .matcore import (
    DimensionError,
    NotUnitaryError,
    RngStream,
    check_unitary,
    haar_unitary,
    matrix_from_json,
    matrix_to_json,
)
from .sequence import SequenceFormatError, deserialize, serialize, verify

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2) + "\n")


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _read_matrix(path: str) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text())
        return check_unitary(matrix_from_json(obj), tol=1e-9)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"cannot read a unitary from {path}: {exc}") from None


def _wilson(successes: int, n: int, confidence: float = 0.95) -> list[float]:
    if n == 0:
        return [0.0, 1.0]
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / (1 + z * z / n)
    return [max(0.0, centre - half), min(1.0, centre + half)]


# -- refocus ---------------------------------------------------------------


def _targets(args) -> list[np.ndarray]:
    if args.input:
        u = _read_matrix(args.input)
        if u.shape[0] != args.dim:
            raise UsageError(f"--dim {args.dim} but the input is {u.shape[0]}x{u.shape[0]}")
        return [u]
    base = RngStream(args.seed, 1)
    return [haar_unitary(args.dim, base.child(i)) for i in range(args.haar)]


def _run_one(u: np.ndarray, args, stream: RngStream):
    common = dict(epsilon=args.epsilon, eta=args.eta, mode=args.mode, seed=stream)
    if args.dim == 2:
        cfg = qubit.QubitProtocolConfig(**common, max_random_rounds=args.max_rounds)
        return qubit.refocus_qubit(u, cfg)
    cfg = qudit.QuditProtocolConfig(**common, max_random_rounds=args.max_rounds)
    return qudit.refocus_qudit(u, cfg)


def cmd_refocus(args) -> int:
    if not 2 <= args.dim <= 8:
        raise UsageError("--dim must lie in [2, 8]")
    if args.dim == 2 and not 0 < args.epsilon < qubit.SHRINK_RADIUS:
        raise UsageError("--epsilon must lie in (0, 1/4) for d = 2")
    if args.dim > 2:
        r = qudit.QuditConstants.for_dim(args.dim).shrink_radius
        if not args.epsilon < r:
            raise UsageError(f"--epsilon must lie in (0, 1/(2 alpha)) = (0, {r:g}) for d = {args.dim}")
    if not 0 < args.eta < 1:
        raise UsageError("--eta must lie in (0, 1)")
    if args.haar is not None and args.haar < 1:
        raise UsageError("--haar needs a positive count")
    if args.dim > 2 and args.mode == "oblivious":
        cost = qudit.qudit_k(args.dim, args.epsilon, args.eta)
        if cost.unbounded:
            msg = (
                f"refusing oblivious run: n = d^(2k) = {args.dim}^(2*{cost.k}) ~ 10^{cost.log10_n} pulses"
            )
            _emit({"command": "refocus", "error": msg, "cost": cost.to_json()})
            _say(msg)
            return EXIT_FAIL
    targets = _targets(args)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    trials = []
    t0 = time.perf_counter()
    for i, u in enumerate(targets):
        stream = RngStream(args.seed, 2).child(i)
        try:
            trace = _run_one(u, args, stream)
        except (qubit.GlobalPhaseError, qudit.GlobalPhaseError) as exc:
            _emit({"command": "refocus", "error": str(exc), "trial": i})
            _say(str(exc))
            return EXIT_FAIL
        seq = trace.sequence
        row = {
            "index": i,
            "rounds": trace.n_rounds,
            "random_rounds": trace.random_rounds,
            "uses_of_U": trace.uses_of_U,
            "final_eps": trace.final_eps,
            "verified_eps": None if seq is None else verify(seq, u),
            "success": trace.success,
            "status": trace.status,
        }
        if args.trace:
            row["trace"] = trace.to_json(include_sequence=False)
        if out_dir and seq is not None:
            name = f"seq-{i:05d}.json"
            (out_dir / name).write_bytes(serialize(seq))
            row["sequence_file"] = name
        trials.append(row)
    n_ok = sum(t["success"] for t in trials)
    report = {
        "command": "refocus",
        "config": {
            "dim": args.dim,
            "epsilon": args.epsilon,
            "eta": args.eta,
            "mode": args.mode,
            "seed": args.seed,
            "input": args.input,
            "haar": args.haar,
            "norm": "hs" if args.dim == 2 else "operator",
        },
        "trials": trials,
        "aggregate": {
            "trials": len(trials),
            "successes": n_ok,
            "success_rate": n_ok / len(trials),
            "success_rate_ci95": _wilson(n_ok, len(trials)),
            "mean_rounds": float(np.mean([t["rounds"] for t in trials])),
            "mean_uses_of_U": float(np.mean([float(t["uses_of_U"]) for t in trials])),
            "max_verified_eps": max((t["verified_eps"] for t in trials if t["verified_eps"] is not None), default=None),
            "unemitted_sequences": sum(t["verified_eps"] is None for t in trials),
        },
    }
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            cols = ["index", "rounds", "random_rounds", "uses_of_U", "final_eps", "verified_eps", "success"]
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            w.writeheader()
            w.writerows(trials)
    _emit(report)
    rate = n_ok / len(trials)
    _say(f"refocus: {n_ok}/{len(trials)} reached eps={args.epsilon:g} ({time.perf_counter() - t0:.2f} s)")
    # the protocol promises success with probability at least 1 - eta
    return EXIT_OK if rate >= 1 - args.eta else EXIT_FAIL


# -- jumpprob, verify, constants -------------------------------------------


def cmd_jumpprob(args) -> int:
    if args.samples < 1000:
        raise UsageError("--samples must be at least 1000")
    p, half = qubit.jump_probability_mc(args.samples, RngStream(args.seed), confidence=args.confidence)
    _emit(
        {
            "command": "jumpprob",
            "config": {"samples": args.samples, "seed": args.seed, "confidence": args.confidence},
            "estimate": p,
            "half_width": half,
            "ci": [p - half, p + half],
            "threshold": qubit.JUMP_BOUND,
        }
    )
    _say(f"jump probability {p:.4f} +/- {half:.4f} ({args.confidence:.0%} CI)")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        seq = deserialize(Path(args.sequence).read_bytes())
    except OSError as exc:
        raise UsageError(str(exc)) from None
    except SequenceFormatError as exc:
        raise UsageError(f"{args.sequence}: {exc}") from None
    u = _read_matrix(args.input)
    if u.shape[0] != seq.dim:
        raise UsageError(f"sequence is for d={seq.dim}, input is {u.shape[0]}x{u.shape[0]}")
    dist = verify(seq, u)
    ok = dist <= args.epsilon
    _emit(
        {
            "command": "verify",
            "norm": seq.norm,
            "uses_of_U": seq.uses_of_U,
            "distance": dist,
            "epsilon": args.epsilon,
            "verified": ok,
        }
    )
    _say(f"{'verified' if ok else 'NOT verified'}: distance {dist:.3e} vs eps {args.epsilon:g}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_constants(args) -> int:
    d = args.dim
    try:
        c = qudit.QuditConstants.for_dim(d)
    except DimensionError as exc:
        raise UsageError(str(exc)) from None
    report = {"command": "constants", **c.to_json(), "delta_fraction": f"1/{int(2 * c.alpha * d * d)}"}
    if args.epsilon is not None:
        try:
            report["cost"] = qudit.qudit_k(d, args.epsilon, args.eta).to_json()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if d == 2 and args.epsilon < qubit.SHRINK_RADIUS:
            report["qubit"] = {
                "k": qubit.qubit_k(args.epsilon, args.eta),
                "m": qubit.qubit_m(args.epsilon),
                "pulse_count_bound": qubit.pulse_count_bound(args.epsilon, args.eta),
            }
    _emit(report)
    _say(f"d={d}: alpha={c.alpha:g}, delta=1/{int(2 * c.alpha * d * d)}")
    return EXIT_OK


# -- sk ----------------------------------------------------------------------


def _gateset(name: str):
    from .skc import GATESETS

    if name not in GATESETS:
        raise UsageError(f"unknown gate set {name!r}; choose from {sorted(GATESETS)}")
    return GATESETS[name]()


def _net(args, gs, radius: float):
    from .skc import NetBuildError, get_net

    try:
        return get_net(gs, radius, args.max_len, args.seed, args.cache_dir)
    except NetBuildError as exc:
        _emit({"command": "sk", "error": str(exc), "v_curve": [list(r) for r in exc.v_curve]})
        _say(str(exc))
        raise SystemExit(EXIT_FAIL) from None


def _sk_target(args, d: int) -> np.ndarray:
    if args.target:
        u = _read_matrix(args.target)
        if u.shape[0] != d:
            raise UsageError("target dimension does not match the gate set")
        return u
    if args.haar_seed is not None:
        return haar_unitary(d, RngStream(args.haar_seed, 3))
    raise UsageError("give --target <matrix.json> or --haar-seed N")


def _word_json(word, gs) -> dict:
    return {
        "symbols": word.symbols.tolist(),
        "names": [gs.symbol_name(s) for s in word.symbols.tolist()],
        "length": len(word),
        "inverse_count": word.inverse_count(gs.size) if not np.any(word.symbols < 0) else 0,
        "product": matrix_to_json(word.product),
    }


def _jsonable(meta: dict) -> dict:
    return json.loads(json.dumps(meta, default=float))


def cmd_sk_net_build(args) -> int:
    from .skc import audit_shrinking_landing

    gs = _gateset(args.gates)
    t0 = time.perf_counter()
    net = _net(args, gs, args.radius)
    report = {
        "command": "sk net build",
        "config": {"gates": args.gates, "radius": args.radius, "max_len": args.max_len, "seed": args.seed},
        "size": len(net),
        "max_word_len": net.max_word_len,
        "declared_radius": net.declared_radius,
        "v_curve": [list(r) for r in net.v_curve],
        "gateset_hash": net.gateset_hash,
    }
    if gs.dim == 2:
        probe = np.stack([haar_unitary(2, RngStream(args.seed, 4).child(i)) for i in range(args.audit)])
        hs = audit_shrinking_landing(net, probe)
        report["shrinking_audit"] = {"samples": args.audit, "max_hs": hs, "inside": hs <= 0.25}
    _emit(report)
    _say(f"net: {len(net)} entries, radius {net.declared_radius:.4g} ({time.perf_counter() - t0:.1f} s)")
    return EXIT_OK


def cmd_sk_compile(args) -> int:
    from .skc import SKConvergenceError, sk_compile, word_product

    gs = _gateset(args.gates)
    if args.eps <= 0:
        raise UsageError("--eps must be positive")
    u = _sk_target(args, gs.dim)
    net = _net(args, gs, args.radius)
    inv_net = _net(args, gs, args.inverse_radius) if args.no_inverses else None
    try:
        word = sk_compile(u, args.eps, gs, net, allow_inverses=not args.no_inverses, inverse_net=inv_net)
    except SKConvergenceError as exc:
        _emit({"command": "sk compile", "error": str(exc), "level_errors": exc.level_errors})
        _say(str(exc))
        return EXIT_FAIL
    err = float(np.linalg.norm(word_product(word.symbols, gs) - u / np.sqrt(np.linalg.det(u)), 2))
    report = {
        "command": "sk compile",
        "config": {"gates": args.gates, "eps": args.eps, "inverses": not args.no_inverses, "radius": args.radius},
        "word": _word_json(word, gs),
        "error": err,
        "meta": _jsonable(word.meta),
    }
    _emit(report)
    _say(f"compiled: length {len(word)}, error {err:.3e}")
    return EXIT_OK if err <= args.eps else EXIT_FAIL


def cmd_sk_invert(args) -> int:
    from .skc import InverseApproxError, inverse_approx, word_product

    gs = _gateset(args.gates)
    if args.eps <= 0:
        raise UsageError("--eps must be positive")
    u = _sk_target(args, gs.dim)
    u = u / np.linalg.det(u) ** (1 / gs.dim)
    net = _net(args, gs, args.radius)
    try:
        word = inverse_approx(u, args.eps, net, gs, mode=args.mode)
    except InverseApproxError as exc:
        _emit({"command": "sk invert", "error": str(exc), "required_radius": exc.required_radius})
        _say(str(exc))
        return EXIT_FAIL
    err = float(np.linalg.norm(word_product(word.symbols, gs, target=u) - u.conj().T, 2))
    report = {
        "command": "sk invert",
        "config": {"gates": args.gates, "eps": args.eps, "radius": args.radius, "mode": args.mode},
        "word": _word_json(word, gs),
        "uses_of_U": int(np.count_nonzero(word.symbols < 0)),
        "error": err,
        "meta": _jsonable(word.meta),
    }
    _emit(report)
    _say(f"inverse word: length {len(word)}, m = {word.meta['m']}, error {err:.3e}")
    return EXIT_OK if err <= args.eps else EXIT_FAIL


# -- parser ----------------------------------------------------------------


def _positive_float(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x > 0 or not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return x


def _seed(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= x < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return x


def _add_net_flags(p: argparse.ArgumentParser, radius: float) -> None:
    p.add_argument("--gates", default="std", help="gate set name (std = H, T, X, Y, Z)")
    p.add_argument("--radius", type=_positive_float, default=radius, help="net covering radius (operator norm)")
    p.add_argument("--max-len", type=int, default=40, help="longest word enumerated")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--cache-dir", default=None, help="net cache (default $REFOCUS_CACHE_DIR or ./._netcache)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="refocus", description="Refocusing protocols and gate compilation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("refocus", help="run the refocusing protocol on one or more unitaries")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--epsilon", type=_positive_float, required=True)
    p.add_argument("--eta", type=float, default=0.25)
    p.add_argument("--mode", choices=["oblivious", "monitored"], default="monitored")
    p.add_argument("--seed", type=_seed, default=0)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="unitary in matrix JSON format")
    src.add_argument("--haar", type=int, help="number of Haar-random targets")
    p.add_argument("--out", help="directory for the emitted pulse sequences")
    p.add_argument("--csv", help="also write per-trial rows to this CSV file")
    p.add_argument("--trace", action="store_true", help="include per-round traces in the report")
    p.add_argument("--max-rounds", type=int, default=500, help="cap on random rounds (monitored)")
    p.set_defaults(func=cmd_refocus)

    p = sub.add_parser("jumpprob", help="Monte Carlo estimate of the qubit jump probability")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--confidence", type=float, default=0.99)
    p.set_defaults(func=cmd_jumpprob)

    p = sub.add_parser("verify", help="check a pulse sequence against a unitary")
    p.add_argument("--sequence", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--epsilon", type=_positive_float, required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constants", help="dimension-dependent constants and cost bounds")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--epsilon", type=_positive_float)
    p.add_argument("--eta", type=float, default=0.25)
    p.set_defaults(func=cmd_constants)

    sk = sub.add_parser("sk", help="gate compilation").add_subparsers(dest="sk_command", required=True)
    p = sk.add_parser("compile", help="Solovay-Kitaev compilation of a target")
    _add_net_flags(p, 0.07)
    p.add_argument("--target")
    p.add_argument("--haar-seed", type=_seed)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--no-inverses", action="store_true", help="emit words over the gates only")
    p.add_argument("--inverse-radius", type=_positive_float, default=0.07, help="net radius for inverses")
    p.set_defaults(func=cmd_sk_compile)

    p = sk.add_parser("invert", help="approximate the inverse of a target by forward uses")
    _add_net_flags(p, 0.25)
    p.add_argument("--target")
    p.add_argument("--haar-seed", type=_seed)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--mode", choices=["auto", "qubit", "generic"], default="auto")
    p.set_defaults(func=cmd_sk_invert)

    net = sk.add_parser("net", help="epsilon-net management").add_subparsers(dest="net_command", required=True)
    p = net.add_parser("build", help="build (or load from cache) an epsilon-net")
    _add_net_flags(p, 0.25)
    p.add_argument("--audit", type=int, default=10_000, help="samples for the shrinking-region audit")
    p.set_defaults(func=cmd_sk_net_build)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        _say(f"refocus: error: {exc}")
        return EXIT_USAGE
    except (NotUnitaryError, DimensionError) as exc:
        _say(f"refocus: error: {exc}")
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code)


if __name__ == "__main__":
    sys.exit(main())
