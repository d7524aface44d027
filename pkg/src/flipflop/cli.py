"""Command-line interface: ``gen``, ``run``, ``sweep`` and ``check``.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 a bound or
invariance check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from . import bounds
from .core import InputError, ParameterError
from .datagen import EXPERIMENTS, ExperimentSpec, format_float, generate, load_csv, write_csv
from .learners import AdaHedge, FlipFlop, Learner, parse_kind, run
from .report import dump_json, read_trace, verify_trace, write_trace

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VIOLATION = 0, 1, 2, 3

ALGORITHMS = ("ftl", "hedge", "safe", "adahedge", "flipflop")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _rate(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"learning rate must be positive, got {text}")
    return value


def _add_source(p: argparse.ArgumentParser, multiple: bool = False) -> None:
    if multiple:
        p.add_argument("--experiment", type=int, choices=EXPERIMENTS, action="append",
                       help="experiment index (repeatable; default: all four)")
    else:
        p.add_argument("--experiment", type=int, choices=EXPERIMENTS, help="experiment index")
    p.add_argument("--rounds", type=int, default=1000, help="horizon for generated data")
    p.add_argument("--input", help="loss CSV (no header, one column per expert)")


def _add_algo_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=_rate, help="fixed learning rate for --algo hedge")
    p.add_argument("--horizon", type=int, help="known horizon for --algo safe (default: stream length)")
    p.add_argument("--phi", type=float, help="FlipFlop phi (> 1)")
    p.add_argument("--alpha", type=float, help="FlipFlop alpha (> 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flipflop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write an experiment's loss stream as CSV")
    p.add_argument("--experiment", type=int, choices=EXPERIMENTS, required=True)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("run", help="run one learner, emit trace CSV and JSON summary")
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    _add_algo_params(p)
    _add_source(p)
    p.add_argument("--trace-out", help="trace CSV path")
    p.add_argument("--summary-out", help="JSON summary path (default: stdout)")

    p = sub.add_parser("sweep", help="regret of fixed-rate Hedge over a grid of rates")
    _add_source(p)
    p.add_argument("--grid", help="comma-separated rates; 'inf' means FTL")
    p.add_argument("--grid-min", type=_rate, default=1e-3)
    p.add_argument("--grid-max", type=_rate, default=1e2)
    p.add_argument("--grid-points", type=int, default=100)
    p.add_argument("--no-inf", action="store_true", help="leave FTL out of the default grid")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("check", help="check regret bounds and scale/translation invariance")
    _add_source(p, multiple=True)
    p.add_argument("--algo", action="append", choices=ALGORITHMS,
                   help="learner to check (repeatable; default: all)")
    _add_algo_params(p)
    p.add_argument("--seed", type=int, default=0, help="seed for the random affine transform")
    p.add_argument("--verify-trace", metavar="TRACE_CSV",
                   help="verify an existing trace file instead of running learners")
    p.add_argument("--summary", help="JSON summary to cross-check with --verify-trace")
    p.add_argument("--experts", type=int, help="number of experts, for --verify-trace")
    p.add_argument("--scale", type=float, default=1.0,
                   help="within-round loss range assumed by --verify-trace")
    return parser


def _load_source(args) -> np.ndarray:
    if args.input is not None and args.experiment is not None:
        raise UsageError("give either --experiment or --input, not both")
    if args.input is not None:
        return load_csv(args.input)
    if args.experiment is None:
        raise UsageError("one of --experiment or --input is required")
    return generate(ExperimentSpec(args.experiment, args.rounds))


def _kind(args, algo: str, T: int):
    horizon = args.horizon if args.horizon is not None else T
    if algo == "hedge" and args.eta is None:
        raise UsageError("--algo hedge needs --eta")
    return parse_kind(algo, eta=args.eta, horizon=horizon, phi=args.phi, alpha=args.alpha)


def _kind_params(kind) -> dict:
    return {k: getattr(kind, k) for k in ("eta", "horizon", "phi", "alpha") if hasattr(kind, k)}


def run_summary(kind, trace) -> dict:
    checks = bounds.check_trace(trace, kind)
    out = {"algorithm": kind.name, "params": _kind_params(kind)}
    out.update(trace.summary())
    out["checks"] = [c._asdict() for c in checks]
    out["all_satisfied"] = all(c.satisfied for c in checks)
    return out


def cmd_gen(args) -> int:
    stream = generate(ExperimentSpec(args.experiment, args.rounds))
    if args.out:
        write_csv(stream, args.out)
    else:
        for row in stream:
            sys.stdout.write(",".join(format_float(x) for x in row) + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    stream = _load_source(args)
    kind = _kind(args, args.algo, len(stream))
    trace = run(kind, stream)
    if args.trace_out:
        write_trace(trace, args.trace_out)
    summary = run_summary(kind, trace)
    if args.summary_out:
        with open(args.summary_out, "w", encoding="utf-8") as fh:
            dump_json(summary, fh)
    else:
        dump_json(summary, sys.stdout)
    return EXIT_OK if summary["all_satisfied"] else EXIT_VIOLATION


def default_grid(lo: float = 1e-3, hi: float = 1e2, points: int = 100,
                 include_inf: bool = True) -> List[float]:
    grid = list(np.logspace(math.log10(lo), math.log10(hi), points))
    if include_inf:
        grid.append(math.inf)
    return grid


def sweep_regret(eta: float, stream) -> float:
    return run(parse_kind("hedge", eta=eta), stream).regret


def sweep(stream, grid: Sequence[float], jobs: int = 1):
    """Final regret of fixed-rate Hedge for each rate, sorted by rate."""
    grid = sorted(float(e) for e in grid)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            regrets = list(pool.map(sweep_regret, grid, [stream] * len(grid)))
    else:
        regrets = [sweep_regret(e, stream) for e in grid]
    return list(zip(grid, regrets))


def cmd_sweep(args) -> int:
    stream = _load_source(args)
    if args.grid:
        try:
            grid = [_rate(x) for x in args.grid.split(",")]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"bad --grid: {exc}") from None
    else:
        grid = default_grid(args.grid_min, args.grid_max, args.grid_points, not args.no_inf)
    rows = sweep(stream, grid, args.jobs)
    lines = ["eta,regret"] + [
        f"{'inf' if e == math.inf else format_float(e)},{format_float(r)}" for e, r in rows
    ]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def affine_transform(stream, rng: np.random.Generator):
    """Random ``sigma * loss + tau_t`` with sigma in (0, 10], tau_t in [-5, 5]."""
    sigma = 10.0 * (1.0 - rng.random())
    tau = rng.uniform(-5.0, 5.0, size=len(stream))
    return sigma * np.asarray(stream) + tau[:, None], sigma, tau


def weight_path(kind, stream):
    learner = Learner(kind, np.asarray(stream).shape[1])
    ws, regimes = [], []
    for loss in stream:
        w, rec = learner.step(loss)
        ws.append(w)
        regimes.append(rec.regime)
    return np.array(ws), regimes, learner


def invariance_violations(kind, stream, rng, tol: float = 1e-9) -> List[str]:
    transformed, sigma, _ = affine_transform(stream, rng)
    w0, r0, l0 = weight_path(kind, stream)
    w1, r1, l1 = weight_path(kind, transformed)
    bad = []
    gap = float(np.max(np.abs(w0 - w1)))
    if gap > tol:
        bad.append(f"{kind.name}: weights differ by {gap:.3g} under sigma={sigma:.4g} transform")
    if r0 != r1:
        t = next(i for i, (a, b) in enumerate(zip(r0, r1), start=1) if a != b)
        bad.append(f"{kind.name}: regime sequence differs from round {t}")
    return bad


def _check_stream(label: str, stream, args, rng) -> List[str]:
    bad: List[str] = []
    for algo in args.algo or ALGORITHMS:
        eta = args.eta if args.eta is not None else 1.0
        kind = parse_kind(algo, eta=eta,
                          horizon=args.horizon if args.horizon is not None else len(stream),
                          phi=args.phi, alpha=args.alpha)
        trace = run(kind, stream)
        for c in bounds.check_trace(trace, kind):
            if not c.satisfied:
                bad.append(f"{label} {kind.name}: {c.name} violated: "
                           f"{c.quantity!r} > {c.bound!r}")
        if isinstance(kind, (AdaHedge, FlipFlop)):
            bad.extend(f"{label} {m}" for m in invariance_violations(kind, stream, rng))
    return bad


def cmd_check(args) -> int:
    if args.verify_trace:
        rows = read_trace(args.verify_trace)
        summary = None
        if args.summary:
            with open(args.summary, encoding="utf-8") as fh:
                summary = json.load(fh)
        algos = args.algo or [None]
        if len(algos) > 1:
            raise UsageError("--verify-trace takes at most one --algo")
        K = args.experts if args.experts is not None else (summary or {}).get("K")
        params = (summary or {}).get("params", {})
        phi = args.phi if args.phi is not None else params.get("phi", 2.37)
        alpha = args.alpha if args.alpha is not None else params.get("alpha", 1.243)
        bad = verify_trace(rows, algos[0], K=K, scale=args.scale, summary=summary,
                           phi=phi, alpha=alpha)
    else:
        rng = np.random.default_rng(args.seed)
        if args.input is not None:
            if args.experiment:
                raise UsageError("give either --experiment or --input, not both")
            sources = [(args.input, load_csv(args.input))]
        else:
            sources = [(f"experiment {xi}", generate(ExperimentSpec(xi, args.rounds)))
                       for xi in (args.experiment or EXPERIMENTS)]
        bad = []
        for label, stream in sources:
            bad.extend(_check_stream(label, stream, args, rng))
    for line in bad:
        print(f"VIOLATION {line}")
    if bad:
        return EXIT_VIOLATION
    print("ok")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParameterError) as exc:
        print(f"flipflop {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, OSError) as exc:
        print(f"flipflop {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
