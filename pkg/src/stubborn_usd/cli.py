"""Command-line interface.

Exit codes: 0 ok, 1 a checked property was violated, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence

from . import analytics
from .coupling import check_monotone_run, config_geq, random_instance
from .core import Configuration, ProtocolParams
from .engine import THREADS_ENV, TrialSpec, run_results, run_trials, summarize
from .oracle import DEFAULT_CAP, compare_monte_carlo, solve_chain
from .rng import Stream
from .sweep import SweepSpec, cell_from_summary, render_svg, run_sweep, to_csv

DRIFT_TOLERANCE = 1e-10


class UsageError(Exception):
    pass


def _parse_grid(text: str, kind=float) -> List:
    """``a,b,c`` or an inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad range {text!r}; expected start:stop:step")
        start, stop, step = (kind(s) for s in parts)
        if step <= 0:
            raise UsageError(f"range step must be positive in {text!r}")
        out = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + (1e-9 if kind is float else 0):
                break
            out.append(round(v, 12) if kind is float else v)
            k += 1
        return out
    try:
        return [kind(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise UsageError(f"bad list {text!r}: {exc}") from None


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get(THREADS_ENV, "1") or 1)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_from_flags(args) -> Configuration:
    n, x1 = args.n, args.x1
    if n is None or x1 is None:
        raise UsageError("--n and --x1 are required")
    if args.x2 is not None and args.u is not None:
        if x1 + args.x2 + args.u != n:
            raise UsageError("x1 + x2 + u must equal n")
        x2, u = args.x2, args.u
    elif args.x2 is not None:
        x2, u = args.x2, n - x1 - args.x2
    elif args.u is not None:
        x2, u = n - x1 - args.u, args.u
    else:
        x2, u = n - x1, 0
    if min(n, x1, x2, u) < 0:
        raise UsageError(f"invalid counts n={n} x1={x1} x2={x2} u={u}")
    try:
        return Configuration(x1, x2, u)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _stubbornness(args, c: Configuration) -> float:
    if (args.p is None) == (args.dp is None):
        raise UsageError("give exactly one of --p and --dp")
    if args.p is not None:
        p = args.p
    else:
        p_s = analytics.threshold(c)
        if p_s is None:
            raise UsageError("--dp needs x2 > 0")
        p = p_s + args.dp
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"p must lie in [0, 1], got {p}")
    return p


def cmd_simulate(args) -> int:
    c = _config_from_flags(args)
    p = _stubbornness(args, c)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    if args.stride < 0:
        raise UsageError("--stride must be >= 0")
    try:
        spec = TrialSpec(c, ProtocolParams(p), seed=args.seed,
                         max_interactions=args.max_steps, record_stride=args.stride)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.stride > 0:
        runs = run_trials(spec, args.trials)
        summary = summarize([r for r, _ in runs])
    else:
        summary = summarize(run_results(spec, args.trials, _threads(args)))
    if args.format == "csv":
        _emit(to_csv([cell_from_summary(c, p, summary)]), args.out)
        return 0
    doc = {
        "config": {"x1": c.x1, "x2": c.x2, "u": c.u, "n": c.n},
        "p": p,
        "p_s": analytics.threshold(c),
        "seed": args.seed,
        "max_interactions": spec.max_interactions,
        "summary": summary.to_dict(),
    }
    if args.stride > 0:
        doc["trajectories"] = [
            {"outcome": r.outcome.value, "interactions": r.interactions, **traj.to_dict()}
            for r, traj in runs
        ]
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    x1_grid = _parse_grid(args.x1_grid, int)
    if (args.p_grid is None) == (args.dp_grid is None):
        raise UsageError("give exactly one of --p-grid and --dp-grid")
    grid = _parse_grid(args.p_grid if args.p_grid is not None else args.dp_grid)
    u = float(args.u) if "." in args.u else int(args.u)
    try:
        spec = SweepSpec(n=args.n, x1_grid=x1_grid, u=u, p_grid=grid, trials=args.trials,
                         seed=args.seed, max_interactions=args.max_steps,
                         relative=args.dp_grid is not None)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    cells = run_sweep(spec, _threads(args))
    _emit(to_csv(cells), args.out)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(render_svg(cells, args.n))
    return 0


def cmd_oracle(args) -> int:
    if args.n > args.cap:
        raise UsageError(f"n={args.n} exceeds the exact-solver cap {args.cap}")
    if args.n < 2 or not 0.0 <= args.p <= 1.0:
        raise UsageError("need n >= 2 and p in [0, 1]")
    sol = solve_chain(args.n, args.p, cap=args.cap)
    if args.config:
        try:
            states = [Configuration.parse(args.config)]
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from None
        if states[0].n != args.n:
            raise UsageError(f"--config {args.config} does not sum to n={args.n}")
    else:
        states = list(sol.states)
    rows = [sol.as_dict(c) for c in states]
    doc = {"n": sol.n, "p": sol.p, "residual": sol.residual, "states": rows}
    status = 0
    if args.check_mc:
        worst = 0.0
        for k, (c, row) in enumerate(zip(states, rows)):
            if c.is_frozen:
                continue
            cmp = compare_monte_carlo(sol, c, args.check_mc, seed=Stream(args.seed, k).u64(),
                                      parallelism=_threads(args))
            row["empirical_win1"] = cmp.empirical
            row["z"] = cmp.z_score
            worst = max(worst, abs(cmp.z_score))
        doc["max_abs_z"] = worst
        if worst > args.z_limit:
            status = 1
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return status


def cmd_couple(args) -> int:
    runs = []
    if args.random is not None:
        if args.random < 1 or args.n is None or args.n < 2:
            raise UsageError("--random needs a positive count and --n >= 2")
        for k in range(args.random):
            runs.append(random_instance(args.n, Stream(args.seed, k)))
    else:
        if None in (args.c, args.p, args.c_tilde, args.p_tilde):
            raise UsageError("give --c, --p, --c-tilde and --p-tilde (or --random)")
        try:
            c, c2 = Configuration.parse(args.c), Configuration.parse(args.c_tilde)
        except (ValueError, TypeError) as exc:
            raise UsageError(str(exc)) from None
        if c.n != c2.n:
            raise UsageError("both configurations need the same n")
        if args.p < args.p_tilde or not config_geq(c, c2):
            raise UsageError("need p >= p_tilde and c to dominate c_tilde")
        if not (0.0 <= args.p_tilde <= args.p <= 1.0):
            raise UsageError("p values must lie in [0, 1]")
        runs = [(c, args.p, c2, args.p_tilde)] * args.runs
    reports = []
    violations = 0
    for k, (c, p, c2, p2) in enumerate(runs):
        rep = check_monotone_run(c, p, c2, p2, args.steps, seed=Stream(args.seed, k).u64(),
                                 self_pairs=args.self_pairs)
        violations += not rep.preserved
        reports.append({
            "run": k, "c": str(c), "p": p, "c_tilde": str(c2), "p_tilde": p2,
            "preserved": rep.preserved, "first_violation": rep.first_violation,
            "final": str(rep.final[0]), "final_tilde": str(rep.final[1]),
        })
    doc = {"runs": len(reports), "steps": args.steps, "violations": violations, "reports": reports}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 1 if violations else 0


def cmd_drift_check(args) -> int:
    grid = _parse_grid(args.p_grid)
    if any(not 0.0 <= p <= 1.0 for p in grid) or not grid:
        raise UsageError("p grid values must lie in [0, 1]")
    if args.n_max < 2:
        raise UsageError("--n-max must be >= 2")
    worst = analytics.drift_discrepancies(args.n_max, grid)
    failed = {k: v for k, v in worst.items() if v > DRIFT_TOLERANCE}
    doc = {"n_max": args.n_max, "p_grid": grid, "tolerance": DRIFT_TOLERANCE,
           "max_abs_discrepancy": worst, "ok": not failed}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stubborn-usd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a batch of trials from one configuration")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--x1", type=int, required=True)
    sim.add_argument("--x2", type=int)
    sim.add_argument("--u", type=int)
    sim.add_argument("--p", type=float)
    sim.add_argument("--dp", type=float, help="stubbornness as an offset from 1 - x1/x2")
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--max-steps", type=int, help="interaction budget per trial")
    sim.add_argument("--stride", type=int, default=0, help="record trajectories every N interactions")
    sim.add_argument("--format", choices=("json", "csv"), default="json")
    sim.add_argument("--out")
    sim.add_argument("--threads", type=int)
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="grid of (x1, p) cells as CSV, optional SVG heatmap")
    sw.add_argument("--n", type=int, required=True)
    sw.add_argument("--x1-grid", required=True, help="a,b,c or start:stop:step")
    sw.add_argument("--u", default="0", help="undecided count, or a fraction of n")
    sw.add_argument("--p-grid")
    sw.add_argument("--dp-grid", help="offsets from the threshold 1 - x1/x2")
    sw.add_argument("--trials", type=int, default=100)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--max-steps", type=int)
    sw.add_argument("--out")
    sw.add_argument("--svg")
    sw.add_argument("--threads", type=int)
    sw.set_defaults(func=cmd_sweep)

    orc = sub.add_parser("oracle", help="exact absorption probabilities for small n")
    orc.add_argument("--n", type=int, required=True)
    orc.add_argument("--p", type=float, required=True)
    orc.add_argument("--config", help="x1,x2,u of a single state to report")
    orc.add_argument("--check-mc", type=int, metavar="TRIALS", default=0)
    orc.add_argument("--z-limit", type=float, default=5.0)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--cap", type=int, default=DEFAULT_CAP)
    orc.add_argument("--out")
    orc.add_argument("--threads", type=int)
    orc.set_defaults(func=cmd_oracle)

    cp = sub.add_parser("couple", help="check order preservation of the monotone coupling")
    cp.add_argument("--c", help="x1,x2,u of the dominating configuration")
    cp.add_argument("--p", type=float)
    cp.add_argument("--c-tilde", help="x1,x2,u of the dominated configuration")
    cp.add_argument("--p-tilde", type=float)
    cp.add_argument("--random", type=int, metavar="RUNS", help="random valid instances instead")
    cp.add_argument("--n", type=int, help="population size for --random")
    cp.add_argument("--steps", type=int, default=10_000)
    cp.add_argument("--runs", type=int, default=1)
    cp.add_argument("--seed", type=int, default=0)
    cp.add_argument("--self-pairs", action="store_true")
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_couple)

    dc = sub.add_parser("drift-check", help="closed-form drifts against enumeration")
    dc.add_argument("--n-max", type=int, default=12)
    dc.add_argument("--p-grid", default="0:1:0.1")
    dc.add_argument("--out")
    dc.set_defaults(func=cmd_drift_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
