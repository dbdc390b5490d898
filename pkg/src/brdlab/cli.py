"""Command-line front end: ``brdlab {simulate,exact,trace,couple,oracle}``.

Exit codes: 0 success, 1 usage or configuration error, 2 violated run
invariant (for example ``T >= F`` or ``F_X != F_Y``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analytics, coupling, montecarlo
from .dynamics import SequenceKind, run_clockwork, run_random_sequence
from .errors import BrdError, ConfigError, InvariantViolation
from .game import BestResponseTable, GameShape, derive_best_response_table
from .oracle import DEFAULT_BUDGET, oracle
from .sampling import SeedSpec, sample_best_response_table, sample_game_payoffs, sample_initial_profile

log = logging.getLogger("brdlab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal or 0x-hex integer, got {text!r}") from None


def _shape(args) -> GameShape:
    if args.m is None:
        raise ConfigError("--m is required")
    m = list(args.m)
    n = getattr(args, "n", None)
    if n is not None and len(m) == 1:
        m = m * n
    if n is not None and len(m) != n:
        raise ConfigError(f"--n {n} does not match --m {' '.join(map(str, m))}")
    try:
        return GameShape(tuple(m))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _profile(text: str | None, shape: GameShape):
    if text is None:
        return None
    try:
        prof = tuple(int(x) for x in text.replace(",", " ").split())
        shape.index(prof)
    except ValueError as exc:
        raise ConfigError(f"bad profile {text!r}: {exc}") from None
    return prof


def _emit(args, text: str, suffix: str = "") -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    path = Path(args.out)
    if suffix:
        path = path.with_name(path.stem + suffix)
    path.write_text(text, encoding="utf-8", newline="\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


# --- subcommands --------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        items = raw.get("configs", [raw]) if isinstance(raw, dict) else raw
        configs = [montecarlo.ExperimentConfig.from_json({"seed": args.seed, **d}) for d in items]
    elif args.grid:
        grid = {"fig2": montecarlo.figure2_grid, "fig3": montecarlo.figure3_grid}[args.grid]
        configs = grid(args.batches, args.games, args.seed)
    else:
        configs = [montecarlo.ExperimentConfig(_shape(args), args.sequence, args.estimand,
                                               args.batches, args.games, args.seed)]
    results = [montecarlo.run_experiment(c, workers=args.workers) for c in configs]
    meta = montecarlo.metadata(configs, workers=args.workers or montecarlo.default_workers())
    if args.format == "json":
        _emit(args, _dump({"meta": meta, "results": [montecarlo.stats_to_json(s) for s in results]}))
        return 0
    if args.out is None:
        sys.stdout.write(montecarlo.batches_csv(results))
        sys.stdout.write("\n")
        sys.stdout.write(montecarlo.summary_csv(results))
        return 0
    _emit(args, montecarlo.batches_csv(results))
    _emit(args, montecarlo.summary_csv(results), ".summary.csv")
    _emit(args, _dump(meta), ".meta.json")
    return 0


def cmd_exact(args) -> int:
    m = tuple(args.m) if args.m else None
    if m is not None and len(m) == 1:
        m = m * 2
    res = analytics.evaluate(args.formula, m=m, k=args.k, t=args.t, x=args.x, player=args.player)
    if args.format == "csv":
        value = res.value if isinstance(res.value, tuple) else (res.value,)
        _emit(args, "formula,value\n" + f"{res.formula}," + ",".join(repr(float(v)) for v in value) + "\n")
    else:
        _emit(args, _dump(res.to_json()))
    return 0


def _trace_table(args, shape: GameShape, spec: SeedSpec) -> BestResponseTable:
    if args.table:
        path = Path(args.table)
        if not path.is_file():
            raise ConfigError(f"table file not found: {path}")
        try:
            return BestResponseTable.from_text(path.read_text(encoding="utf-8"), shape)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if args.route == "payoffs":
        return derive_best_response_table(sample_game_payoffs(shape, spec.with_purpose("payoffs")))
    return sample_best_response_table(shape, spec.with_purpose("table"))


def cmd_trace(args) -> int:
    shape = _shape(args)
    spec = SeedSpec(args.seed)
    table = _trace_table(args, shape, spec)
    a0 = _profile(args.start, shape) or sample_initial_profile(shape, spec.with_purpose("initial"))
    seq = SequenceKind(args.sequence)
    if seq is SequenceKind.CLOCKWORK:
        out, traj = run_clockwork(table, a0)
    else:
        out, traj = run_random_sequence(table, a0, spec.with_purpose("sequence"))
    config = {"m": list(shape.m), "seed": args.seed, "sequence": seq.value, "route": args.route,
              "table": args.table, "start": list(a0),
              "substreams": {p: {"key_purpose": p, "counter": spec.counter()}
                             for p in ("table", "payoffs", "initial", "sequence")}}
    lines = [f"# config {json.dumps(config)}", "t\tplayer\tprofile_index\tprofile"]
    fmt = lambda p: ",".join(map(str, shape.profile(p)))  # noqa: E731
    lines.append(f"0\t-\t{traj.initial}\t{fmt(traj.initial)}")
    for s in traj.steps:
        lines.append(f"{s.t}\t{s.player + 1}\t{s.profile}\t{fmt(s.profile)}")
    fields = {"kind": out.kind.value, "k": out.k, "T": out.T, "F": out.F, "hit_time": out.hit_time}
    lines.append("# outcome " + " ".join(f"{k}={'-' if v is None else v}" for k, v in fields.items()))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_couple(args) -> int:
    shape = _shape(args)
    sink = _profile(args.sink, shape)
    rows = []
    for r in range(args.runs):
        spec = SeedSpec(args.seed, 0, r, "walk")
        if sink is None:
            run = coupling.run_coupled(shape, spec, args.horizon)
        else:
            run = coupling.run_coupled_with_sink(shape, sink, spec, args.horizon)
        coupling.check_coupling(run)
        o = run.outcome
        rows.append((r, run.F_X, run.F_Y, o.kind.value, o.k, o.T,
                     "" if run.sink_hit_time is None else run.sink_hit_time))
    F = np.array([row[2] for row in rows], dtype=float)
    agg = {
        "runs": args.runs,
        "m": list(shape.m),
        "sink": list(sink) if sink else None,
        "seed": args.seed,
        "fx_equals_fy": all(row[1] == row[2] for row in rows) if sink is None else None,
        "converged_frequency": float(np.mean([row[3] == "pne" for row in rows])) if rows else None,
        "mean_F": float(F.mean()) if rows else None,
    }
    if sink is not None:
        agg["sink_hit_frequency"] = float(np.mean([row[6] != "" for row in rows]))
    if args.format == "json":
        _emit(args, _dump({"aggregate": agg, "runs": [dict(zip(
            ("run", "F_X", "F_Y", "outcome", "k", "T", "sink_hit_time"), row)) for row in rows]}))
        return 0
    text = montecarlo._csv_text(("run", "F_X", "F_Y", "outcome", "k", "T", "sink_hit_time"), rows)
    _emit(args, text)
    if args.out is None:
        sys.stderr.write(_dump(agg))
    else:
        _emit(args, _dump(agg), ".meta.json")
    return 0


def cmd_oracle(args) -> int:
    res = oracle(_shape(args), budget=args.budget)
    _emit(args, _dump(res.to_json()))
    return 0


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0, help="master seed, decimal or 0x-hex")
    common.add_argument("--out", help="output path (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    shape = _Parser(add_help=False)
    shape.add_argument("--n", type=int)
    shape.add_argument("--m", type=int, nargs="+", help="action counts, or one count with --n")

    p = _Parser(prog="brdlab", description="Best-response dynamics on random normal-form games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common, shape], help="Monte Carlo ensembles")
    s.add_argument("--config", help="JSON config object, list, or {'configs': [...]}")
    s.add_argument("--grid", choices=("fig2", "fig3"))
    s.add_argument("--sequence", choices=[k.value for k in SequenceKind], default="clockwork")
    s.add_argument("--estimand", default="converged")
    s.add_argument("--batches", type=int, default=10)
    s.add_argument("--games", type=int, default=1000, help="games per batch")
    s.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default from ${montecarlo.WORKERS_ENV}, else 1)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("exact", parents=[common], help="evaluate a closed-form quantity")
    e.add_argument("--formula", required=True, choices=analytics.FORMULAS)
    e.add_argument("--m", type=int, nargs="+")
    e.add_argument("--k", type=int)
    e.add_argument("--t", type=int)
    e.add_argument("--x", type=float)
    e.add_argument("--player", type=int, help="0-based player")
    e.set_defaults(func=cmd_exact)

    t = sub.add_parser("trace", parents=[common, shape], help="one trajectory as TSV")
    t.add_argument("--sequence", choices=[k.value for k in SequenceKind], default="clockwork")
    t.add_argument("--table", help="best-response table text file")
    t.add_argument("--route", choices=("table", "payoffs"), default="table",
                   help="sample the table directly or derive it from sampled payoffs")
    t.add_argument("--start", help="initial profile, e.g. '1,2,1'")
    t.set_defaults(func=cmd_trace)

    c = sub.add_parser("couple", parents=[common, shape], help="coupled dynamic runs")
    c.add_argument("--sink", help="profile to plant as a sink, e.g. '1,2'")
    c.add_argument("--runs", type=int, default=1000)
    c.add_argument("--horizon", type=int, default=0)
    c.set_defaults(func=cmd_couple)

    o = sub.add_parser("oracle", parents=[common, shape], help="exact law by enumeration")
    o.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except InvariantViolation as exc:
        print(f"brdlab: invariant violated: {exc}", file=sys.stderr)
        return 2
    except (BrdError, ValueError, OSError) as exc:
        print(f"brdlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
