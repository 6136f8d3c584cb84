"""Command line entry point.

    bench run --variant intempo|intempo-plus|oracle
              (--events FILE | --sim-seed N [--sensors 10 --datums 10000
               --reactions 30000 --horizon 2592000 --op-probability 0.5])
              [--formula FILE] [--loop 3600]
              [--semantics lifespan|occurrence] [--warmup-loops 0]
              --out DIR

Exit codes: 0 success, 1 usage error, 2 input error, 3 internal failure.
"""

from __future__ import annotations

import argparse
import sys
import traceback

from .bench import RunConfig, VARIANTS, run
from .errors import IntempoError
from .simulator import ANTIBIOTIC_RULE, SimConfig
from .translate import LIFESPAN, OCCURRENCE


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="bench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one benchmark variant")
    run_p.add_argument("--variant", required=True, choices=VARIANTS)
    run_p.add_argument(
        "--formula",
        help="rule file (default: the built-in antibiotic-administration rule)",
    )
    source = run_p.add_mutually_exclusive_group(required=True)
    source.add_argument("--events", help="event sequence file")
    source.add_argument("--sim-seed", type=int, help="generate the workload")
    run_p.add_argument("--sensors", type=int, default=10)
    run_p.add_argument("--datums", type=int, default=10_000)
    run_p.add_argument("--reactions", type=int, default=30_000)
    run_p.add_argument("--horizon", type=int, default=2_592_000)
    run_p.add_argument("--op-probability", type=float, default=0.5)
    run_p.add_argument("--loop", type=int, default=3600)
    run_p.add_argument("--semantics", choices=(LIFESPAN, OCCURRENCE), default=LIFESPAN)
    run_p.add_argument("--warmup-loops", type=int, default=0)
    run_p.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1

    try:
        formula_text = ANTIBIOTIC_RULE
        if args.formula:
            with open(args.formula, "r", encoding="utf-8") as fh:
                formula_text = fh.read()
        sim = None
        if args.sim_seed is not None:
            sim = SimConfig(
                num_sensors=args.sensors,
                datum_events_per_sensor=args.datums,
                reaction_events_per_pump=args.reactions,
                op_probability=args.op_probability,
                horizon=args.horizon,
                loop_interval=args.loop,
                seed=args.sim_seed,
            )
        config = RunConfig(
            variant=args.variant,
            formula_text=formula_text,
            sim=sim,
            events_path=args.events,
            loop_interval=args.loop,
            semantics=args.semantics,
            out_dir=args.out,
            warmup_loops=args.warmup_loops,
        )
        result = run(config)
    except (IntempoError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3

    for key, value in result.summary.items():
        print(f"{key}: {value}")
    if result.summary.get("loops_prune_over_20pct_of_query", 0):
        print(
            "note: prune time exceeded 20% of query time in "
            f"{result.summary['loops_prune_over_20pct_of_query']} loop(s)"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
