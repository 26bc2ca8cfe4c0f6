"""Command-line entry point: ``hetsearch {run,compare,oracle,validate}``.

Exit codes: 0 success, 1 parse/schema error, 2 evaluation error, 3 I/O
error, 4 lattice too large for the oracle, 5 infeasible problem.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import SamplingStrategy
from .errors import EvalError, InfeasibleError, ParseError, SchemaError, SpaceTooLargeError
from .evolution import brute_force_oracle
from .harness import compare_strategies, report_json, run_report, trace_csv
from .problem import parse_problem

EXIT_SCHEMA, EXIT_EVAL, EXIT_IO, EXIT_TOO_LARGE, EXIT_INFEASIBLE = 1, 2, 3, 4, 5

log = logging.getLogger("hetsearch")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # keep 2 reserved for evaluation errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _add_search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--iters", type=int, help="number of sweeps")
    p.add_argument("--pop", type=int, help="population size (even)")
    p.add_argument("--strategy", choices=[s.value for s in SamplingStrategy])
    p.add_argument("--scan-cap", type=int, help="largest domain scanned exhaustively")
    p.add_argument("--init-attempts", type=int, help="rejection-sampling attempts per member")
    p.add_argument("--out", type=Path, help="write the main output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hetsearch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hetsearch {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="search a problem file and print a JSON report")
    p.add_argument("problem", type=Path)
    _add_search_flags(p)
    p.add_argument("--trace-out", type=Path, help="CSV of per-iteration best/mean cost and resets")
    p.add_argument("--timing", action="store_true", help="include wall-clock duration in the report")

    p = sub.add_parser("compare", help="average best-cost curves of the three sampling strategies")
    p.add_argument("problem", type=Path)
    _add_search_flags(p)
    p.add_argument("--repeats", type=int, default=30)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("oracle", help="exhaustive minimum (small lattices only)")
    p.add_argument("problem", type=Path)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("validate", help="schema check only")
    p.add_argument("problem", type=Path)
    return parser


def _overrides(args) -> dict:
    return {
        "seed": args.seed,
        "max_iterations": args.iters,
        "population_size": args.pop,
        "strategy": args.strategy,
        "scan_cap": args.scan_cap,
        "init_attempts": args.init_attempts,
    }


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="\n")


def _cmd_run(args) -> int:
    report = run_report(args.problem.read_bytes(), _overrides(args), timing=args.timing)
    _emit(report_json(report.to_json()), args.out)
    if args.trace_out:
        args.trace_out.write_text(trace_csv(report.result), encoding="utf-8", newline="\n")
    return 0


def _cmd_compare(args) -> int:
    source = args.problem.read_bytes()
    spec = parse_problem(source)
    config = spec.defaults.with_overrides(**_overrides(args))
    report = compare_strategies(source, args.repeats, config, jobs=args.jobs)
    _emit(report.to_csv(), args.out)
    return 0


def _cmd_oracle(args) -> int:
    spec = parse_problem(args.problem.read_bytes())
    best, cost = brute_force_oracle(spec)
    _emit(report_json({"best": best, "best_cost": cost}), args.out)
    return 0


def _cmd_validate(args) -> int:
    spec = parse_problem(args.problem.read_bytes())
    print(
        f"ok: {len(spec.space)} parameter(s), {len(spec.assertions)} constraint(s), "
        f"lattice size {spec.space.lattice_size()}"
    )
    return 0


COMMANDS = {"run": _cmd_run, "compare": _cmd_compare, "oracle": _cmd_oracle, "validate": _cmd_validate}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SchemaError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except EvalError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_EVAL
    except SpaceTooLargeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, UnicodeDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
