"""isacbeam command line.

    isacbeam run <config.json> [--out DIR] [--normalize]
    isacbeam sweep <config.json> [--out DIR]
    isacbeam verify [--level fast|full] [--seed N]
    isacbeam feasibility <config.json>

Exit codes: 0 success, 2 infeasible secrecy rate, 1 any other error (usage
errors and failed verification included). Errors are also written to stderr
as one JSON object.
Machine output goes to stdout; logs go to stderr and the log directory.
"""

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from config import DEBUG, enable_debug_mode
from core import experiments
from core.errors import InfeasibleError, IsacError
from core.logging import get_logger, log_error, performance_monitor, setup_logging

logger = get_logger("isacbeam")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with EXIT_ERROR; 2 is reserved for infeasible rates."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="isacbeam",
        description="Secrecy-constrained ISAC transmit beamforming experiments.",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Console log level (default: WARNING)",
    )
    parser.add_argument("--debug", action="store_true", help="Debug logging and solver output")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Solve one design (or 'compare') and write CSVs")
    run.add_argument("config", help="Scenario JSON file")
    run.add_argument("--out", default=None, help="Output directory (default: from scenario)")
    run.add_argument(
        "--normalize",
        action="store_true",
        help="Also write beampatterns relative to each curve's own maximum",
    )

    sweep = sub.add_parser("sweep", help="Matching error of all designs over the R0 sweep")
    sweep.add_argument("config", help="Scenario JSON file")
    sweep.add_argument("--out", default=None, help="Output directory (default: from scenario)")

    verify = sub.add_parser("verify", help="Run the built-in verification suite")
    verify.add_argument("--level", default="fast", choices=["fast", "full"])
    verify.add_argument("--seed", type=int, default=0, help="Fuzzing seed (default: 0)")

    feasibility = sub.add_parser("feasibility", help="Print the maximum secrecy rate R*")
    feasibility.add_argument("config", help="Scenario JSON file")
    return parser


def _emit_error(error: Exception) -> None:
    if isinstance(error, IsacError):
        payload = error.to_dict()
    else:
        payload = {"error": type(error).__name__, "message": str(error)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "run":
        outcome = experiments.run_design(args.config, out_dir=args.out, normalize=args.normalize)
        for path in outcome.files:
            print(path)
        return EXIT_OK

    if args.command == "sweep":
        outcome = experiments.run_sweep(args.config, out_dir=args.out)
        print(outcome.path)
        return EXIT_OK

    if args.command == "feasibility":
        result = experiments.run_feasibility(args.config)
        print(f"{result.rate:.9g}")
        return EXIT_OK

    outcome = experiments.run_verify(level=args.level, seed=args.seed)
    for line in outcome.lines:
        print(line)
    return outcome.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.debug:
        enable_debug_mode()
    level = logging.DEBUG if DEBUG.ENABLE_DEBUG_LOGGING else getattr(logging, args.log_level)
    setup_logging(log_level=level)
    logger.info(f"isacbeam {args.command} started")

    try:
        code = _dispatch(args)
    except InfeasibleError as e:
        logger.warning(str(e))
        _emit_error(e)
        code = EXIT_INFEASIBLE
    except IsacError as e:
        log_error(f"{args.command} failed: {e}", context={"error": type(e).__name__})
        _emit_error(e)
        code = EXIT_ERROR
    except Exception as e:
        log_error(f"{args.command} crashed: {e}", exc_info=True)
        _emit_error(e)
        code = EXIT_ERROR
    finally:
        performance_monitor.report()

    logger.info(f"isacbeam {args.command} finished with exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(main())
