"""Command-line front door: `qamlab <subcommand> ...` prints a JSON RunReport.

Exit codes are 0 when the run was reported, 2 for input or machine-file
errors and 3 when an internal exactness check failed.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from qamlab.core.config import settings
from qamlab.core.errors import QamlabError, SpecError
from qamlab.core.logging import configure_logging
from qamlab.engines.runs import (
    run_halting_bound,
    run_machine_protocol,
    run_q1afa,
    run_subset_sum,
    run_tree_eval,
)
from qamlab.formats.common import read_text
from qamlab.models.protocol import ProtocolMode
from qamlab.models.reports import RunReport

logger = logging.getLogger(__name__)


def _selection(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"selection {text!r} is not a comma-separated list of indices")


def _subset_sum(args: argparse.Namespace) -> RunReport:
    selection = None if args.maximize or args.selection is None else args.selection
    return run_subset_sum(args.instance, selection, trace=args.trace)


def _protocol(mode: ProtocolMode):
    def command(args: argparse.Namespace) -> RunReport:
        return run_machine_protocol(
            read_text(args.machine),
            args.input,
            args.prover,
            strategy=args.strategy,
            rounds=args.rounds,
            max_transcript=args.max_transcript,
            trace=args.trace,
            mode=mode,
        )

    return command


def _q1afa(args: argparse.Namespace) -> RunReport:
    return run_q1afa(read_text(args.machine), args.input, args.depth)


def _tree_eval(args: argparse.Namespace) -> RunReport:
    return run_tree_eval(read_text(args.spec), args.depth_cap, args.oracle)


def _halting_bound(args: argparse.Namespace) -> RunReport:
    return run_halting_bound(read_text(args.elements))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trace", action="store_true", help="keep per-symbol traces in the report")
    common.add_argument("--trace-dir", type=Path, help="also write the report here (QAMLAB_TRACE_DIR)")
    common.add_argument("--max-transcript", type=int, help="truncation horizon of a protocol round")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="qamlab", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("subset-sum", parents=[common], help="SUBSET-SUM protocol")
    p.add_argument("instance", help="S$a1$...$an$ in binary")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--selection", type=_selection, help="indices the prover commits to, e.g. 1,3")
    group.add_argument("--maximize", action="store_true", help="best selection (default)")
    p.set_defaults(run=_subset_sum)

    for name, mode in (("dtm-protocol", ProtocolMode.WEAK), ("atm-protocol", ProtocolMode.STRONG)):
        p = commands.add_parser(name, parents=[common], help=f"{mode.value} protocol on a machine file")
        p.add_argument("--machine", required=True, help="machine-spec file")
        p.add_argument("--input", default="", help="input string x")
        p.add_argument("--prover", default="honest", help="honest, defect-digit:B:P:D, skip-config:B, ...")
        p.add_argument("--strategy", nargs="*", default=[], help="existential choices as q=l or q=r")
        p.add_argument("--rounds", type=int, help="iterate this many rounds instead of the closed form")
        p.set_defaults(run=_protocol(mode))

    p = commands.add_parser("q1afa", parents=[common], help="accepting-subtree search")
    p.add_argument("--machine", required=True, help="DTM, ATM or q1afa file")
    p.add_argument("--input", default="", help="input string x")
    p.add_argument("--depth", type=int, help=f"search depth (default {settings.DEFAULT_SEARCH_DEPTH})")
    p.set_defaults(run=_q1afa)

    p = commands.add_parser("tree-eval", parents=[common], help="finite computation tree of an IPS verifier")
    p.add_argument("--spec", required=True, help="configuration-graph file")
    p.add_argument("--depth-cap", type=int, help="truncate below this depth instead of 2^|C|")
    p.add_argument("--oracle", action="store_true", help="also run the strategy oracle")
    p.set_defaults(run=_tree_eval)

    p = commands.add_parser("halting-bound", parents=[common], help="absolute-halting bound")
    p.add_argument("--elements", required=True, help="elements file")
    p.set_defaults(run=_halting_bound)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.trace_dir is not None:
        settings.TRACE_DIR = args.trace_dir
    if args.max_transcript is not None and args.max_transcript < 1:
        print("error: --max-transcript must be positive", file=sys.stderr)
        return SpecError.exit_code

    try:
        report = args.run(args)
    except QamlabError as e:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    sys.stdout.write(report.to_json())
    return 0
