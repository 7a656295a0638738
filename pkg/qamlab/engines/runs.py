"""One entry point per subcommand, shared by the CLI and the HTTP routes.

Each run takes file contents rather than paths so the routes can pass request
bodies straight through, and returns a RunReport.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence

from qamlab.core.config import settings
from qamlab.core.errors import MachineError, NotCertifiedHalting, SpecError
from qamlab.engines.halting import halting_report
from qamlab.engines.ips_tree import strategy_acceptance, tree_eval
from qamlab.engines.provers import make_prover, parse_prover_spec
from qamlab.engines.qalternation import (
    TableQMachine,
    accepting_subtree_search,
    q1afa_from_protocol,
    q1afa_from_strong_protocol,
    strong_eval,
)
from qamlab.engines.qam import make_verifier_config, run_protocol
from qamlab.engines.subset_sum import overall_acceptance, overall_from_round, parse_instance, run_round
from qamlab.formats.common import machine_type
from qamlab.formats.ips_file import parse_ips
from qamlab.formats.machine_file import parse_machine
from qamlab.formats.matrix_file import parse_elements
from qamlab.formats.qmachine_file import parse_qmachine
from qamlab.models.machines import MachineKind
from qamlab.models.protocol import ProtocolMode
from qamlab.models.reports import ProtocolRun, RunReport, SubsetSumRun

logger = logging.getLogger(__name__)


def dump_trace(report: RunReport) -> RunReport:
    """Write the report into TRACE_DIR as <command>.json when tracing is enabled."""
    if not settings.TRACE_ENABLED:
        return report
    directory = Path(settings.TRACE_DIR)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{report.command}.json"
    report = report.model_copy(update={"trace_file": str(path)})
    path.write_text(report.to_json(), encoding="utf-8")
    logger.info("Wrote %s", path)
    return report


def run_subset_sum(
    instance: str, selection: Optional[Sequence[int]] = None, *, trace: bool = False
) -> RunReport:
    parsed = parse_instance(instance)
    arguments = {"instance": instance}
    if selection is None:
        arguments["maximize"] = True
        result = overall_acceptance(parsed)
    else:
        arguments["selection"] = sorted(set(selection))
        round_ = run_round(parsed, selection, trace=trace)
        result = SubsetSumRun(round=round_, overall_accept=overall_from_round(round_.ledger))
    return dump_trace(RunReport(command="subset-sum", arguments=arguments, result=result))


def run_machine_protocol(
    machine: str,
    x: str,
    prover: str = "honest",
    *,
    strategy: Sequence[str] = (),
    rounds: Optional[int] = None,
    max_transcript: Optional[int] = None,
    trace: bool = False,
    mode: ProtocolMode = ProtocolMode.WEAK,
) -> RunReport:
    """Weak protocol on a DTM or strong protocol on a normal-form ATM."""
    spec = parse_machine(machine)
    expected = MachineKind.DTM if mode is ProtocolMode.WEAK else MachineKind.ATM
    if spec.kind is not expected:
        raise SpecError(f"The {mode.value} protocol needs machine type {expected.value}, not {spec.kind.value}")
    if rounds is not None and rounds < 1:
        raise SpecError(f"rounds must be positive, got {rounds}")

    vc = make_verifier_config(spec, x, mode, max_transcript)
    strategy_prover = make_prover(parse_prover_spec(prover, strategy), spec)
    outcome, results = run_protocol(spec, vc, strategy_prover, x, rounds=rounds, trace=trace)
    result = ProtocolRun(
        mode=mode,
        max_transcript=vc.max_transcript,
        outcome=outcome,
        rounds=results if trace else [],
    )
    command = "dtm-protocol" if mode is ProtocolMode.WEAK else "atm-protocol"
    arguments = {
        "machine": spec.name,
        "input": x,
        "prover": prover,
        "strategy": list(strategy),
        "rounds": rounds,
        "max_transcript": max_transcript,
    }
    return dump_trace(RunReport(command=command, arguments=arguments, result=result))


def run_q1afa(machine: str, x: str, depth: Optional[int] = None) -> RunReport:
    """
    Accepting-subtree search on a machine file.

    DTM files are searched through the weak protocol automaton, which is only
    semi-decidable. ATM files go through the strong protocol automaton and
    q1afa files through their own table; both are evaluated exactly once
    absolute halting is certified, and q1afa files that cannot be certified
    fall back to the bounded search.
    """
    kind = machine_type(machine)
    if kind == "dtm":
        automaton = q1afa_from_protocol(parse_machine(machine))
        result = accepting_subtree_search(automaton, x, depth)
    elif kind == "atm":
        automaton = q1afa_from_strong_protocol(parse_machine(machine))
        result = strong_eval(automaton, x)
    elif kind == "q1afa":
        automaton = TableQMachine(parse_qmachine(machine))
        try:
            result = strong_eval(automaton, x)
        except NotCertifiedHalting as e:
            logger.info("Falling back to bounded search: %s", e)
            result = accepting_subtree_search(automaton, x, depth)
    else:
        raise MachineError(f"Unsupported machine type {kind!r}")
    arguments = {"machine": automaton.name, "type": kind, "input": x, "depth": depth}
    return dump_trace(RunReport(command="q1afa", arguments=arguments, result=result))


def run_tree_eval(spec: str, depth_cap: Optional[int] = None, oracle: bool = False) -> RunReport:
    parsed = parse_ips(spec)
    result = tree_eval(parsed, depth_cap)
    if oracle:
        result = result.model_copy(update={"oracle": strategy_acceptance(parsed)})
    arguments = {"spec": parsed.name, "depth_cap": depth_cap, "oracle": oracle}
    return dump_trace(RunReport(command="tree-eval", arguments=arguments, result=result))


def run_halting_bound(elements: str) -> RunReport:
    system = parse_elements(elements)
    return dump_trace(RunReport(command="halting-bound", arguments={"n": system.n}, result=halting_report(system)))
