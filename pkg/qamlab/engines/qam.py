"""Round engine and overall acceptance for the configuration-stream protocols.

A round is simulated exactly: every symbol the prover sends goes through the
verifier, every superoperator is applied to the unconditional register, and
the masses of the terminal outcomes are added to a ledger. Coin outcomes at
branch exchanges fork the round; each fork keeps its own register and public
history, and the ledger is the exact sum over all forks.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from qamlab.core.config import settings
from qamlab.core.errors import InvariantViolation, MachineError, SpecError
from qamlab.engines.linalg import ZERO, is_zero, norm_sq, superop_apply
from qamlab.engines.machines import digit_map, longest_path, validate_normal_form
from qamlab.engines.provers import ProverStrategy, honest_configurations
from qamlab.engines.verifier import ControlState, Phase, RejectStep, VerifierMachine, protocol_scale
from qamlab.models.machines import DOLLAR, MachineKind, MachineSpec
from qamlab.models.protocol import (
    Checkpoint,
    Classification,
    Ledger,
    PathRecord,
    ProtocolMode,
    ProtocolOutcome,
    PublicEvent,
    RoundResult,
    TraceEntry,
    VerifierConfig,
)

logger = logging.getLogger(__name__)


def default_max_transcript(spec: MachineSpec, x: str) -> int:
    """A multiple of the honest transcript length, or the fallback horizon."""
    try:
        if spec.kind is MachineKind.DTM:
            length = sum(len(c) + 2 for c in honest_configurations(spec, x))
        else:
            # |c| = |x| + 3, the two $ and at most one exchange symbol per block
            length = longest_path(spec, x) * (len(x) + 6)
    except MachineError as e:
        logger.info("No honest transcript (%s); using the fallback horizon", e)
        return settings.FALLBACK_MAX_TRANSCRIPT
    return settings.MAX_TRANSCRIPT_FACTOR * max(length, 1)


def make_verifier_config(
    spec: MachineSpec,
    x: str,
    mode: Optional[ProtocolMode] = None,
    max_transcript: Optional[int] = None,
) -> VerifierConfig:
    """Build the verifier configuration for running `spec` on `x`.

    Args:
        spec: The machine the prover claims to run.
        x: The input word.
        mode: Protocol mode. Defaults to Strong5State for ATMs and Weak otherwise.
        max_transcript: Symbols a path may send before it is counted as pending.
            Defaults to a multiple of the honest transcript length.

    Returns:
        A VerifierConfig with the digit map and scale chosen for the mode.
    """
    if mode is None:
        mode = ProtocolMode.STRONG if spec.kind is MachineKind.ATM else ProtocolMode.WEAK
    dm = digit_map(spec)
    return VerifierConfig(
        mode=mode,
        digit_map=dm,
        d=protocol_scale(mode, dm.max_digit),
        length_check=len(x) + 2 if mode is ProtocolMode.STRONG else None,
        max_transcript=max_transcript or default_max_transcript(spec, x),
    )


@dataclass
class _Path:
    control: ControlState
    register: np.ndarray
    history: tuple[PublicEvent, ...]
    sent: int = 0
    coins: str = ""


@dataclass
class _Tally:
    accept: Fraction = ZERO
    reject: Fraction = ZERO
    restart: Fraction = ZERO
    pending: Fraction = ZERO


def _as_list(register: np.ndarray) -> list[Fraction]:
    return [Fraction(v) for v in register]


def run_round(
    spec: MachineSpec,
    vc: VerifierConfig,
    prover: ProverStrategy,
    x: str,
    *,
    trace: bool = False,
    round_index: Optional[int] = None,
) -> RoundResult:
    """Simulate one round exactly over every coin path.

    Args:
        spec: The machine being verified.
        vc: Verifier configuration from make_verifier_config.
        prover: The prover answering each verifier message.
        x: The input word.
        trace: Keep a per-step trace entry for every path.
        round_index: Announced to the prover at the start of the round when set.

    Returns:
        The round's probability ledger together with its path records,
        checkpoints and (when requested) trace.
    """
    machine = VerifierMachine(spec, vc, x)
    control, register, restart = machine.start()
    tally = _Tally(restart=restart)
    paths: list[PathRecord] = []
    checkpoints: list[Checkpoint] = []
    entries: list[TraceEntry] = []

    opening = (PublicEvent("round", str(round_index)),) if round_index is not None else ()
    stack = [_Path(control, register, opening)]
    while stack:
        path = stack.pop()
        while True:
            if path.sent >= vc.max_transcript:
                tally.pending += norm_sq(path.register)
                paths.append(_record(path, "pending"))
                break

            symbol = prover.respond(x, path.history)
            before = path.control
            control, steps = machine.feed(before, symbol)
            path = _Path(
                control,
                path.register,
                path.history + (PublicEvent("prover", symbol),),
                path.sent + 1,
                path.coins,
            )

            finished = False
            for step in steps:
                if isinstance(step, RejectStep):
                    tally.reject += norm_sq(path.register)
                    paths.append(_record(path, "defect", reject=norm_sq(path.register), reason=step.reason))
                    finished = True
                    break

                application = superop_apply(step.op, path.register)
                tally.restart += application.restart_mass
                masses = application.masses
                if trace:
                    entries.append(
                        TraceEntry(
                            path=path.coins,
                            symbol=symbol,
                            operator=step.op.name,
                            masses={**masses, "restart": application.restart_mass},
                        )
                    )
                logger.debug("%s %r -> %s", step.op.name, symbol, masses)

                survivor = None
                accepted = rejected = ZERO
                forks = []
                for label, vector in application.outcomes:
                    effect = step.effects[label]
                    if effect == "accept":
                        accepted += masses[label]
                    elif effect == "reject":
                        rejected += masses[label]
                    elif effect == "continue":
                        survivor = vector
                    elif not is_zero(vector):
                        forks.append((label, vector))
                tally.accept += accepted
                tally.reject += rejected

                if forks:
                    for label, vector in reversed(forks):
                        stack.append(
                            _Path(
                                machine.after_coin(control, label),
                                vector,
                                path.history + (PublicEvent("verifier", label),),
                                path.sent,
                                path.coins + label,
                            )
                        )
                    finished = True
                    break
                if survivor is None:
                    outcome = "accept" if "accept" in step.op.labels else "reject"
                    paths.append(_record(path, outcome, accept=accepted, reject=rejected))
                    finished = True
                    break
                path.register = survivor

            if finished:
                break
            if symbol == DOLLAR:
                checkpoint = _checkpoint(before, control, path)
                if checkpoint is not None:
                    checkpoints.append(checkpoint)

    ledger = Ledger(
        p_accept=tally.accept,
        p_reject=tally.reject,
        p_restart=tally.restart,
        p_pending=tally.pending,
    )
    if not ledger.conserved():
        raise InvariantViolation(f"Round ledger sums to {ledger.total}, not {ledger.inflow}")
    logger.info(
        "Round: accept=%s reject=%s restart=%s pending=%s over %d path(s)",
        ledger.p_accept,
        ledger.p_reject,
        ledger.p_restart,
        ledger.p_pending,
        len(paths),
    )
    return RoundResult(ledger=ledger, paths=paths, checkpoints=checkpoints, trace=entries)


def _record(
    path: _Path,
    outcome: str,
    *,
    accept: Fraction = ZERO,
    reject: Fraction = ZERO,
    reason: str = "",
) -> PathRecord:
    return PathRecord(
        coins=path.coins,
        exchanges=len(path.coins),
        outcome=outcome,
        accept_mass=accept,
        reject_mass=reject,
        register=_as_list(path.register),
        symbols_sent=path.sent,
        reason=reason,
    )


def _checkpoint(before: ControlState, after: ControlState, path: _Path) -> Optional[Checkpoint]:
    if after.phase is Phase.FIRST_DOLLAR and before.phase is Phase.CONFIG:
        marker = "first-dollar"
    elif before.phase is Phase.FIRST_DOLLAR and after.phase is not Phase.HALTED:
        marker = "second-dollar"
    else:
        return None
    return Checkpoint(
        path=path.coins,
        block=before.block,
        marker=marker,
        register=_as_list(path.register),
    )


def run_strong_round(
    spec: MachineSpec,
    vc: VerifierConfig,
    prover: ProverStrategy,
    x: str,
    *,
    trace: bool = False,
    round_index: Optional[int] = None,
) -> RoundResult:
    """One round of the branch-exchanging protocol over every coin path.

    Raises:
        SpecError: If the machine is not an ATM or the mode is not Strong5State.
        MachineError: If the ATM is not in normal form.
    """
    if spec.kind is not MachineKind.ATM or vc.mode is not ProtocolMode.STRONG:
        raise SpecError("The strong protocol runs normal-form ATMs in Strong5State mode")
    violations = validate_normal_form(spec)
    if violations:
        raise MachineError("ATM is not in normal form: " + "; ".join(violations))
    return run_round(spec, vc, prover, x, trace=trace, round_index=round_index)


def _one_round(
    spec: MachineSpec,
    vc: VerifierConfig,
    prover: ProverStrategy,
    x: str,
    *,
    trace: bool,
    round_index: Optional[int] = None,
) -> RoundResult:
    if vc.mode is ProtocolMode.STRONG:
        return run_strong_round(spec, vc, prover, x, trace=trace, round_index=round_index)
    return run_round(spec, vc, prover, x, trace=trace, round_index=round_index)


def overall_from_ledger(ledger: Ledger) -> ProtocolOutcome:
    """Acceptance over infinitely many identical rounds."""
    a, r, p = ledger.p_accept, ledger.p_reject, ledger.p_pending
    if a + r == 0:
        return ProtocolOutcome(classification=Classification.NEVER_HALTS, rounds=[ledger])
    if p == 0:
        value = a / (a + r)
        return ProtocolOutcome(
            classification=Classification.EXACT,
            overall_accept=value,
            lower=value,
            upper=value,
            rounds=[ledger],
        )
    return ProtocolOutcome(
        classification=Classification.BOUNDS,
        lower=a / (a + r + p),
        upper=(a + p) / (a + r + p),
        rounds=[ledger],
    )


def overall_from_rounds(ledgers: Sequence[Ledger]) -> ProtocolOutcome:
    """Exact bounds after a finite number of possibly different rounds."""
    reach = Fraction(1)
    accepted = rejected = pending = ZERO
    for ledger in ledgers:
        accepted += reach * ledger.p_accept
        rejected += reach * ledger.p_reject
        pending += reach * ledger.p_pending
        reach *= ledger.p_restart
    if accepted + rejected == 0:
        return ProtocolOutcome(classification=Classification.NEVER_HALTS, rounds=list(ledgers))
    unresolved = reach + pending
    if unresolved == 0:
        return ProtocolOutcome(
            classification=Classification.EXACT,
            overall_accept=accepted,
            lower=accepted,
            upper=accepted,
            rounds=list(ledgers),
        )
    return ProtocolOutcome(
        classification=Classification.BOUNDS,
        lower=accepted,
        upper=accepted + unresolved,
        rounds=list(ledgers),
    )


def run_protocol(
    spec: MachineSpec,
    vc: VerifierConfig,
    prover: ProverStrategy,
    x: str,
    *,
    rounds: Optional[int] = None,
    trace: bool = False,
) -> tuple[ProtocolOutcome, list[RoundResult]]:
    """Overall acceptance of x under the given prover.

    Stationary provers are solved in closed form from a single round unless an
    explicit number of rounds is requested. Other provers are iterated for
    `rounds` (or ADAPTIVE_ROUND_HORIZON) rounds and reported as exact bounds.

    Args:
        spec: The machine being verified.
        vc: Verifier configuration.
        prover: The prover strategy.
        x: The input word.
        rounds: Number of rounds to simulate explicitly.
        trace: Keep per-step traces in the round results.

    Returns:
        The overall outcome and the results of every simulated round.
    """
    if prover.stationary and rounds is None:
        result = _one_round(spec, vc, prover, x, trace=trace)
        outcome = overall_from_ledger(result.ledger)
        logger.info("Protocol outcome: %s", outcome.classification.value)
        return outcome, [result]

    horizon = rounds or settings.ADAPTIVE_ROUND_HORIZON
    results = [
        _one_round(spec, vc, prover, x, trace=trace, round_index=k) for k in range(1, horizon + 1)
    ]
    outcome = overall_from_rounds([r.ledger for r in results])
    logger.info("Protocol outcome after %d rounds: %s", horizon, outcome.classification.value)
    return outcome, results
