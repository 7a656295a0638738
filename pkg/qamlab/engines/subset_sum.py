"""Constant-space verifier for SUBSET-SUM over a three-dimensional register.

The verifier loops over #S$a1$...$an$#. It encodes S into q2 digit by digit,
encodes each a_i into q3 and, on the $ closing a_i, either subtracts q3 from
q2 (the prover selected a_i) or drops it. On the closing # the register holds
(1/3)^|w| (1, S - T, 0), and the decision operator rejects with amplitude
proportional to S - T. Every operator is complete: probability that neither
moves the head forward nor decides goes to explicit restart outcomes.
"""

import logging
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Union

import numpy as np

from qamlab.core.errors import InvariantViolation, MalformedInstance
from qamlab.engines.linalg import ZERO, as_matrix, as_vector, make_superoperator, superop_apply
from qamlab.models.protocol import Ledger, TraceEntry
from qamlab.models.subset_sum import SubsetSumInstance, SubsetSumMaximum, SubsetSumRound
from qamlab.models.superoperator import RestartMode, Superoperator

logger = logging.getLogger(__name__)

INSTANCE_PATTERN = re.compile(r"[01]+(?:\$[01]+)+\$")

THIRD = Fraction(1, 3)

# Unscaled elements; every matrix is multiplied by 1/3.
OPERATOR_TABLE: dict[str, list[tuple[str, list[list[int]]]]] = {
    # S is encoded into q2
    "E0": [
        ("f", [[1, 0, 0], [0, 2, 0], [0, 0, 1]]),
        ("i1", [[2, 0, -2], [2, 0, 2], [0, 2, 0]]),
        ("i2", [[0, 1, 0], [0, 0, 0], [0, 0, 0]]),
    ],
    "E1": [
        ("f", [[1, 0, 0], [1, 2, 0], [0, 0, 1]]),
        ("i1", [[2, -1, 0], [1, 0, 2], [1, 0, -2]]),
        ("i2", [[1, 0, 0], [0, 2, 0], [0, 0, 0]]),
    ],
    "E$": [
        ("f", [[1, 0, 0], [0, 1, 0], [0, 0, 1]]),
        ("i1", [[2, 0, 0], [0, 2, 0], [0, 0, 2]]),
        ("i2", [[2, 0, 0], [0, 2, 0], [0, 0, 2]]),
    ],
    # each a_i is encoded into q3
    "E'0": [
        ("f", [[1, 0, 0], [0, 1, 0], [0, 0, 2]]),
        ("i1", [[2, 2, 0], [2, -2, 0], [0, 0, 2]]),
        ("i2", [[0, 0, 1], [0, 0, 0], [0, 0, 0]]),
    ],
    "E'1": [
        ("f", [[1, 0, 0], [0, 1, 0], [1, 0, 2]]),
        ("i1", [[2, 0, -1], [1, 2, 0], [1, -2, 0]]),
        ("i2", [[1, 0, 0], [0, 0, 2], [0, 0, 0]]),
    ],
    # a_i selected: q2 - q3 into q2
    "E'$": [
        ("f", [[1, 0, 0], [0, 1, -1], [0, 0, 0]]),
        ("i1", [[0, -1, 1], [2, 1, -1], [2, -1, 1]]),
        ("i2", [[0, 2, 2], [0, 0, 0], [0, 0, 0]]),
        ("i3", [[0, 1, 0], [0, 0, 1], [0, 0, 0]]),
    ],
    # a_i skipped
    "E''$": [
        ("f", [[1, 0, 0], [0, 1, 0], [0, 0, 0]]),
        ("i1", [[2, -2, 0], [2, 2, 0], [0, 0, 3]]),
    ],
    "E#": [
        ("a", [[1, 0, 0], [0, 0, 0], [0, 0, 0]]),
        ("r", [[0, 0, 0], [0, 3, 0], [0, 0, 0]]),
        ("i", [[2, 0, 0], [2, 0, 0], [0, 0, 3]]),
    ],
}


def _effect(label: str) -> str:
    return {"f": "continue", "a": "accept", "r": "reject"}.get(label, "restart")


@lru_cache(maxsize=1)
def build_subsetsum_ops() -> dict[str, Superoperator]:
    ops = {}
    for name, elements in OPERATOR_TABLE.items():
        ops[name] = make_superoperator(
            [(label, as_matrix(rows) * THIRD) for label, rows in elements],
            RestartMode.COMPLETE,
            name=name,
        )
    return ops


def parse_instance(raw: str) -> SubsetSumInstance:
    """Parse a binary instance S$a1$...$an$.

    Args:
        raw: The instance as written on the input tape.

    Returns:
        The instance with its target and items decoded.

    Raises:
        MalformedInstance: If raw does not match the instance format.
    """
    if not INSTANCE_PATTERN.fullmatch(raw):
        raise MalformedInstance(f"malformed instance {raw!r}: expected S$a1$...$an$ in binary")
    numbers = [int(part, 2) for part in raw.split("$")[:-1]]
    return SubsetSumInstance(raw=raw, target=numbers[0], items=tuple(numbers[1:]))


def _check_selection(instance: SubsetSumInstance, selection: Iterable[int]) -> frozenset[int]:
    chosen = frozenset(selection)
    bad = sorted(i for i in chosen if not 1 <= i <= instance.n)
    if bad:
        raise MalformedInstance(f"Selection {bad} is outside 1..{instance.n}")
    return chosen


def schedule(instance: SubsetSumInstance, selection: Iterable[int]) -> Iterator[tuple[str, str]]:
    """(symbol, operator) pairs of one round, ending with the closing #."""
    chosen = _check_selection(instance, selection)
    s_part, *item_parts = instance.raw.split("$")[:-1]
    for digit in s_part:
        yield digit, f"E{digit}"
    yield "$", "E$"
    for index, part in enumerate(item_parts, start=1):
        for digit in part:
            yield digit, f"E'{digit}"
        yield "$", "E'$" if index in chosen else "E''$"
    yield "#", "E#"


def run_round(
    instance: SubsetSumInstance, selection: Iterable[int], *, trace: bool = False
) -> SubsetSumRound:
    """One round against a prover that commits to `selection`.

    Args:
        instance: The parsed instance.
        selection: 1-based indices of the items the prover claims sum to S.
        trace: Record the register masses after every operator.

    Returns:
        The round ledger and the register just before the closing #.
    """
    selection = sorted(_check_selection(instance, selection))
    ops = build_subsetsum_ops()
    register = as_vector([1, 0, 0])
    accept = reject = restart = ZERO
    before_decision: list[Fraction] = []
    entries: list[TraceEntry] = []

    for symbol, name in schedule(instance, selection):
        if symbol == "#":
            before_decision = [Fraction(v) for v in register]
        application = superop_apply(ops[name], register)
        masses = application.masses
        if trace:
            entries.append(TraceEntry(symbol=symbol, operator=name, masses=masses))
        survivor = None
        for label, vector in application.outcomes:
            effect = _effect(label)
            if effect == "continue":
                survivor = vector
            elif effect == "accept":
                accept += masses[label]
            elif effect == "reject":
                reject += masses[label]
            else:
                restart += masses[label]
        if survivor is not None:
            register = survivor

    ledger = Ledger(p_accept=accept, p_reject=reject, p_restart=restart)
    if not ledger.conserved():
        raise InvariantViolation(f"SUBSET-SUM ledger sums to {ledger.total}")
    logger.info("SUBSET-SUM %s with %s: accept=%s reject=%s", instance.raw, selection, accept, reject)
    return SubsetSumRound(selection=selection, ledger=ledger, register=before_decision, trace=entries)


def simulate(instance: Union[SubsetSumInstance, str], selection: Iterable[int]) -> Ledger:
    """Single-round ledger; a malformed raw string is rejected deterministically."""
    if isinstance(instance, str):
        try:
            instance = parse_instance(instance)
        except MalformedInstance as e:
            logger.info("Rejecting immediately: %s", e)
            return Ledger(p_reject=Fraction(1))
    return run_round(instance, selection).ledger


def overall_from_round(ledger: Ledger) -> Fraction:
    return ledger.p_accept / ledger.halting_mass


def overall_acceptance(instance: SubsetSumInstance) -> SubsetSumMaximum:
    """Best overall acceptance over all 2^n selections, and a selection reaching it.

    The selections are enumerated depth first so rounds that agree on a prefix
    share the register computed for it.
    """
    ops = build_subsetsum_ops()
    s_part, *item_parts = instance.raw.split("$")[:-1]

    def advance(register: np.ndarray, names: Iterable[str]) -> tuple[np.ndarray, Fraction]:
        lost = ZERO
        for name in names:
            application = superop_apply(ops[name], register)
            for label, vector in application.outcomes:
                if label == "f":
                    register = vector
                else:
                    lost += application.mass(label)
        return register, lost

    best: tuple[Fraction, list[int], Ledger] | None = None
    checked = 0
    start, lost = advance(as_vector([1, 0, 0]), [f"E{d}" for d in s_part] + ["E$"])
    stack: list[tuple[int, np.ndarray, Fraction, list[int]]] = [(0, start, lost, [])]
    while stack:
        index, register, restart, chosen = stack.pop()
        if index == len(item_parts):
            application = superop_apply(ops["E#"], register)
            ledger = Ledger(
                p_accept=application.mass("a"),
                p_reject=application.mass("r"),
                p_restart=restart + application.mass("i"),
            )
            checked += 1
            value = overall_from_round(ledger)
            if best is None or value > best[0]:
                best = (value, chosen, ledger)
            continue
        encoded, lost = advance(register, [f"E'{d}" for d in item_parts[index]])
        for name, picked in (("E''$", chosen), ("E'$", chosen + [index + 1])):
            after, dropped = advance(encoded, [name])
            stack.append((index + 1, after, restart + lost + dropped, picked))

    assert best is not None
    value, selection, ledger = best
    logger.info("SUBSET-SUM %s: best overall %s with %s of %d", instance.raw, value, selection, checked)
    return SubsetSumMaximum(
        overall_accept=value,
        selection=selection,
        subset_total=instance.subset_total(selection),
        target=instance.target,
        selections_checked=checked,
        ledger=ledger,
    )
