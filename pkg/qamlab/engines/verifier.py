"""The finite-state verifier of the configuration-stream protocols.

The verifier reads the prover's transcript c1 $$ c2 $$ ... one symbol at a
time. Classical bookkeeping (format checks, the short successor window, the
branch chosen at an exchange) lives in an immutable `ControlState`; the
quantum part is a 4-dimensional register (5 in the strong protocol) driven
by the superoperators built here. Register layout:

    q1  reference amplitude, the only entry the decisions read in weak mode
    q2  encode(next(c_{i-1}))
    q3  encode(c_i)
    q4  encode(next(c_i))
    q5  damped copy of q1 (strong mode), halved at every branch exchange
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np

from qamlab.core.errors import InvalidCase, InvariantViolation, MachineError
from qamlab.engines.linalg import as_matrix, as_vector, choose_scale_d, make_superoperator
from qamlab.engines.machines import initial_config
from qamlab.engines.successor import (
    LOOKAHEAD,
    length_case,
    successor_digit,
    successor_symbol,
    successor_symbols,
    window_at,
)
from qamlab.models.machines import (
    BLANK,
    DOLLAR,
    LEFT,
    RIGHT,
    MachineKind,
    MachineSpec,
    StateLabel,
)
from qamlab.models.protocol import Decision, PositionCase, ProtocolMode, VerifierConfig
from qamlab.models.superoperator import RestartMode, Superoperator

logger = logging.getLogger(__name__)

Effect = Literal["continue", "accept", "reject", "branch"]

ENCODE_EFFECTS: dict[str, Effect] = {"continue": "continue"}
FINALIZE_EFFECTS: dict[str, Effect] = {
    "check": "reject",
    "accept": "accept",
    "reject": "reject",
    "continue": "continue",
}
COIN_EFFECTS: dict[str, Effect] = {LEFT: "branch", RIGHT: "branch"}


# Operator families


def _encode_rows(block: int, m: int, digit: int, config_digit: int) -> list[list[int]]:
    """Unscaled 4x4 encode element; a zero digit holds the corresponding row."""
    if block == 1:
        second = [digit, m, 0, 0] if digit else [0, 1, 0, 0]
        return [[1, 0, 0, 0], second, [0, 0, 0, 0], [0, 0, 0, 0]]
    third = [config_digit, 0, m, 0] if config_digit else [0, 0, 1, 0]
    fourth = [digit, 0, 0, m] if digit else [0, 0, 0, 1]
    return [[1, 0, 0, 0], [0, 1, 0, 0], third, fourth]


def _finalize_rows(block: int, decision: Decision) -> list[tuple[str, list[list[int]]]]:
    zero = [0, 0, 0, 0]
    if decision is Decision.CONTINUE:
        if block == 1:
            select = [[1, 0, 0, 0], [0, 1, 0, 0], zero, zero]
        else:
            select = [[1, 0, 0, 0], [0, 0, 0, 1], zero, zero]
    else:
        select = [[1, 0, 0, 0], zero, zero, zero]
    elements = [(decision.value, select)]
    if block > 1:
        elements.insert(0, ("check", [zero, [0, 1, -1, 0], zero, zero]))
    return elements


def _lift(rows: list[list[int]], q5: Fraction | int, read_q5: bool = False) -> list[list[Fraction | int]]:
    """Extend a 4x4 element to the strong register."""
    lifted: list[list[Fraction | int]] = [list(row) + [0] for row in rows]
    if read_q5:
        lifted[0] = [0, 0, 0, 0, 1]
    lifted.append([0, 0, 0, 0, q5])
    return lifted


def _unscaled_elements(
    case: PositionCase,
    mode: ProtocolMode,
    m: int,
    block: int,
    digit: int,
    config_digit: int,
    decision: Decision,
) -> list[tuple[str, np.ndarray]]:
    strong = mode is ProtocolMode.STRONG
    if case is PositionCase.DOLLAR_2:
        elements = []
        for label, rows in _finalize_rows(block, decision):
            if strong:
                keeps_q5 = label == Decision.CONTINUE.value
                rows = _lift(rows, 1 if keeps_q5 else 0, read_q5=label == Decision.ACCEPT.value)
            elements.append((label, as_matrix(rows)))
        return elements
    rows = _encode_rows(block, m, digit, config_digit)
    return [("continue", as_matrix(_lift(rows, 1) if strong else rows))]


@lru_cache(maxsize=4096)
def _build(
    case: PositionCase,
    mode: ProtocolMode,
    m: int,
    d: int,
    block: int,
    digit: int,
    config_digit: int,
    decision: Decision,
) -> Superoperator:
    scale = Fraction(1, d)
    elements = [
        (label, matrix * scale)
        for label, matrix in _unscaled_elements(case, mode, m, block, digit, config_digit, decision)
    ]
    name = f"{case.value}[block={min(block, 2)},n={digit},c={config_digit},{decision.value}]"
    return make_superoperator(elements, RestartMode.IMPLICIT_RESTART, name=name)


def build_encode_op(
    vc: VerifierConfig,
    case: PositionCase,
    *,
    block: int = 1,
    digit: int = 0,
    config_digit: int = 0,
    decision: Decision = Decision.CONTINUE,
) -> Superoperator:
    """One verifier superoperator, scaled by 1/d.

    Args:
        vc: The verifier configuration (mode, digit map and d).
        case: Which position of the block the operator serves.
        block: 1 for the first configuration, anything larger for the rest.
        digit: Digit of next(c) written into the register, 0 to hold.
        config_digit: Digit of c itself (blocks after the first), 0 to hold.
        decision: Halting type of the successor, used by the second $ only.

    Returns:
        The superoperator in ImplicitRestart mode.
    """
    if not isinstance(case, PositionCase):
        raise InvalidCase(f"Unknown position case {case!r}")
    if block < 1:
        raise InvalidCase(f"Blocks are numbered from 1, got {block}")
    for value in (digit, config_digit):
        if not 0 <= value <= vc.digit_map.max_digit:
            raise InvalidCase(f"Digit {value} is outside 0..{vc.digit_map.max_digit}")
    if case is PositionCase.DOLLAR_2 and (digit or config_digit):
        raise InvalidCase("The second $ does not encode digits")
    if case is not PositionCase.DOLLAR_2 and decision is not Decision.CONTINUE:
        raise InvalidCase(f"{case.value} cannot decide the round")
    return _build(case, vc.mode, vc.base, vc.d, min(block, 2), digit, config_digit, decision)


def coin_op(vc: VerifierConfig) -> Superoperator:
    """The verifier's public branch coin, {(1/d) D, (1/d) D} with D halving q5."""
    return _coin(vc.mode, vc.d)


def _coin_matrix(mode: ProtocolMode) -> np.ndarray:
    if mode is ProtocolMode.STRONG:
        return as_matrix(_lift([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]], Fraction(1, 2)))
    return as_matrix([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])


@lru_cache(maxsize=16)
def _coin(mode: ProtocolMode, d: int) -> Superoperator:
    matrix = _coin_matrix(mode) * Fraction(1, d)
    return make_superoperator([(LEFT, matrix), (RIGHT, matrix.copy())], name="coin")


@lru_cache(maxsize=256)
def protocol_scale(mode: ProtocolMode, max_digit: int) -> int:
    """Smallest d that keeps every operator family of the protocol trace-decreasing."""
    m = max_digit + 1
    families = [
        _unscaled_elements(PositionCase.INTERIOR, mode, m, 1, max_digit, 0, Decision.CONTINUE)
    ]
    for digit, config_digit in ((max_digit, max_digit), (max_digit, 0), (0, max_digit)):
        families.append(
            _unscaled_elements(
                PositionCase.INTERIOR, mode, m, 2, digit, config_digit, Decision.CONTINUE
            )
        )
    for decision in Decision:
        families.append(_unscaled_elements(PositionCase.DOLLAR_2, mode, m, 2, 0, 0, decision))
    if mode is ProtocolMode.STRONG:
        families.append([(LEFT, _coin_matrix(mode)), (RIGHT, _coin_matrix(mode))])
    d = max(choose_scale_d([matrix for _, matrix in family]) for family in families)
    logger.debug("Protocol scale for mode %s, m=%d: d=%d", mode.value, m, d)
    return d


def initial_register(vc: VerifierConfig) -> tuple[np.ndarray, Fraction]:
    """Register at the start of a round and the mass lost to an immediate restart."""
    if vc.mode is ProtocolMode.STRONG:
        register = as_vector([vc.scale, 0, 0, 0, vc.scale])
        return register, 1 - 2 * vc.scale * vc.scale
    return as_vector([1, 0, 0, 0]), Fraction(0)


# Classical control


class Phase(str, Enum):
    EXCHANGE = "exchange"
    CONFIG = "config"
    FIRST_DOLLAR = "first-dollar"
    HALTED = "halted"


@dataclass(frozen=True)
class ControlState:
    """Everything the verifier remembers classically inside a round."""

    block: int = 1
    phase: Phase = Phase.CONFIG
    tokens: tuple[str, ...] = ()
    applied: int = 0
    expected_state: str = ""
    branch: int = 0
    defect: Optional[str] = None
    prover_choice: Optional[str] = None


class OperatorStep(NamedTuple):
    op: Superoperator
    effects: dict[str, Effect]


class RejectStep(NamedTuple):
    reason: str


Step = OperatorStep | RejectStep


class VerifierMachine:
    """Verifier of one protocol instance (machine, input and configuration).

    `feed` consumes one prover symbol and returns the superoperators to apply,
    in order. Interior digits are encoded as soon as the two symbols to the
    right of a position have arrived; the last position and the first $ are
    handled together when the $ is read.
    """

    def __init__(self, spec: MachineSpec, vc: VerifierConfig, x: str | Sequence[str]) -> None:
        self.spec = spec
        self.vc = vc
        self.dm = vc.digit_map
        self.strong = vc.mode is ProtocolMode.STRONG
        self.initial = initial_config(spec, x).symbols

    def start(self) -> tuple[ControlState, np.ndarray, Fraction]:
        """Control state, register and restart mass at the start of a round."""
        register, restart = initial_register(self.vc)
        return self.open_block(1, self.spec.start), register, restart

    def open_block(self, block: int, expected_state: str) -> ControlState:
        exchange = self.strong and self.spec.label(expected_state) in (
            StateLabel.EXISTENTIAL,
            StateLabel.UNIVERSAL,
        )
        return ControlState(
            block=block,
            phase=Phase.EXCHANGE if exchange else Phase.CONFIG,
            expected_state=expected_state,
        )

    def feed(self, state: ControlState, token: str) -> tuple[ControlState, list[Step]]:
        if state.phase is Phase.HALTED:
            raise InvariantViolation("The verifier has already ended this round")

        if state.phase is Phase.EXCHANGE:
            if token not in (LEFT, RIGHT):
                return self._reject(state, f"expected a branch choice, got {token!r}")
            return replace(state, prover_choice=token), [OperatorStep(coin_op(self.vc), COIN_EFFECTS)]

        if state.phase is Phase.FIRST_DOLLAR:
            if token != DOLLAR:
                return self._reject(state, f"expected a second $, got {token!r}")
            return self._second_dollar(state)

        if token == DOLLAR:
            return self._first_dollar(state)
        if token not in self.dm.digits:
            return self._reject(state, f"symbol {token!r} is not in the configuration alphabet")

        tokens = state.tokens + (token,)
        if self.strong and self._tape_length(tokens) > self.vc.length_check:
            return self._reject(state, f"configuration exceeds {self.vc.length_check} cells")
        state = replace(state, tokens=tokens)
        steps: list[Step] = []
        while state.applied + LOOKAHEAD < len(tokens):
            state, step = self._interior(state)
            steps.append(step)
        return state, steps

    def after_coin(self, state: ControlState, label: str) -> ControlState:
        """Fix the branch once the coin outcome is public."""
        if state.phase is not Phase.EXCHANGE or state.prover_choice is None:
            raise InvariantViolation("Coin outcome outside a branch exchange")
        if self.spec.label(state.expected_state) is StateLabel.EXISTENTIAL:
            chosen = state.prover_choice
        else:
            chosen = label
        return replace(
            state,
            phase=Phase.CONFIG,
            branch=0 if chosen == LEFT else 1,
            prover_choice=None,
        )

    def expected_successor(self, state: ControlState) -> Optional[tuple[str, ...]]:
        """next(c) of the configuration currently being read, when it is complete."""
        try:
            return successor_symbols(self.spec, state.tokens, state.branch)
        except (MachineError, IndexError):
            return None

    # Internals

    def _tape_length(self, tokens: Sequence[str]) -> int:
        return sum(1 for s in tokens if s not in self.spec.states)

    def _reject(self, state: ControlState, reason: str) -> tuple[ControlState, list[Step]]:
        logger.debug("Block %d: deterministic reject (%s)", state.block, reason)
        return replace(state, phase=Phase.HALTED, defect=reason), [RejectStep(reason)]

    def _config_digit(self, state: ControlState, symbol: str) -> int:
        return self.dm[symbol] if state.block > 1 else 0

    def _interior(self, state: ControlState) -> tuple[ControlState, OperatorStep]:
        k = state.applied
        defect = state.defect
        try:
            digit = successor_digit(window_at(state.tokens, k), self.spec, self.dm, state.branch)
        except (MachineError, KeyError) as e:
            digit = 0
            defect = defect or f"no successor at position {k + 1}: {e}"
        op = build_encode_op(
            self.vc,
            PositionCase.INTERIOR,
            block=state.block,
            digit=digit,
            config_digit=self._config_digit(state, state.tokens[k]),
        )
        return replace(state, applied=k + 1, defect=defect), OperatorStep(op, ENCODE_EFFECTS)

    def _configuration_defect(self, state: ControlState) -> Optional[str]:
        spec, tokens = self.spec, state.tokens
        if not tokens:
            return "empty configuration"
        at = [i for i, s in enumerate(tokens) if s in spec.states]
        if len(at) != 1:
            return f"configuration has {len(at)} state symbols"
        p = at[0]
        if p == len(tokens) - 1:
            return "head is past the last cell"
        cells = tokens[:p] + tokens[p + 1 :]
        terminal = spec.terminal
        if cells[-1] != terminal:
            return f"configuration does not end with {terminal}"
        if spec.kind is MachineKind.ATM and (cells[0] != terminal or terminal in cells[1:-1]):
            return "tape is not delimited by exactly two cents"
        if state.block == 1 and tokens != self.initial:
            return "first configuration is not the initial configuration"
        if self.strong and len(cells) != self.vc.length_check:
            return f"configuration has {len(cells)} cells, expected {self.vc.length_check}"
        if spec.is_halting_state(tokens[p]):
            return "halting configuration sent"
        try:
            successor_symbols(spec, tokens, state.branch)
        except MachineError as e:
            return f"configuration has no successor: {e}"
        return state.defect

    def _first_dollar(self, state: ControlState) -> tuple[ControlState, list[Step]]:
        defect = self._configuration_defect(state)
        if defect:
            return self._reject(state, defect)

        steps: list[Step] = []
        tokens = state.tokens
        while state.applied < len(tokens) - 1:
            state, step = self._interior(state)
            steps.append(step)

        case = length_case(self.spec, tokens, state.branch)
        last = successor_symbol(self.spec, window_at(tokens, len(tokens) - 1), state.branch)
        last_digit = 0 if case is PositionCase.LEN_MINUS_1 else self.dm[last]
        steps.append(
            OperatorStep(
                build_encode_op(
                    self.vc,
                    case,
                    block=state.block,
                    digit=last_digit,
                    config_digit=self._config_digit(state, tokens[-1]),
                ),
                ENCODE_EFFECTS,
            )
        )
        overflow = self.dm[BLANK] if case is PositionCase.LEN_PLUS_1 else 0
        steps.append(
            OperatorStep(
                build_encode_op(self.vc, PositionCase.DOLLAR_1, block=state.block, digit=overflow),
                ENCODE_EFFECTS,
            )
        )
        return replace(state, phase=Phase.FIRST_DOLLAR, applied=len(tokens)), steps

    def _second_dollar(self, state: ControlState) -> tuple[ControlState, list[Step]]:
        successor = successor_symbols(self.spec, state.tokens, state.branch)
        next_state = next(s for s in successor if s in self.spec.states)
        if next_state == self.spec.accept:
            decision = Decision.ACCEPT
        elif next_state == self.spec.reject:
            decision = Decision.REJECT
        else:
            decision = Decision.CONTINUE
        op = build_encode_op(self.vc, PositionCase.DOLLAR_2, block=state.block, decision=decision)
        steps: list[Step] = [OperatorStep(op, FINALIZE_EFFECTS)]
        if decision is Decision.CONTINUE:
            return self.open_block(state.block + 1, next_state), steps
        return replace(state, phase=Phase.HALTED), steps
