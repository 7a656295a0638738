"""Configurations, single steps and base-m encodings of Turing machines."""

import logging
from functools import lru_cache
from typing import Iterable, Sequence

from qamlab.core.errors import MachineError, SpecError
from qamlab.models.machines import (
    BLANK,
    CENT,
    Configuration,
    DigitMap,
    MachineKind,
    MachineSpec,
    Move,
    StateLabel,
    Transition,
)

logger = logging.getLogger(__name__)


def digit_map(spec: MachineSpec) -> DigitMap:
    """Assign 1..|Γ′| to Γ′ in declaration order (states first)."""
    return DigitMap(digits={s: i + 1 for i, s in enumerate(spec.alphabet)})


def tokenize_input(spec: MachineSpec, x: str | Sequence[str]) -> tuple[str, ...]:
    symbols = tuple(x)
    bad = [s for s in symbols if s not in spec.input_alphabet]
    if bad:
        raise SpecError(f"Invalid input symbol(s) {bad} for machine {spec.name!r}")
    return symbols


def initial_config(spec: MachineSpec, x: str | Sequence[str]) -> Configuration:
    """Build the starting configuration of `spec` on `x`.

    This is q1 # x # for DTMs and q1 ¢ x ¢ for normal-form ATMs.

    Args:
        spec: The machine.
        x: The input word, as a string or as already tokenized symbols.

    Returns:
        The initial Configuration.

    Raises:
        SpecError: If x contains a symbol outside the input alphabet.
    """
    symbols = tokenize_input(spec, x)
    edge = CENT if spec.kind is MachineKind.ATM else BLANK
    return Configuration(symbols=(spec.start, edge, *symbols, edge))


def parse_config(spec: MachineSpec, text: str) -> Configuration:
    """Split a rendered configuration back into tokens (longest match first)."""
    if " " in text.strip():
        return Configuration(symbols=tuple(text.split()))
    alphabet = sorted(spec.alphabet, key=len, reverse=True)
    tokens, i = [], 0
    while i < len(text):
        for symbol in alphabet:
            if text.startswith(symbol, i):
                tokens.append(symbol)
                i += len(symbol)
                break
        else:
            raise SpecError(f"Cannot tokenize {text!r} at position {i}")
    return Configuration(symbols=tuple(tokens))


def state_index(spec: MachineSpec, symbols: Sequence[str]) -> int:
    positions = [i for i, s in enumerate(symbols) if s in spec.states]
    if len(positions) != 1:
        raise MachineError(
            f"Configuration {''.join(symbols)!r} has {len(positions)} state symbols"
        )
    return positions[0]


def tape_view(spec: MachineSpec, c: Configuration) -> tuple[list[str], int, str]:
    """Return (cells, head index, state) for a configuration."""
    p = state_index(spec, c.symbols)
    cells = list(c.symbols[:p] + c.symbols[p + 1 :])
    if p >= len(cells):
        raise MachineError(f"Head of {c} is past the last cell")
    return cells, p, c.symbols[p]


def step_cells(
    kind: MachineKind, cells: list[str], head: int, transition: Transition
) -> tuple[list[str], int]:
    """Write, move and normalize the frontier.

    DTM tapes keep exactly one trailing blank past the written area, so the
    length changes by at most one: a blank is appended when the head walks
    onto the frontier or the last cell stops being blank, and one blank is
    dropped when the head leaves a doubled trailing blank. ATM tapes are fixed
    between the cent symbols.
    """
    cells = list(cells)
    cells[head] = transition.write
    new_head = head + (1 if transition.move is Move.R else -1)
    if new_head < 0:
        raise MachineError("Head would move left of the leading cell")

    if kind is MachineKind.ATM:
        if new_head >= len(cells):
            raise MachineError("Head would move past the right cent")
        return cells, new_head

    change = frontier_change(cells, head, new_head)
    if change > 0:
        cells.append(BLANK)
    elif change < 0:
        cells.pop()
    return cells, new_head


def frontier_change(cells: Sequence[str], head: int, new_head: int) -> int:
    """+1, -1 or 0: how a DTM step changes the tape length after the write.

    Only the last two cells and the head's distance from the end matter, so
    the rule may be evaluated on a tail of the tape with relative indices.
    """
    length = len(cells)
    if cells[-1] != BLANK or new_head == length:
        return 1
    if length >= 2 and cells[-2] == BLANK and new_head < length - 1 and head >= length - 2:
        return -1
    return 0


def assemble(cells: Sequence[str], head: int, state: str) -> Configuration:
    return Configuration(symbols=(*cells[:head], state, *cells[head:]))


def transitions_at(spec: MachineSpec, state: str, symbol: str) -> tuple[Transition, ...]:
    try:
        return spec.delta[(state, symbol)]
    except KeyError:
        raise MachineError(f"delta({state}, {symbol}) is undefined") from None


def is_halting(spec: MachineSpec, c: Configuration) -> bool:
    return spec.is_halting_state(c.symbols[state_index(spec, c.symbols)])


@lru_cache(maxsize=65536)
def successors(spec: MachineSpec, c: Configuration) -> tuple[Configuration, ...]:
    """All single-step successors of c, one per transition of the scanned pair."""
    cells, head, state = tape_view(spec, c)
    if spec.is_halting_state(state):
        raise MachineError(f"{c} is a halting configuration")
    result = []
    for transition in transitions_at(spec, state, cells[head]):
        new_cells, new_head = step_cells(spec.kind, cells, head, transition)
        result.append(assemble(new_cells, new_head, transition.state))
    return tuple(result)


def step(spec: MachineSpec, c: Configuration, branch: int = 0) -> Configuration:
    options = successors(spec, c)
    return options[min(branch, len(options) - 1)]


def next_config(
    spec: MachineSpec, c: Configuration
) -> Configuration | tuple[Configuration, Configuration]:
    """The successor of c, or the pair of successors at an ATM branching state.

    Args:
        spec: The machine.
        c: A non-halting configuration.

    Returns:
        A single Configuration, or a (left, right) pair when the state branches.
    """
    options = successors(spec, c)
    if len(options) == 1:
        return options[0]
    return options  # type: ignore[return-value]


def encode_symbols(symbols: Iterable[str], dm: DigitMap) -> int:
    value = 0
    for symbol in symbols:
        try:
            value = value * dm.base + dm[symbol]
        except KeyError:
            raise SpecError(f"Symbol {symbol!r} has no digit") from None
    return value


def encode_config(c: Configuration, dm: DigitMap) -> int:
    """Base-m value of c with the leftmost symbol most significant.

    Args:
        c: The configuration to encode.
        dm: Digit map assigning each symbol a nonzero digit.

    Returns:
        The integer encoding of c.
    """
    return encode_symbols(c.symbols, dm)


def decode_symbols(value: int, dm: DigitMap) -> tuple[str, ...] | None:
    """Inverse of encode_symbols; None when a digit is 0 or unmapped."""
    symbols = []
    while value > 0:
        value, digit = divmod(value, dm.base)
        symbol = dm.symbol(digit)
        if symbol is None:
            return None
        symbols.append(symbol)
    return tuple(reversed(symbols))


def run_dtm(spec: MachineSpec, x: str, limit: int) -> list[Configuration]:
    """Configurations of the DTM on x, ending at the first halting one (or at the limit)."""
    c = initial_config(spec, x)
    trail = [c]
    while not is_halting(spec, c) and len(trail) <= limit:
        c = step(spec, c)
        trail.append(c)
    return trail


def validate_normal_form(spec: MachineSpec) -> list[str]:
    """List the ways an ATM departs from the cent-delimited normal form.

    Returns:
        One human-readable message per violation; empty when the ATM is in normal form.

    Raises:
        SpecError: If spec is not an ATM.
    """
    if spec.kind is not MachineKind.ATM:
        raise SpecError("Normal-form validation applies to ATMs only")

    violations: list[str] = []
    for (state, symbol), transitions in sorted(spec.delta.items()):
        for t in transitions:
            if symbol == CENT and t.write != CENT:
                violations.append(f"cent overwritten by {t.write} in delta({state}, ¢)")
            elif symbol != CENT and t.write == CENT:
                violations.append(f"cent written over {symbol} in delta({state}, {symbol})")
        expected = spec.branch_count(state)
        if len(transitions) != expected:
            violations.append(f"delta({state}, {symbol}) has {len(transitions)} branches")

    for problem in _alternation_violations(spec):
        violations.append(problem)
    return violations


def _alternation_violations(spec: MachineSpec) -> list[str]:
    """Existential and universal branchings must alternate through deterministic runs."""
    successors_of: dict[str, set[str]] = {}
    for (state, _), transitions in spec.delta.items():
        successors_of.setdefault(state, set()).update(t.state for t in transitions)

    problems = set()
    branching = [
        s for s in spec.states if spec.label(s) is not StateLabel.DETERMINISTIC
        and not spec.is_halting_state(s)
    ]
    for origin in branching:
        kind = spec.label(origin)
        seen: set[str] = set()
        frontier = list(successors_of.get(origin, ()))
        while frontier:
            state = frontier.pop()
            if state in seen or spec.is_halting_state(state):
                continue
            seen.add(state)
            label = spec.label(state)
            if label is kind:
                problems.add(
                    f"alternation violated: {kind.value} state {origin} "
                    f"reaches {kind.value} state {state}"
                )
            elif label is StateLabel.DETERMINISTIC:
                frontier.extend(successors_of.get(state, ()))
    return sorted(problems)


def evaluate_atm(spec: MachineSpec, x: str) -> bool:
    """Classical AND-OR evaluation of the ATM computation tree on x."""
    return evaluate_from(spec, initial_config(spec, x))


def evaluate_from(
    spec: MachineSpec, start: Configuration, memo: dict[Configuration, bool] | None = None
) -> bool:
    """AND-OR value of the computation tree below `start`, memoized in `memo`."""
    memo = {} if memo is None else memo
    on_path: set[Configuration] = set()

    def visit(c: Configuration) -> bool:
        if c in memo:
            return memo[c]
        state = c.symbols[state_index(spec, c.symbols)]
        if state == spec.accept:
            return True
        if state == spec.reject:
            return False
        if c in on_path:
            raise MachineError(f"ATM computation cycles through {c}")
        on_path.add(c)
        values = [visit(child) for child in successors(spec, c)]
        on_path.discard(c)
        if spec.label(state) is StateLabel.UNIVERSAL:
            value = all(values)
        else:
            value = any(values)
        memo[c] = value
        return value

    return visit(start)


def longest_path(spec: MachineSpec, x: str) -> int:
    """Number of configurations on the longest computation path of a halting ATM."""
    memo: dict[Configuration, int] = {}
    on_path: set[Configuration] = set()

    def visit(c: Configuration) -> int:
        if c in memo:
            return memo[c]
        if is_halting(spec, c):
            return 1
        if c in on_path:
            raise MachineError(f"Computation cycles through {c}")
        on_path.add(c)
        value = 1 + max(visit(child) for child in successors(spec, c))
        on_path.discard(c)
        memo[c] = value
        return value

    return visit(initial_config(spec, x))
