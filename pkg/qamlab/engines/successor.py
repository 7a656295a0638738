"""Online successor encoding.

The verifier never holds a whole configuration. It sees the prover's symbols
one at a time and must emit the digits of next(c) while they stream past, so
every successor symbol is computed from a short window around its position.
`successor_symbols` runs the same transducer over a complete configuration
and is checked against `engines.machines.next_config`.
"""

from typing import Iterator, NamedTuple, Optional, Sequence

from qamlab.core.errors import MachineError
from qamlab.engines.machines import frontier_change, transitions_at
from qamlab.models.machines import BLANK, DigitMap, MachineKind, MachineSpec, Move, Transition
from qamlab.models.protocol import PositionCase

# Positions needed to the right of j before next(c)[j] is known
LOOKAHEAD = 2


class SuccessorWindow(NamedTuple):
    """c[j-1], c[j], c[j+1], c[j+2]; None past either end."""

    before: Optional[str]
    here: str
    after: Optional[str]
    scanned: Optional[str]


def window_at(symbols: Sequence[str], j: int) -> SuccessorWindow:
    def at(k: int) -> Optional[str]:
        return symbols[k] if 0 <= k < len(symbols) else None

    return SuccessorWindow(at(j - 1), symbols[j], at(j + 1), at(j + 2))


def _transition(spec: MachineSpec, state: str, symbol: Optional[str], branch: int) -> Transition:
    if spec.is_halting_state(state):
        raise MachineError(f"{state} is a halting state and has no successor")
    if symbol is None:
        raise MachineError(f"Head in state {state} is past the last cell")
    options = transitions_at(spec, state, symbol)
    return options[min(branch, len(options) - 1)]


def successor_symbol(spec: MachineSpec, window: SuccessorWindow, branch: int = 0) -> str:
    """Symbol at position j of next(c) before the frontier is normalized."""
    states = spec.states
    if window.here in states:
        t = _transition(spec, window.here, window.after, branch)
        if t.move is Move.R:
            return t.write
        if window.before is None:
            raise MachineError("Head would move left of the leading cell")
        return window.before
    if window.after is not None and window.after in states:
        t = _transition(spec, window.after, window.scanned, branch)
        return window.here if t.move is Move.R else t.state
    if window.before is not None and window.before in states:
        t = _transition(spec, window.before, window.here, branch)
        return t.state if t.move is Move.R else t.write
    return window.here


def successor_digit(
    window: SuccessorWindow, spec: MachineSpec, dm: DigitMap, branch: int = 0
) -> int:
    return dm[successor_symbol(spec, window, branch)]


def length_case(spec: MachineSpec, tail: Sequence[str], branch: int = 0) -> PositionCase:
    """How |next(c)| compares with |c|, decided from the last four symbols of c."""
    tail = list(tail[-4:])
    positions = [i for i, s in enumerate(tail) if s in spec.states]
    if spec.kind is MachineKind.ATM:
        if positions:
            p = positions[0]
            t = _transition(spec, tail[p], tail[p + 1] if p + 1 < len(tail) else None, branch)
            if t.move is Move.R and p + 2 >= len(tail):
                raise MachineError("Head would move past the right cent")
        return PositionCase.LEN_EQUAL
    if not positions:
        return PositionCase.LEN_PLUS_1 if tail[-1] != BLANK else PositionCase.LEN_EQUAL

    p = positions[0]
    cells = tail[:p] + tail[p + 1 :]
    t = _transition(spec, tail[p], cells[p] if p < len(cells) else None, branch)
    cells[p] = t.write
    new_head = p + (1 if t.move is Move.R else -1)
    change = frontier_change(cells, p, new_head)
    if change > 0:
        return PositionCase.LEN_PLUS_1
    if change < 0:
        return PositionCase.LEN_MINUS_1
    return PositionCase.LEN_EQUAL


def predrop_symbols(spec: MachineSpec, symbols: Sequence[str], branch: int = 0) -> list[str]:
    return [successor_symbol(spec, window_at(symbols, j), branch) for j in range(len(symbols))]


def successor_symbols(spec: MachineSpec, symbols: Sequence[str], branch: int = 0) -> tuple[str, ...]:
    """next(c) assembled from the window transducer and the length case."""
    out = predrop_symbols(spec, symbols, branch)
    case = length_case(spec, symbols, branch)
    if case is PositionCase.LEN_PLUS_1:
        out.append(BLANK)
    elif case is PositionCase.LEN_MINUS_1:
        if out[-1] != BLANK:
            raise MachineError("Frontier shrink would drop a non-blank cell")
        out.pop()
    return tuple(out)


def stream_successor(
    spec: MachineSpec, symbols: Sequence[str], dm: DigitMap, branch: int = 0
) -> Iterator[int]:
    """Digits of next(c), each emitted as soon as its window has been read."""
    predrop: list[str] = []
    for j in range(len(symbols)):
        predrop.append(successor_symbol(spec, window_at(symbols, j), branch))
        if j >= 1:
            yield dm[predrop[j - 1]]
    case = length_case(spec, symbols, branch)
    if case is not PositionCase.LEN_MINUS_1:
        yield dm[predrop[-1]]
    if case is PositionCase.LEN_PLUS_1:
        yield dm[BLANK]
