"""q-1AFA files: the machine-spec format with a register and `superop:` blocks.

    type: q1afa
    states: q0 acc rej
    input_alphabet: a
    start: q0
    accept: acc
    reject: rej
    labels: q0=universal
    dimension: 1
    initial: 1
    branch: q0 ¢ -> (acc S | rej S)
    superop: q0 ¢
    element: keep
    1/2
    element: drop
    1/2
    restart: acc

The head only moves right (R) or stays (S). A universal (state, symbol) pair
needs one `element:` per branch, in branch order; `restart:` names the halting
state that receives the residual mass.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from qamlab.core.errors import MachineError, ParseError
from qamlab.formats.common import (
    Line,
    content_lines,
    parse_int,
    parse_labels,
    parse_rationals,
    read_text,
    split_key,
    validation_message,
)
from qamlab.formats.machine_file import RULE
from qamlab.models.alternation import HeadMove, OperatorBinding, QMachineSpec, QTransition


@dataclass
class _Block:
    state: str
    symbol: str
    line: int
    elements: list[tuple[str, tuple]] = field(default_factory=list)
    restart: Optional[str] = None


def _rule(value: str, line: Line, branching: bool) -> tuple[tuple[str, str], tuple[QTransition, ...]]:
    match = RULE.match(value)
    if match is None:
        raise ParseError(f"rule {value!r} is not of the form 'q a -> ...'", line.number)
    rhs = match.group("rhs").strip()
    if branching and rhs.startswith("(") and rhs.endswith(")"):
        rhs = rhs[1:-1]
    options = [part.strip() for part in rhs.split("|")] if branching else [rhs]
    transitions = []
    for option in options:
        parts = option.split()
        if len(parts) != 2 or parts[1] not in ("R", "S"):
            raise ParseError(f"transition {option!r} is not of the form \"q' R\" or \"q' S\"", line.number)
        transitions.append(QTransition(state=parts[0], move=HeadMove(parts[1])))
    return (match.group("state"), match.group("symbol")), tuple(transitions)


def parse_qmachine(text: str) -> QMachineSpec:
    fields: dict = {"delta": {}, "superops": {}}
    dim: Optional[int] = None
    block: Optional[_Block] = None
    element: Optional[tuple[str, list[list[Fraction]], int]] = None

    def close_element() -> None:
        nonlocal element
        if element is None:
            return
        label, rows, number = element
        if len(rows) != dim:
            raise ParseError(f"element {label!r} has {len(rows)} rows, expected {dim}", number)
        block.elements.append((label, tuple(tuple(row) for row in rows)))
        element = None

    def close_block() -> None:
        nonlocal block
        close_element()
        if block is None:
            return
        key = (block.state, block.symbol)
        if key in fields["superops"]:
            raise ParseError(f"superop block for {key} given twice", block.line)
        try:
            fields["superops"][key] = OperatorBinding(elements=tuple(block.elements), restart=block.restart)
        except ValidationError as e:
            raise MachineError(validation_message(e)) from None
        block = None

    for line in content_lines(text):
        header = split_key(line)
        if header is None:
            if element is None:
                raise ParseError("matrix row outside an element block", line.number)
            element[1].append(parse_rationals(line, dim))
            continue
        key, value = header

        if key == "element":
            if block is None:
                raise ParseError("element outside a superop block", line.number)
            if dim is None:
                raise ParseError("dimension must come before the first element", line.number)
            close_element()
            element = (value, [], line.number)
            continue
        if key == "restart":
            if block is None:
                raise ParseError("restart outside a superop block", line.number)
            close_element()
            block.restart = value
            continue

        close_block()
        if key == "type":
            if value.lower() != "q1afa":
                raise ParseError(f"expected type q1afa, got {value!r}", line.number)
        elif key in ("states", "input_alphabet"):
            fields[key] = tuple(value.split())
        elif key in ("name", "start", "accept", "reject"):
            fields[key] = value
        elif key == "labels":
            fields.setdefault("labels", {}).update(parse_labels(value, line))
        elif key == "dimension":
            dim = parse_int(value, line, "dimension")
            fields["dim"] = dim
        elif key == "initial":
            fields["initial"] = tuple(parse_rationals(Line(line.number, value)))
        elif key in ("delta", "branch"):
            pair, transitions = _rule(value, line, branching=key == "branch")
            if pair in fields["delta"]:
                raise ParseError(f"delta{pair} given twice", line.number)
            fields["delta"][pair] = transitions
        elif key == "superop":
            parts = value.split()
            if len(parts) != 2:
                raise ParseError("superop expects a state and a symbol", line.number)
            block = _Block(state=parts[0], symbol=parts[1], line=line.number)
        else:
            raise ParseError(f"unknown key {key!r}", line.number)
    close_block()

    try:
        return QMachineSpec(**fields)
    except ValidationError as e:
        raise MachineError(validation_message(e)) from None


def load_qmachine(path: str | Path) -> QMachineSpec:
    return parse_qmachine(read_text(path))
