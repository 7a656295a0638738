"""Machine-spec files for DTMs and normal-form ATMs.

    // accepts strings ending in a
    type: DTM
    states: q1 qa qr s t
    tape_alphabet: _ a b
    input_alphabet: a b
    start: q1
    accept: qa
    reject: qr
    delta: q1 _ -> s _ R
    delta: s a -> s a R

ATMs add `labels: q1=deterministic e=existential u=universal` and write their
two-way branchings as `branch: e a -> (u a R | e2 a R)`. The blank # is
spelled `_` inside files.
"""

import re
from pathlib import Path

from pydantic import ValidationError

from qamlab.core.errors import MachineError, ParseError
from qamlab.formats.common import (
    Line,
    content_lines,
    parse_labels,
    read_text,
    split_key,
    validation_message,
)
from qamlab.models.machines import BLANK, MachineKind, MachineSpec, Move, Transition

RULE = re.compile(r"^(?P<state>\S+)\s+(?P<symbol>\S)\s*->\s*(?P<rhs>.+)$")
OPTION = re.compile(r"^(?P<state>\S+)\s+(?P<write>\S)\s+(?P<move>[LR])$")

LIST_KEYS = ("states", "tape_alphabet", "input_alphabet")
NAME_KEYS = ("name", "start", "accept", "reject")


def symbol(token: str) -> str:
    return BLANK if token == "_" else token


def parse_rule(value: str, line: Line, branching: bool) -> tuple[str, str, list[str]]:
    """Split `q a -> rhs` into state, scanned symbol and the option texts."""
    match = RULE.match(value)
    if match is None:
        raise ParseError(f"rule {value!r} is not of the form 'q a -> ...'", line.number)
    rhs = match.group("rhs").strip()
    if branching:
        if rhs.startswith("(") and rhs.endswith(")"):
            rhs = rhs[1:-1]
        options = [part.strip() for part in rhs.split("|")]
    else:
        options = [rhs]
    return match.group("state"), symbol(match.group("symbol")), options


def _transition(text: str, line: Line) -> Transition:
    match = OPTION.match(text)
    if match is None:
        raise ParseError(f"transition {text!r} is not of the form \"q' b R\"", line.number)
    return Transition(state=match.group("state"), write=symbol(match.group("write")), move=Move(match.group("move")))


def parse_machine(text: str) -> MachineSpec:
    fields: dict = {"delta": {}}
    for line in content_lines(text):
        header = split_key(line)
        if header is None:
            raise ParseError(f"expected 'key: value', got {line.text!r}", line.number)
        key, value = header

        if key == "type":
            try:
                fields["kind"] = MachineKind(value.upper())
            except ValueError:
                raise ParseError(f"unknown machine type {value!r}", line.number) from None
        elif key in LIST_KEYS:
            tokens = value.split()
            fields[key] = tuple(symbol(t) for t in tokens) if key != "states" else tuple(tokens)
        elif key in NAME_KEYS:
            fields[key] = value
        elif key == "labels":
            fields.setdefault("labels", {}).update(parse_labels(value, line))
        elif key in ("delta", "branch"):
            state, scanned, options = parse_rule(value, line, branching=key == "branch")
            if (state, scanned) in fields["delta"]:
                raise ParseError(f"delta({state}, {scanned}) given twice", line.number)
            fields["delta"][(state, scanned)] = tuple(_transition(o, line) for o in options)
        else:
            raise ParseError(f"unknown key {key!r}", line.number)

    try:
        return MachineSpec(**fields)
    except ValidationError as e:
        raise MachineError(validation_message(e)) from None


def load_machine(path: str | Path) -> MachineSpec:
    return parse_machine(read_text(path))
