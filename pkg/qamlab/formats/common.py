"""Line handling shared by the text formats.

Every format is line oriented: `//` starts a comment line, blank lines are
ignored, and `key: value` lines introduce headers or blocks.
"""

import re
from fractions import Fraction
from pathlib import Path
from typing import Iterator, NamedTuple

from pydantic import ValidationError

from qamlab.core.errors import ParseError
from qamlab.models.machines import StateLabel
from qamlab.models.rational import parse_rational

KEY_LINE = re.compile(r"^([A-Za-z_][\w-]*)\s*:\s*(.*)$")


class Line(NamedTuple):
    number: int
    text: str


def content_lines(text: str) -> Iterator[Line]:
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("//"):
            continue
        yield Line(number, stripped)


def split_key(line: Line) -> tuple[str, str] | None:
    match = KEY_LINE.match(line.text)
    if match is None:
        return None
    return match.group(1).lower(), match.group(2).strip()


def parse_rationals(line: Line, width: int | None = None) -> list[Fraction]:
    try:
        values = [parse_rational(token) for token in line.text.split()]
    except ValueError as e:
        raise ParseError(str(e), line.number) from None
    if width is not None and len(values) != width:
        raise ParseError(f"expected {width} entries, found {len(values)}", line.number)
    return values


def parse_int(value: str, line: Line, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} must be an integer, got {value!r}", line.number) from None


def read_text(path: str | Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e.strerror}") from None


LABEL_ALIASES = {
    "e": StateLabel.EXISTENTIAL,
    "u": StateLabel.UNIVERSAL,
    "d": StateLabel.DETERMINISTIC,
}


def parse_labels(value: str, line: Line) -> dict[str, StateLabel]:
    """`q1=deterministic e=existential u1=u` style state labels."""
    labels: dict[str, StateLabel] = {}
    for item in value.split():
        state, sep, name = item.partition("=")
        if not sep or not state:
            raise ParseError(f"label {item!r} is not state=label", line.number)
        name = name.lower()
        try:
            labels[state] = LABEL_ALIASES.get(name) or StateLabel(name)
        except ValueError:
            raise ParseError(f"unknown state label {name!r}", line.number) from None
    return labels


def machine_type(text: str) -> str | None:
    """Value of the first `type:` header, lowercased."""
    for line in content_lines(text):
        header = split_key(line)
        if header is not None and header[0] == "type":
            return header[1].lower()
    return None


def validation_message(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item["loc"])
        parts.append(f"{where}: {item['msg']}" if where else item["msg"])
    return "; ".join(parts)
