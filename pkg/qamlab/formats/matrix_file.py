"""Elements files for the halting bound.

    // nilpotent shift
    dimension: 2
    element: shift
    0 1
    0 0
    nu0:
    0 0
    0 1

`nu0` is optional and defaults to the identity (every configuration live).
"""

from pathlib import Path

import numpy as np

from qamlab.core.errors import ParseError
from qamlab.engines.halting import make_nonhalting_system
from qamlab.engines.linalg import as_matrix, identity
from qamlab.formats.common import content_lines, parse_int, parse_rationals, read_text, split_key
from qamlab.models.halting import NonhaltingSystem


def parse_elements(text: str, *, validate: bool = True) -> NonhaltingSystem:
    n: int | None = None
    elements: list[np.ndarray] = []
    nu0: np.ndarray | None = None
    block: str | None = None
    rows: list[list] = []
    block_line = 0

    def close_block() -> None:
        nonlocal nu0, block, rows
        if block is None:
            return
        if len(rows) != n:
            raise ParseError(f"{block} block has {len(rows)} rows, expected {n}", block_line)
        if block == "nu0":
            if nu0 is not None:
                raise ParseError("nu0 given twice", block_line)
            nu0 = as_matrix(rows)
        else:
            elements.append(as_matrix(rows))
        block, rows = None, []

    for line in content_lines(text):
        header = split_key(line)
        if header is not None:
            key, value = header
            close_block()
            if key == "dimension":
                if n is not None:
                    raise ParseError("dimension given twice", line.number)
                n = parse_int(value, line, "dimension")
                if n < 1:
                    raise ParseError("dimension must be at least 1", line.number)
            elif key in ("element", "nu0"):
                if n is None:
                    raise ParseError("dimension must come before the first block", line.number)
                block, block_line = key, line.number
            else:
                raise ParseError(f"unknown key {key!r}", line.number)
            continue
        if block is None:
            raise ParseError("matrix row outside an element or nu0 block", line.number)
        rows.append(parse_rationals(line, n))
        if len(rows) > n:
            raise ParseError(f"{block} block has more than {n} rows", line.number)
    close_block()

    if n is None:
        raise ParseError("missing dimension header")
    return make_nonhalting_system(elements, identity(n) if nu0 is None else nu0, validate=validate)


def load_elements(path: str | Path, *, validate: bool = True) -> NonhaltingSystem:
    return parse_elements(read_text(path), validate=validate)
