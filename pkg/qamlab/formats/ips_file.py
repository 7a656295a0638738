"""Verifier configuration graphs for tree evaluation.

    // retry until the coin accepts
    name: retry
    initial: r
    config: r read -> acc c
    config: c comm-0 -> r acc
    config: acc acc

Read configurations list one or two coin children, communication
configurations list the child for answer 0 then answer 1, and halting
configurations (acc, rej) list none.
"""

import re
from pathlib import Path

from pydantic import ValidationError

from qamlab.core.errors import MalformedInstance, ParseError
from qamlab.formats.common import content_lines, read_text, split_key, validation_message
from qamlab.models.trees import ConfigClass, IPSConfig, IPSVerifierSpec

CONFIG = re.compile(r"^(?P<name>\S+)\s+(?P<cls>\S+)(?:\s*->\s*(?P<children>.*))?$")


def parse_ips(text: str) -> IPSVerifierSpec:
    fields: dict = {"configs": []}
    for line in content_lines(text):
        header = split_key(line)
        if header is None:
            raise ParseError(f"expected 'key: value', got {line.text!r}", line.number)
        key, value = header

        if key in ("name", "initial"):
            fields[key] = value
        elif key == "config":
            match = CONFIG.match(value)
            if match is None:
                raise ParseError(f"config {value!r} is not of the form 'name class -> children'", line.number)
            try:
                cls = ConfigClass(match.group("cls").lower())
            except ValueError:
                raise ParseError(f"unknown configuration class {match.group('cls')!r}", line.number) from None
            children = tuple((match.group("children") or "").split())
            fields["configs"].append(IPSConfig(name=match.group("name"), cls=cls, children=children))
        else:
            raise ParseError(f"unknown key {key!r}", line.number)

    if "initial" not in fields:
        raise ParseError("missing 'initial:' line")
    try:
        return IPSVerifierSpec(**fields)
    except ValidationError as e:
        raise MalformedInstance(validation_message(e)) from None


def load_ips(path: str | Path) -> IPSVerifierSpec:
    return parse_ips(read_text(path))
