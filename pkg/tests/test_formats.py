import pytest

from qamlab.core.errors import MachineError, ParseError
from qamlab.engines.machines import evaluate_atm
from qamlab.engines.qalternation import TableQMachine, strong_eval
from qamlab.formats.common import machine_type
from qamlab.formats.machine_file import load_machine, parse_machine
from qamlab.formats.qmachine_file import load_qmachine, parse_qmachine
from qamlab.models.alternation import HeadMove, Verdict
from qamlab.models.machines import MachineKind, StateLabel

from .conftest import contains_a_atm, ends_with_a

HEADER = """
type: DTM
states: q1 qa qr s
tape_alphabet: _ a
input_alphabet: a
start: q1
accept: qa
reject: qr
"""


def test_dtm_file_matches_the_fixture(data_dir) -> None:
    spec = load_machine(data_dir / "ends_with_a.tm")
    assert spec == ends_with_a()


def test_atm_file_matches_the_fixture(data_dir) -> None:
    spec = load_machine(data_dir / "contains_a.tm")
    assert spec.kind is MachineKind.ATM
    assert spec == contains_a_atm()
    assert spec.labels["ua"] is StateLabel.UNIVERSAL
    assert evaluate_atm(spec, "ab")


def test_blank_is_spelled_with_an_underscore() -> None:
    spec = parse_machine(HEADER + "delta: q1 _ -> s _ R\ndelta: s _ -> qa a L\n")
    assert spec.tape_alphabet == ("#", "a")
    (t,) = spec.delta[("s", "#")]
    assert (t.state, t.write, t.move.value) == ("qa", "a", "L")


def test_branch_parentheses_are_optional() -> None:
    text = HEADER.replace("DTM", "ATM").replace("_ a", "_ ¢ a") + (
        "labels: q1=e s=d\n"
        "branch: q1 ¢ -> s ¢ R | qr ¢ R\n"
        "delta: s a -> qa a L\n"
    )
    spec = parse_machine(text)
    assert [t.state for t in spec.delta[("q1", "¢")]] == ["s", "qr"]


@pytest.mark.parametrize(
    "extra,message",
    [
        ("delta: q1 _ s _ R\n", "not of the form"),
        ("delta: q1 _ -> s _ X\n", "not of the form"),
        ("delta: q1 _ -> s _ R\ndelta: q1 _ -> qa _ R\n", "given twice"),
        ("colour: red\n", "unknown key"),
        ("just some words\n", "key: value"),
        ("labels: q1\n", "state=label"),
        ("labels: q1=sideways\n", "unknown state label"),
    ],
)
def test_machine_parse_errors(extra: str, message: str) -> None:
    with pytest.raises(ParseError, match=message):
        parse_machine(HEADER + extra)


def test_unknown_type() -> None:
    with pytest.raises(ParseError, match="machine type"):
        parse_machine("type: PDA\n")


def test_invalid_machines_surface_as_machine_errors() -> None:
    with pytest.raises(MachineError, match="Halting state"):
        parse_machine(HEADER + "delta: qa _ -> s _ R\n")
    with pytest.raises(MachineError, match="start"):
        parse_machine(HEADER.replace("start: q1\n", ""))
    with pytest.raises(MachineError, match="labels are only meaningful"):
        parse_machine(HEADER + "labels: q1=e\n")


def test_missing_file() -> None:
    with pytest.raises(ParseError, match="cannot read"):
        load_machine("/nonexistent/machine.tm")


def test_machine_type(data_dir) -> None:
    assert machine_type((data_dir / "contains_a.tm").read_text(encoding="utf-8")) == "atm"
    assert machine_type((data_dir / "coin.qm").read_text(encoding="utf-8")) == "q1afa"
    assert machine_type("// nothing here\n") is None


def test_qmachine_file(data_dir) -> None:
    spec = load_qmachine(data_dir / "coin.qm")
    assert spec.dim == 2
    assert spec.initial == (1, 0)
    assert spec.labels["u"] is StateLabel.UNIVERSAL
    assert [t.move for t in spec.delta[("u", "$")]] == [HeadMove.S, HeadMove.S]
    binding = spec.superops[("u", "$")]
    assert [label for label, _ in binding.elements] == ["heads", "tails"]
    assert binding.restart == "acc"

    machine = TableQMachine(spec)
    assert strong_eval(machine, "ab").verdict is Verdict.ACCEPT
    assert strong_eval(machine, "").verdict is Verdict.REJECT


QHEADER = """
type: q1afa
states: q0 acc rej
input_alphabet: a
start: q0
accept: acc
reject: rej
labels: q0=u
dimension: 1
initial: 1
branch: q0 ¢ -> (acc S | rej S)
"""


@pytest.mark.parametrize(
    "extra,message",
    [
        ("element: x\n1\n", "outside a superop"),
        ("restart: acc\n", "outside a superop"),
        ("1\n", "outside an element"),
        ("superop: q0\n", "a state and a symbol"),
        ("superop: q0 ¢\nelement: x\n1\n2\n", "expected 1"),
        ("superop: q0 ¢\nelement: x\n1 0\n", "expected 1 entries"),
        ("superop: q0 ¢\nelement: x\n1\nelement: y\n0\nsuperop: q0 ¢\nelement: x\n1\n", "given twice"),
        ("delta: q0 a -> acc L\n", "not of the form"),
    ],
)
def test_qmachine_parse_errors(extra: str, message: str) -> None:
    with pytest.raises(ParseError, match=message):
        parse_qmachine(QHEADER + extra)


def test_qmachine_needs_one_element_per_branch() -> None:
    with pytest.raises(MachineError, match="branch-count mismatch"):
        parse_qmachine(QHEADER + "superop: q0 ¢\nelement: x\n1\n")
    with pytest.raises(MachineError, match="no superop block"):
        parse_qmachine(QHEADER)


def test_qmachine_type_is_checked() -> None:
    with pytest.raises(ParseError, match="expected type q1afa"):
        parse_qmachine("type: DTM\n")
