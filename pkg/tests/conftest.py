from __future__ import annotations

from pathlib import Path

import pytest

from qamlab.models.machines import MachineKind, MachineSpec, Move, StateLabel, Transition

DATA = Path(__file__).parent / "data"


def delta_from_rules(rules: list[str]) -> dict[tuple[str, str], tuple[Transition, ...]]:
    """Parse "q a -> p b R" rules; a second "| p b R" part adds a right branch."""
    delta: dict[tuple[str, str], tuple[Transition, ...]] = {}
    for rule in rules:
        lhs, rhs = rule.split("->")
        state, symbol = lhs.split()
        options = []
        for part in rhs.split("|"):
            target, write, move = part.split()
            options.append(Transition(state=target, write=write, move=Move(move)))
        delta[(state, symbol)] = tuple(options)
    return delta


def ends_with_a() -> MachineSpec:
    """Accepts strings over {a, b} whose last symbol is a."""
    return MachineSpec(
        name="ends-with-a",
        states=("q1", "qa", "qr", "s", "t"),
        tape_alphabet=("#", "a", "b"),
        input_alphabet=("a", "b"),
        start="q1",
        accept="qa",
        reject="qr",
        delta=delta_from_rules(
            [
                "q1 # -> s # R",
                "s a -> s a R",
                "s b -> s b R",
                "s # -> t # L",
                "t a -> qa a L",
                "t b -> qr b L",
                "t # -> qr # R",
            ]
        ),
    )


def even_length() -> MachineSpec:
    """Accepts even-length strings; grows the tape on both outcomes and shrinks it once."""
    return MachineSpec(
        name="even-length",
        states=("q1", "qa", "qr", "e", "o", "w", "z", "y", "k"),
        tape_alphabet=("#", "a", "b"),
        input_alphabet=("a", "b"),
        start="q1",
        accept="qa",
        reject="qr",
        delta=delta_from_rules(
            [
                "q1 # -> e # R",
                "e a -> o a R",
                "e b -> o b R",
                "o a -> e a R",
                "o b -> e b R",
                "e # -> w a R",
                "w # -> qa # L",
                "o # -> z b L",
                "z a -> y a R",
                "z b -> y b R",
                "y b -> k # L",
                "k a -> qr a L",
                "k b -> qr b L",
            ]
        ),
    )


def starts_with_a() -> MachineSpec:
    return MachineSpec(
        name="starts-with-a",
        states=("q1", "qa", "qr", "s"),
        tape_alphabet=("#", "a", "b"),
        input_alphabet=("a", "b"),
        start="q1",
        accept="qa",
        reject="qr",
        delta=delta_from_rules(
            [
                "q1 # -> s # R",
                "s a -> qa a R",
                "s b -> qr b R",
                "s # -> qr # R",
            ]
        ),
    )


def accept_all() -> MachineSpec:
    """Halts after a single step, so the whole run is one block."""
    return MachineSpec(
        name="accept-all",
        states=("q1", "qa", "qr"),
        tape_alphabet=("#", "a", "b"),
        input_alphabet=("a", "b"),
        start="q1",
        accept="qa",
        reject="qr",
        delta=delta_from_rules(["q1 # -> qa # R"]),
    )


def loops_forever() -> MachineSpec:
    return MachineSpec(
        name="loops-forever",
        states=("q1", "qa", "qr", "s"),
        tape_alphabet=("#", "a"),
        input_alphabet=("a",),
        start="q1",
        accept="qa",
        reject="qr",
        delta=delta_from_rules(["q1 # -> s # R", "s # -> q1 # L", "s a -> q1 a L"]),
    )


def contains_a_atm() -> MachineSpec:
    """
    Normal-form ATM over inputs of length 2 that accepts when x contains an a.

    The existential state e guesses which cell holds the a; the universal
    states ua/ub then branch once, and ub sends its right branch to reject.
    """
    return MachineSpec(
        name="contains-a",
        kind=MachineKind.ATM,
        states=("q1", "qa", "qr", "e", "e2", "ua", "ub"),
        tape_alphabet=("#", "¢", "a", "b"),
        input_alphabet=("a", "b"),
        start="q1",
        accept="qa",
        reject="qr",
        labels={
            "q1": StateLabel.DETERMINISTIC,
            "e": StateLabel.EXISTENTIAL,
            "e2": StateLabel.DETERMINISTIC,
            "ua": StateLabel.UNIVERSAL,
            "ub": StateLabel.UNIVERSAL,
        },
        delta=delta_from_rules(
            [
                "q1 ¢ -> e ¢ R",
                "e a -> ua a R | e2 a R",
                "e b -> ub b R | e2 b R",
                "e2 a -> ua a R",
                "e2 b -> ub b R",
                "ua a -> qa a L | qa a L",
                "ua b -> qa b L | qa b L",
                "ua ¢ -> qa ¢ L | qa ¢ L",
                "ub a -> qa a L | qr a L",
                "ub b -> qa b L | qr b L",
                "ub ¢ -> qa ¢ L | qr ¢ L",
            ]
        ),
    )


# (machine factory, members, nonmembers)
DTM_BATTERY = [
    (ends_with_a, ["a", "ba", "bba"], ["b", "ab", ""]),
    (even_length, ["ab", "", "abba"], ["a", "bab"]),
    (starts_with_a, ["a", "ab", "abb"], ["b", "ba", ""]),
]


@pytest.fixture
def dtm() -> MachineSpec:
    return ends_with_a()


@pytest.fixture
def atm() -> MachineSpec:
    return contains_a_atm()


@pytest.fixture
def data_dir() -> Path:
    return DATA
