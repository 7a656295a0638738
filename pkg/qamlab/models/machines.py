from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

BLANK = "#"
CENT = "¢"
DOLLAR = "$"
LEFT = "l"
RIGHT = "r"

# Symbols the protocols put on the communication channel besides Γ′
RESERVED_SYMBOLS = frozenset({DOLLAR, LEFT, RIGHT})


class MachineKind(str, Enum):
    DTM = "DTM"
    ATM = "ATM"


class Move(str, Enum):
    L = "L"
    R = "R"


class StateLabel(str, Enum):
    EXISTENTIAL = "existential"
    UNIVERSAL = "universal"
    DETERMINISTIC = "deterministic"


class Transition(BaseModel):
    model_config = ConfigDict(frozen=True)

    state: str
    write: str
    move: Move


class MachineSpec(BaseModel):
    """
    A single-tape DTM, or an ATM in the cent-delimited normal form.

    Tape symbols are single characters so that inputs can be given as plain
    strings; state names may be any token.
    """

    model_config = ConfigDict(frozen=True)

    kind: MachineKind = MachineKind.DTM
    states: tuple[str, ...]
    tape_alphabet: tuple[str, ...]
    input_alphabet: tuple[str, ...]
    start: str
    accept: str
    reject: str
    delta: dict[tuple[str, str], tuple[Transition, ...]] = Field(default_factory=dict)
    labels: dict[str, StateLabel] = Field(default_factory=dict)
    name: str = ""

    @model_validator(mode="after")
    def _check_machine(self) -> "MachineSpec":
        states, tape = set(self.states), set(self.tape_alphabet)
        if len(states) != len(self.states) or len(tape) != len(self.tape_alphabet):
            raise ValueError("States and tape symbols must be listed once each")
        if states & tape:
            raise ValueError(f"Q and Γ overlap on {sorted(states & tape)}")
        if (states | tape) & RESERVED_SYMBOLS:
            raise ValueError(
                f"Symbols {sorted((states | tape) & RESERVED_SYMBOLS)} are reserved"
            )
        if any(len(symbol) != 1 for symbol in self.tape_alphabet):
            raise ValueError("Tape symbols must be single characters")
        if BLANK not in tape:
            raise ValueError("The tape alphabet must contain the blank #")
        if self.kind is MachineKind.ATM and CENT not in tape:
            raise ValueError("Normal-form ATMs need ¢ in the tape alphabet")
        if not set(self.input_alphabet) <= tape - {BLANK, CENT}:
            raise ValueError("The input alphabet must be a subset of Γ without # and ¢")
        special = (self.start, self.accept, self.reject)
        if len(set(special)) != 3 or not set(special) <= states:
            raise ValueError("start, accept and reject must be three distinct states")
        if len(states) + len(tape) < 5:
            raise ValueError("|Γ′| = |Q| + |Γ| must be at least 5")

        for (state, symbol), transitions in self.delta.items():
            if state not in states or symbol not in tape:
                raise ValueError(f"delta entry ({state}, {symbol}) uses unknown symbols")
            if state in (self.accept, self.reject):
                raise ValueError(f"Halting state {state} cannot have transitions")
            for t in transitions:
                if t.state not in states or t.write not in tape:
                    raise ValueError(f"delta({state}, {symbol}) targets unknown symbols")
            expected = self.branch_count(state)
            if len(transitions) != expected:
                raise ValueError(
                    f"delta({state}, {symbol}) has {len(transitions)} transitions, "
                    f"expected {expected}"
                )

        if self.kind is MachineKind.ATM:
            for state in self.states:
                if state not in (self.accept, self.reject) and state not in self.labels:
                    raise ValueError(f"ATM state {state} has no label")
        elif self.labels:
            raise ValueError("State labels are only meaningful for ATMs")
        return self

    def __hash__(self) -> int:
        return hash(
            (
                self.kind,
                self.states,
                self.tape_alphabet,
                self.start,
                tuple(sorted(self.delta.items())),
                tuple(sorted(self.labels.items())),
            )
        )

    @property
    def alphabet(self) -> tuple[str, ...]:
        """The configuration alphabet Γ′ = Q ∪ Γ in declaration order."""
        return self.states + self.tape_alphabet

    @property
    def terminal(self) -> str:
        return CENT if self.kind is MachineKind.ATM else BLANK

    def label(self, state: str) -> StateLabel:
        return self.labels.get(state, StateLabel.DETERMINISTIC)

    def branch_count(self, state: str) -> int:
        if self.kind is MachineKind.ATM and self.label(state) is not StateLabel.DETERMINISTIC:
            return 2
        return 1

    def is_halting_state(self, state: str) -> bool:
        return state in (self.accept, self.reject)


class Configuration(BaseModel):
    """A configuration uqv: the head scans the leftmost symbol of v."""

    model_config = ConfigDict(frozen=True)

    symbols: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return "".join(self.symbols)

    def render(self, sep: str = " ") -> str:
        return sep.join(self.symbols)


class DigitMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    digits: dict[str, int]

    @model_validator(mode="after")
    def _check_digits(self) -> "DigitMap":
        values = sorted(self.digits.values())
        if values != list(range(1, len(values) + 1)):
            raise ValueError("Digits must be exactly 1..|Γ′|, each used once")
        return self

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.digits.items())))

    @property
    def base(self) -> int:
        return len(self.digits) + 1

    @property
    def max_digit(self) -> int:
        return len(self.digits)

    def __getitem__(self, symbol: str) -> int:
        return self.digits[symbol]

    def symbol(self, digit: int) -> Optional[str]:
        for symbol, value in self.digits.items():
            if value == digit:
                return symbol
        return None
