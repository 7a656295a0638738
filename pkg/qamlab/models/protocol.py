from enum import Enum
from fractions import Fraction
from typing import Literal, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from qamlab.models.base import ExactModel
from qamlab.models.machines import DigitMap
from qamlab.models.rational import ExactRational


class ProtocolMode(str, Enum):
    WEAK = "Weak4State"
    STRONG = "Strong5State"


class PositionCase(str, Enum):
    INTERIOR = "Interior"
    LEN_MINUS_1 = "LenMinus1"
    LEN_EQUAL = "LenEqual"
    LEN_PLUS_1 = "LenPlus1"
    DOLLAR_1 = "Dollar1"
    DOLLAR_2 = "Dollar2"


class Decision(str, Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    CONTINUE = "continue"


class Classification(str, Enum):
    EXACT = "exact"
    BOUNDS = "bounds"
    NEVER_HALTS = "never-halts"


class PublicEvent(NamedTuple):
    """One entry of the public transcript: who wrote it and what."""

    party: Literal["round", "prover", "verifier"]
    symbol: str


class VerifierConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: ProtocolMode = ProtocolMode.WEAK
    digit_map: DigitMap
    d: int = Field(ge=2)
    length_check: Optional[int] = None
    max_transcript: int = Field(ge=1)

    @model_validator(mode="after")
    def _strong_needs_length(self) -> "VerifierConfig":
        if self.mode is ProtocolMode.STRONG and self.length_check is None:
            raise ValueError("The strong protocol checks configuration lengths")
        return self

    @property
    def dim(self) -> int:
        return 5 if self.mode is ProtocolMode.STRONG else 4

    @property
    def base(self) -> int:
        return self.digit_map.base

    @property
    def scale(self) -> Fraction:
        return Fraction(1, self.d)


class Ledger(ExactModel):
    """Exact probability masses of one round."""

    p_accept: ExactRational = Fraction(0)
    p_reject: ExactRational = Fraction(0)
    p_restart: ExactRational = Fraction(0)
    p_pending: ExactRational = Fraction(0)
    inflow: ExactRational = Fraction(1)

    @property
    def total(self) -> Fraction:
        return self.p_accept + self.p_reject + self.p_restart + self.p_pending

    def conserved(self) -> bool:
        return self.total == self.inflow

    @property
    def halting_mass(self) -> Fraction:
        return self.p_accept + self.p_reject


class TraceEntry(ExactModel):
    path: str = ""
    symbol: str
    operator: str
    masses: dict[str, ExactRational]


class Checkpoint(ExactModel):
    path: str = ""
    block: int
    marker: Literal["first-dollar", "second-dollar"]
    register: list[ExactRational]


class PathRecord(ExactModel):
    coins: str = ""
    exchanges: int = 0
    outcome: Literal["accept", "reject", "pending", "defect"]
    accept_mass: ExactRational = Fraction(0)
    reject_mass: ExactRational = Fraction(0)
    register: list[ExactRational]
    symbols_sent: int
    reason: str = ""


class RoundResult(ExactModel):
    ledger: Ledger
    paths: list[PathRecord] = []
    checkpoints: list[Checkpoint] = []
    trace: list[TraceEntry] = []


class ProtocolOutcome(ExactModel):
    classification: Classification
    overall_accept: Optional[ExactRational] = None
    lower: Optional[ExactRational] = None
    upper: Optional[ExactRational] = None
    rounds: list[Ledger] = []


class ProverKind(str, Enum):
    HONEST_DTM = "honest"
    HONEST_ATM = "honest-atm"
    DEFECT_DIGIT = "defect-digit"
    SKIP_CONFIG = "skip-config"
    PREMATURE_ACCEPT = "premature-accept"
    SILENT = "silent"
    WRONG_LENGTH = "wrong-length"


class ProverSpec(BaseModel):
    """Serializable description of a prover family member."""

    model_config = ConfigDict(frozen=True)

    kind: ProverKind = ProverKind.HONEST_DTM
    block: int = 2
    position: int = 1
    delta: int = 1
    strategy: dict[str, Literal["l", "r"]] = {}
