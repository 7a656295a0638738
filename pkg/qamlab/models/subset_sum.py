from typing import Iterable, Optional

from pydantic import BaseModel, ConfigDict, Field

from qamlab.models.base import ExactModel
from qamlab.models.protocol import Ledger, TraceEntry
from qamlab.models.rational import ExactRational


class SubsetSumInstance(BaseModel):
    """S$a1$...$an$ with every number written in binary."""

    model_config = ConfigDict(frozen=True)

    raw: str
    target: int = Field(ge=0)
    items: tuple[int, ...] = Field(min_length=1)

    @property
    def n(self) -> int:
        return len(self.items)

    def subset_total(self, selection: Iterable[int]) -> int:
        return sum(self.items[i - 1] for i in set(selection))


class SubsetSumRound(ExactModel):
    selection: list[int]
    ledger: Ledger
    # Register just before the closing # is read
    register: list[ExactRational] = []
    trace: list[TraceEntry] = []


class SubsetSumMaximum(ExactModel):
    overall_accept: ExactRational
    selection: list[int]
    subset_total: int
    target: int
    selections_checked: int
    ledger: Optional[Ledger] = None
