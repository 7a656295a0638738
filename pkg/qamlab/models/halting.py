from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from qamlab.models.base import ExactModel


class NonhaltingSystem(BaseModel):
    """
    Operation elements acting on the nonhalting part of a machine, plus the
    initial (unnormalized) density matrix nu0 over its N standard configurations.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=1)
    elements: tuple[np.ndarray, ...] = ()
    nu0: np.ndarray

    @model_validator(mode="after")
    def _check_shapes(self) -> "NonhaltingSystem":
        if self.nu0.shape != (self.n, self.n):
            raise ValueError(f"nu0 has shape {self.nu0.shape}, expected {self.n}x{self.n}")
        for i, element in enumerate(self.elements):
            if element.shape != (self.n, self.n):
                raise ValueError(
                    f"Element {i} has shape {element.shape}, expected {self.n}x{self.n}"
                )
        return self

    @property
    def bound(self) -> int:
        return self.n * self.n


class VectorizedSystem(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    big_e: np.ndarray
    v0: np.ndarray


class HaltingVerdict(str, Enum):
    HALTS_AT = "HaltsAt"
    RUNS_FOREVER = "RunsForever"


class HaltingIndex(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: HaltingVerdict
    index: Optional[int] = None
    bound: int

    @property
    def halts(self) -> bool:
        return self.verdict is HaltingVerdict.HALTS_AT

    def __str__(self) -> str:
        if self.halts:
            return f"HaltsAt({self.index})"
        return "RunsForever"


class HaltingReport(ExactModel):
    n: int
    bound: int
    verdict: HaltingVerdict
    index: Optional[int] = None
    # Nullities of bigE^j for j = 1 .. N^2
    nullities: list[int] = []
    agrees_with_density_iteration: bool
