from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class RestartMode(str, Enum):
    IMPLICIT_RESTART = "ImplicitRestart"
    COMPLETE = "Complete"


class Superoperator(BaseModel):
    """
    Scaled main operation elements plus the implicit restart event.

    Matrices are numpy object arrays of Fractions. `slack` is I - sum(E^T E),
    cached at construction by `engines.linalg.make_superoperator`.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(ge=1)
    main_elements: tuple[tuple[str, np.ndarray], ...]
    restart_mode: RestartMode = RestartMode.IMPLICIT_RESTART
    slack: np.ndarray
    name: str = ""

    @model_validator(mode="after")
    def _check_shapes(self) -> "Superoperator":
        labels = [label for label, _ in self.main_elements]
        if len(set(labels)) != len(labels):
            raise ValueError(f"Duplicate operation element labels: {labels}")
        for label, matrix in self.main_elements:
            if matrix.shape != (self.dim, self.dim):
                raise ValueError(
                    f"Element {label!r} has shape {matrix.shape}, expected {self.dim}x{self.dim}"
                )
        if self.slack.shape != (self.dim, self.dim):
            raise ValueError("Slack matrix has the wrong shape")
        return self

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.main_elements]

    def element(self, label: str) -> np.ndarray:
        for name, matrix in self.main_elements:
            if name == label:
                return matrix
        raise KeyError(label)
