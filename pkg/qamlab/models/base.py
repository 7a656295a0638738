from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
from pydantic import BaseModel

from qamlab.core.config import settings
from qamlab.models.rational import render_approx, render_exact


def exact_pair(value: Fraction | int) -> dict[str, str]:
    return {
        "exact": render_exact(value),
        "approx": render_approx(value, settings.DISPLAY_DIGITS),
    }


def to_report_value(value: Any) -> Any:
    """Recursively convert exact values into JSON-ready report values."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return exact_pair(value)
    if isinstance(value, ExactModel):
        return value.to_report()
    if isinstance(value, BaseModel):
        return to_report_value(dict(value))
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return [to_report_value(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): to_report_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, frozenset, set)):
        items = [to_report_value(v) for v in value]
        if isinstance(value, (frozenset, set)):
            items.sort(key=repr)
        return items
    return value


class ExactModel(BaseModel):
    """
    A base model for simulator results that includes a smart `to_report` method.
    """

    def to_report(self) -> dict:
        """
        Convert the model to a dictionary suitable for JSON reports.

        Rationals become {"exact": "num/den", "approx": "..."} pairs, numpy
        registers become lists and nested models are converted the same way.
        Aliases are honoured so report keys match the model's public names.
        """
        data = {}
        for field_name, field_info in self.__class__.model_fields.items():
            if field_info.exclude:
                continue
            key = field_info.alias or field_name
            data[key] = to_report_value(getattr(self, field_name))
        return data
