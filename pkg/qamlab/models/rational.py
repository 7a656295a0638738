from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Any

from pydantic_core import core_schema


def parse_rational(text: str) -> Fraction:
    """Parse "num/den", an integer or a finite decimal into an exact Fraction."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"Invalid rational {text!r}: {e}") from e


def render_exact(value: Fraction | int) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def render_approx(value: Fraction | int, digits: int = 12) -> str:
    """Decimal approximation for display only."""
    value = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = digits
        approx = Decimal(value.numerator) / Decimal(value.denominator)
    return f"{approx:.{digits}g}"


class ExactRational(Fraction):
    """
    Custom type for exact probabilities and amplitudes.
    Values travel through JSON as "num/den" strings so no precision is lost.
    """

    @classmethod
    def __get_pydantic_core_schema__(
        cls, _source_type: Any, _handler: Any
    ) -> core_schema.CoreSchema:
        return core_schema.json_or_python_schema(
            json_schema=core_schema.chain_schema(
                [
                    core_schema.union_schema(
                        [core_schema.str_schema(), core_schema.int_schema()]
                    ),
                    core_schema.no_info_plain_validator_function(cls.validate),
                ]
            ),
            python_schema=core_schema.union_schema(
                [
                    core_schema.is_instance_schema(Fraction),
                    core_schema.no_info_plain_validator_function(cls.validate),
                ]
            ),
            serialization=core_schema.plain_serializer_function_ser_schema(
                render_exact
            ),
        )

    @classmethod
    def validate(cls, v: Any) -> Fraction:
        if isinstance(v, bool):
            raise ValueError("Booleans are not rationals")
        if isinstance(v, (Fraction, int)):
            return Fraction(v)
        if isinstance(v, str):
            return parse_rational(v)
        raise ValueError(f"Cannot interpret {type(v).__name__} as a rational")
