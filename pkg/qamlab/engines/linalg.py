"""Exact rational linear algebra and the superoperator abstraction.

Scalars are `fractions.Fraction`; vectors and matrices are numpy arrays with
``dtype=object`` holding Fractions, so every product and sum stays exact.
Adjoints are transposes because every entry is a real rational.
"""

import logging
import math
from fractions import Fraction
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from qamlab.core.config import settings
from qamlab.core.errors import DimensionMismatch, SpecError
from qamlab.models.superoperator import RestartMode, Superoperator

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
ONE = Fraction(1)


def as_vector(entries: Iterable[Fraction | int | str]) -> np.ndarray:
    values = [Fraction(e) for e in entries]
    if not values:
        raise DimensionMismatch("Vectors must have dimension at least 1")
    vector = np.empty(len(values), dtype=object)
    vector[:] = values
    return vector


def as_matrix(rows: Sequence[Sequence[Fraction | int | str]]) -> np.ndarray:
    if not rows or not rows[0]:
        raise DimensionMismatch("Matrices must have at least one row and column")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise DimensionMismatch("Ragged matrix rows")
    matrix = np.empty((len(rows), width), dtype=object)
    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            matrix[i, j] = Fraction(value)
    return matrix


def zeros(rows: int, cols: int | None = None) -> np.ndarray:
    return np.full((rows, rows if cols is None else cols), ZERO, dtype=object)


def zero_vector(dim: int) -> np.ndarray:
    return np.full(dim, ZERO, dtype=object)


def identity(n: int) -> np.ndarray:
    matrix = zeros(n)
    for i in range(n):
        matrix[i, i] = ONE
    return matrix


def basis_vector(dim: int, index: int) -> np.ndarray:
    vector = zero_vector(dim)
    vector[index] = ONE
    return vector


def scale(matrix: np.ndarray, factor: Fraction | int) -> np.ndarray:
    return matrix * Fraction(factor)


def norm_sq(vector: np.ndarray) -> Fraction:
    return sum((x * x for x in vector), ZERO)


def is_zero(array: np.ndarray) -> bool:
    return all(x == 0 for x in array.flat)


def exact_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and all(x == y for x, y in zip(a.flat, b.flat))


def is_symmetric(matrix: np.ndarray) -> bool:
    return matrix.shape[0] == matrix.shape[1] and exact_equal(matrix, matrix.T)


def _require_square(matrices: Sequence[np.ndarray]) -> int:
    if not matrices:
        raise DimensionMismatch("At least one matrix is required")
    dim = matrices[0].shape[0]
    for matrix in matrices:
        if matrix.ndim != 2 or matrix.shape != (dim, dim):
            raise DimensionMismatch(
                f"Expected square {dim}x{dim} matrices, got shape {matrix.shape}"
            )
    return dim


def gram_sum(elements: Sequence[np.ndarray]) -> np.ndarray:
    """Return sum(E^T E) over the given elements."""
    dim = _require_square(elements)
    total = zeros(dim)
    for element in elements:
        total = total + element.T.dot(element)
    return total


# Fraction-free elimination


def _integer_rows(matrix: np.ndarray) -> tuple[list[list[int]], Fraction]:
    """Clear denominators row by row; returns the integer rows and the product of row scales."""
    rows = []
    scale_product = ONE
    for row in matrix:
        lcm = math.lcm(*(Fraction(x).denominator for x in row)) if len(row) else 1
        rows.append([int(Fraction(x) * lcm) for x in row])
        scale_product *= lcm
    return rows, scale_product


def _bareiss(rows: list[list[int]]) -> tuple[int, int]:
    """Bareiss elimination in place. Returns (rank, signed last pivot)."""
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    previous = 1
    rank = 0
    sign = 1
    last_pivot = 0
    for col in range(n_cols):
        pivot = next((i for i in range(rank, n_rows) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        if pivot != rank:
            rows[rank], rows[pivot] = rows[pivot], rows[rank]
            sign = -sign
        head = rows[rank]
        for i in range(rank + 1, n_rows):
            row = rows[i]
            factor = row[col]
            for j in range(col + 1, n_cols):
                row[j] = (head[col] * row[j] - factor * head[j]) // previous
            row[col] = 0
        previous = head[col]
        last_pivot = head[col]
        rank += 1
        if rank == n_rows:
            break
    return rank, sign * last_pivot


def rank(matrix: np.ndarray) -> int:
    rows, _ = _integer_rows(matrix)
    return _bareiss(rows)[0]


def nullity(matrix: np.ndarray) -> int:
    return matrix.shape[1] - rank(matrix)


def det(matrix: np.ndarray) -> Fraction:
    _require_square([matrix])
    rows, scale_product = _integer_rows(matrix)
    found, signed = _bareiss(rows)
    if found < matrix.shape[0]:
        return ZERO
    return Fraction(signed) / scale_product


def psd_violation(matrix: np.ndarray) -> tuple[int, ...] | None:
    """Return the index set of a negative principal minor, or None if PSD."""
    _require_square([matrix])
    if not is_symmetric(matrix):
        raise SpecError("PSD test needs a symmetric matrix")
    n = matrix.shape[0]
    if n > settings.PSD_MAX_DIM:
        logger.warning("Principal-minor PSD test on a %dx%d matrix", n, n)
    for size in range(1, n + 1):
        for index in combinations(range(n), size):
            if det(matrix[np.ix_(index, index)]) < 0:
                return index
    return None


def psd_check(matrix: np.ndarray) -> bool:
    return psd_violation(matrix) is None


def make_superoperator(
    elements: Sequence[tuple[str, np.ndarray]],
    restart_mode: RestartMode = RestartMode.IMPLICIT_RESTART,
    name: str = "",
) -> Superoperator:
    dim = _require_square([m for _, m in elements])
    slack = identity(dim) - gram_sum([m for _, m in elements])
    return Superoperator(
        dim=dim,
        main_elements=tuple((label, m) for label, m in elements),
        restart_mode=restart_mode,
        slack=slack,
        name=name,
    )


def superop_validate(s: Superoperator) -> bool:
    """Check the completeness condition for the superoperator's mode."""
    if s.restart_mode is RestartMode.COMPLETE:
        if is_zero(s.slack):
            return True
        logger.warning("Superoperator %r: slack is not zero in Complete mode", s.name)
        return False
    if not is_symmetric(s.slack):
        logger.warning("Superoperator %r: slack is not symmetric", s.name)
        return False
    violated = psd_violation(s.slack)
    if violated is not None:
        logger.warning(
            "Superoperator %r: principal minor on indices %s of the slack is negative",
            s.name,
            violated,
        )
        return False
    return True


class Application(NamedTuple):
    outcomes: list[tuple[str, np.ndarray]]
    restart_mass: Fraction

    def mass(self, label: str) -> Fraction:
        for name, vector in self.outcomes:
            if name == label:
                return norm_sq(vector)
        raise KeyError(label)

    @property
    def masses(self) -> dict[str, Fraction]:
        return {label: norm_sq(vector) for label, vector in self.outcomes}


def superop_apply(s: Superoperator, psi: np.ndarray) -> Application:
    """Apply every main element to an unconditional vector.

    The restart mass is whatever the main outcomes do not account for.
    """
    if psi.shape != (s.dim,):
        raise DimensionMismatch(f"Register has shape {psi.shape}, operator dim {s.dim}")
    outcomes = [(label, element.dot(psi)) for label, element in s.main_elements]
    restart = norm_sq(psi) - sum((norm_sq(v) for _, v in outcomes), ZERO)
    return Application(outcomes, restart)


def initialize(s_dim: int, target: np.ndarray) -> np.ndarray:
    """Discard the register and load `target`."""
    if target.shape != (s_dim,):
        raise DimensionMismatch(f"Target has shape {target.shape}, register dim {s_dim}")
    return target.copy()


def _ceil_sqrt(value: Fraction) -> int:
    root = math.isqrt(math.ceil(value))
    while root * root < value:
        root += 1
    return root


def choose_scale_d(unscaled_mains: Sequence[np.ndarray]) -> int:
    """Smallest integer d >= 2 with d^2 I - sum(M^T M) positive semidefinite."""
    gram = gram_sum(unscaled_mains)
    dim = gram.shape[0]
    d = max(2, _ceil_sqrt(max(gram[i, i] for i in range(dim))))
    while not psd_check(identity(dim) * (d * d) - gram):
        d += 1
    return d


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(a, b)


def vec(matrix: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return matrix.flatten(order="F")


def unvec(vector: np.ndarray, n: int) -> np.ndarray:
    return vector.reshape((n, n), order="F")


def matrix_power(matrix: np.ndarray, exponent: int) -> np.ndarray:
    result = identity(matrix.shape[0])
    for _ in range(exponent):
        result = result.dot(matrix)
    return result
