"""Absolute-halting bound for machines with a finite-dimensional nonhalting part.

The nonhalting part evolves as nu -> sum_i E_i nu E_i^T. Vectorizing it gives a
single linear map bigE = sum_i E_i (x) E_i on N^2 dimensions, and a vector that
survives N^2 applications of a linear map on an N^2-dimensional space never
vanishes: the kernels of its powers stop growing by then.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from qamlab.core.errors import DimensionMismatch, SpecError
from qamlab.engines.linalg import (
    gram_sum,
    identity,
    is_symmetric,
    is_zero,
    kron,
    nullity,
    psd_check,
    unvec,
    vec,
    zeros,
)
from qamlab.models.halting import (
    HaltingIndex,
    HaltingReport,
    HaltingVerdict,
    NonhaltingSystem,
    VectorizedSystem,
)

logger = logging.getLogger(__name__)


def make_nonhalting_system(
    elements: Sequence[np.ndarray], nu0: np.ndarray, *, validate: bool = True
) -> NonhaltingSystem:
    """Build a system, checking sub-completeness and that nu0 is PSD.

    Callers that assemble block-diagonal systems from already validated
    superoperators pass validate=False; the principal-minor test is
    exponential in N.
    """
    if nu0.ndim != 2 or nu0.shape[0] != nu0.shape[1]:
        raise DimensionMismatch(f"nu0 must be square, got shape {nu0.shape}")
    n = nu0.shape[0]
    for i, element in enumerate(elements):
        if element.shape != (n, n):
            raise DimensionMismatch(f"Element {i} has shape {element.shape}, nu0 is {n}x{n}")

    if validate:
        if not is_symmetric(nu0) or not psd_check(nu0):
            raise SpecError("nu0 must be symmetric positive semidefinite")
        if elements and not psd_check(identity(n) - gram_sum(list(elements))):
            raise SpecError("The elements are not sub-complete: I - sum(E^T E) is not PSD")
    return NonhaltingSystem(n=n, elements=tuple(elements), nu0=nu0)


def vectorize(system: NonhaltingSystem) -> VectorizedSystem:
    size = system.bound
    big_e = zeros(size)
    for element in system.elements:
        big_e = big_e + kron(element, element)
    return VectorizedSystem(big_e=big_e, v0=vec(system.nu0))


def density_step(system: NonhaltingSystem, nu: np.ndarray) -> np.ndarray:
    total = zeros(system.n)
    for element in system.elements:
        # only the nonzero columns of E touch nu
        support = [j for j in range(system.n) if any(v != 0 for v in element[:, j])]
        if not support:
            continue
        block = element[:, support]
        total = total + block.dot(nu[np.ix_(support, support)]).dot(block.T)
    return total


def _index(halted_at: Optional[int], bound: int) -> HaltingIndex:
    if halted_at is None:
        return HaltingIndex(verdict=HaltingVerdict.RUNS_FOREVER, bound=bound)
    return HaltingIndex(verdict=HaltingVerdict.HALTS_AT, index=halted_at, bound=bound)


def halting_index(system: NonhaltingSystem) -> HaltingIndex:
    """First j with bigE^j v0 = 0, or RunsForever when v_{N^2} is still nonzero."""
    vectorized = vectorize(system)
    v = vectorized.v0
    for j in range(system.bound + 1):
        if is_zero(v):
            logger.info("Nonhalting part vanishes after %d step(s), bound %d", j, system.bound)
            return _index(j, system.bound)
        v = vectorized.big_e.dot(v)
    logger.info("Nonhalting part survives %d steps", system.bound)
    return _index(None, system.bound)


def density_halting_index(system: NonhaltingSystem) -> HaltingIndex:
    """The same question answered by iterating the density matrix directly."""
    nu = system.nu0
    for j in range(system.bound + 1):
        if is_zero(nu):
            return _index(j, system.bound)
        nu = density_step(system, nu)
    return _index(None, system.bound)


def kernel_chain(big_e: np.ndarray) -> list[int]:
    """Nullities of bigE^j for j = 1 .. dim.

    Once two consecutive kernels coincide every later one does too, so the
    tail is filled in without further eliminations.
    """
    if big_e.ndim != 2 or big_e.shape[0] != big_e.shape[1]:
        raise DimensionMismatch(f"kernel_chain needs a square matrix, got {big_e.shape}")
    dim = big_e.shape[0]
    nullities: list[int] = []
    power = big_e
    for _ in range(dim):
        value = nullity(power)
        if nullities and nullities[-1] == value:
            nullities.extend([value] * (dim - len(nullities)))
            break
        nullities.append(value)
        power = power.dot(big_e)
    return nullities


def halting_report(system: NonhaltingSystem) -> HaltingReport:
    result = halting_index(system)
    oracle = density_halting_index(system)
    return HaltingReport(
        n=system.n,
        bound=system.bound,
        verdict=result.verdict,
        index=result.index,
        nullities=kernel_chain(vectorize(system).big_e),
        agrees_with_density_iteration=oracle == result,
    )


def nu_after(system: NonhaltingSystem, steps: int) -> np.ndarray:
    """nu_j recovered from the vectorized iteration."""
    vectorized = vectorize(system)
    v = vectorized.v0
    for _ in range(steps):
        v = vectorized.big_e.dot(v)
    return unvec(v, system.n)
