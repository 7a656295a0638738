import random

import pytest

from qamlab.core.errors import MachineError
from qamlab.engines.machines import (
    digit_map,
    initial_config,
    next_config,
    run_dtm,
    step_cells,
    successors,
)
from qamlab.engines.successor import (
    length_case,
    stream_successor,
    successor_symbols,
    window_at,
)
from qamlab.models.machines import BLANK, CENT, Configuration, MachineKind, Move, Transition
from qamlab.models.protocol import PositionCase

from .conftest import DTM_BATTERY, contains_a_atm, even_length


def _random_configuration(rng: random.Random, spec) -> Configuration:
    working = [s for s in spec.states if not spec.is_halting_state(s)]
    inner = [s for s in spec.tape_alphabet if s != CENT]
    edge = CENT if spec.kind is MachineKind.ATM else BLANK
    if spec.kind is MachineKind.ATM:
        cells = [edge, *rng.choices(inner, k=2), edge]
    else:
        cells = [edge, *rng.choices(inner, k=rng.randint(0, 4)), edge]
    head = rng.randrange(len(cells) + 1)
    return Configuration(symbols=(*cells[:head], rng.choice(working), *cells[head:]))


def _machines():
    return [factory() for factory, _, _ in DTM_BATTERY] + [contains_a_atm()]


def test_streaming_successor_matches_next_config() -> None:
    rng = random.Random(20240611)
    machines = _machines()
    checked = 0
    for _ in range(200):
        spec = rng.choice(machines)
        dm = digit_map(spec)
        c = _random_configuration(rng, spec)
        branch = rng.randrange(2)
        try:
            options = successors(spec, c)
        except MachineError:
            with pytest.raises(MachineError):
                list(stream_successor(spec, c.symbols, dm, branch))
            continue
        expected = options[min(branch, len(options) - 1)]
        assert successor_symbols(spec, c.symbols, branch) == expected.symbols
        assert list(stream_successor(spec, c.symbols, dm, branch)) == [
            dm[s] for s in expected.symbols
        ]
        checked += 1
    assert checked >= 20


@pytest.mark.parametrize("factory,members,nonmembers", DTM_BATTERY)
def test_successor_follows_whole_runs(factory, members, nonmembers) -> None:
    spec = factory()
    for x in members + nonmembers:
        trail = run_dtm(spec, x, limit=50)
        for c, successor in zip(trail, trail[1:]):
            assert successor_symbols(spec, c.symbols) == successor.symbols


def test_window_is_padded_with_none() -> None:
    window = window_at(("#", "q1", "a"), 0)
    assert window.before is None
    assert window.here == "#"
    assert window.after == "q1"
    assert window.scanned == "a"
    assert window_at(("#", "q1", "a"), 2).after is None


def test_length_cases_cover_growth_and_shrink() -> None:
    spec = even_length()
    # o at the frontier writes b and steps left: the tape grows
    assert length_case(spec, ("#", "a", "o", "#")) is PositionCase.LEN_PLUS_1
    # y erases the last written cell and leaves a doubled blank behind
    assert length_case(spec, ("#", "a", "y", "b", "#")) is PositionCase.LEN_MINUS_1
    assert length_case(spec, ("q1", "#", "a", "b", "#")) is PositionCase.LEN_EQUAL
    # only the tail matters once the head is far from the frontier
    assert length_case(spec, ("#", "e", "a", "b", "a", "#")) is PositionCase.LEN_EQUAL


def test_frontier_drop_matches_step_cells() -> None:
    cells, head = step_cells(
        MachineKind.DTM, ["#", "a", "b", "#"], 2, Transition(state="k", write="#", move=Move.L)
    )
    assert cells == ["#", "a", "#"]
    assert head == 1


def test_atm_successor_keeps_length() -> None:
    spec = contains_a_atm()
    c = initial_config(spec, "ab")
    successor = next_config(spec, c)
    assert successor_symbols(spec, c.symbols) == successor.symbols
    assert len(successor) == len(c)


def test_atm_successor_of_stuck_configuration_raises() -> None:
    spec = contains_a_atm()
    with pytest.raises(MachineError):
        successor_symbols(spec, (CENT, "a", "b", "e", CENT))
