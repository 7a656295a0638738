import pytest

from qamlab.core.errors import MachineError, SpecError
from qamlab.engines.provers import (
    DefectDigit,
    HonestATM,
    HonestDTM,
    PrematureAccept,
    SilentProver,
    honest_configurations,
    make_prover,
    parse_prover_spec,
    round_number,
    round_position,
)
from qamlab.models.protocol import ProverKind, PublicEvent

from .conftest import loops_forever


def _transcript(prover, x, coins=()):
    return list(prover.symbols(x, tuple(coins)))


def test_honest_dtm_streams_the_run(dtm) -> None:
    symbols = _transcript(HonestDTM(dtm), "a")
    assert "".join(symbols) == "q1#a#$$#sa#$$#as#$$#ta#$$"


def test_honest_atm_announces_branches(atm) -> None:
    symbols = _transcript(HonestATM(atm), "ba", coins=["l", "r"])
    # e picks the right branch, since its left branch leads to ub which can reject
    assert symbols[:8] == ["q1", "¢", "b", "a", "¢", "$", "$", "r"]
    assert symbols.count("l") + symbols.count("r") == 2


def test_strategy_table_overrides_the_search(atm) -> None:
    prover = HonestATM(atm, {"e": "l"})
    assert _transcript(prover, "ba", coins=["l", "l"])[7] == "l"
    with pytest.raises(SpecError):
        HonestATM(atm, {"e": "x"})


def test_defect_digit_shifts_one_symbol(dtm) -> None:
    symbols = _transcript(DefectDigit(dtm, block=2, position=2, delta=1), "a")
    assert "".join(symbols[6:10]) == "#ta#"


def test_defect_digit_rejects_useless_shift(dtm) -> None:
    with pytest.raises(SpecError):
        DefectDigit(dtm, block=2, position=2, delta=8)


def test_premature_accept_fabricates_an_accepting_step(dtm) -> None:
    symbols = _transcript(PrematureAccept(dtm), "b")
    assert "".join(symbols) == "q1#b#$$#ta#$$"


def test_history_helpers() -> None:
    history = [
        PublicEvent("round", "1"),
        PublicEvent("prover", "q1"),
        PublicEvent("round", "2"),
        PublicEvent("prover", "q1"),
        PublicEvent("prover", "l"),
        PublicEvent("verifier", "r"),
    ]
    assert round_position(history) == (2, ("r",))
    assert round_number(history) == 2
    assert round_number([]) == 1


def test_honest_configurations_needs_a_halting_run() -> None:
    with pytest.raises(MachineError):
        honest_configurations(loops_forever(), "a", limit=20)


@pytest.mark.parametrize(
    "text,kind,block",
    [
        ("honest", ProverKind.HONEST_DTM, 2),
        ("skip-config:3", ProverKind.SKIP_CONFIG, 3),
        ("wrong-length", ProverKind.WRONG_LENGTH, 2),
        ("silent", ProverKind.SILENT, 2),
    ],
)
def test_parse_prover_spec(text, kind, block) -> None:
    ps = parse_prover_spec(text)
    assert ps.kind is kind
    assert ps.block == block


def test_parse_defect_digit_with_strategy() -> None:
    ps = parse_prover_spec("defect-digit:2:3:-1", ["e=r"])
    assert (ps.block, ps.position, ps.delta) == (2, 3, -1)
    assert ps.strategy == {"e": "r"}


@pytest.mark.parametrize("text", ["bogus", "defect-digit:1:2", "silent:1", "skip-config:x"])
def test_parse_prover_spec_errors(text) -> None:
    with pytest.raises(SpecError):
        parse_prover_spec(text)


def test_make_prover_picks_the_machine_flavour(dtm, atm) -> None:
    honest = parse_prover_spec("honest")
    assert type(make_prover(honest, dtm)) is HonestDTM
    assert type(make_prover(honest, atm)) is HonestATM
    assert isinstance(make_prover(parse_prover_spec("silent"), dtm), SilentProver)
