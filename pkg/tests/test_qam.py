from fractions import Fraction

import pytest

from qamlab.core.config import settings
from qamlab.core.errors import SpecError
from qamlab.engines.machines import digit_map, encode_config, encode_symbols, next_config
from qamlab.engines.provers import (
    DefectDigit,
    HonestATM,
    HonestDTM,
    PrematureAccept,
    SilentProver,
    SkipConfig,
    WrongLength,
    honest_configurations,
)
from qamlab.engines.qam import make_verifier_config, run_protocol, run_round, run_strong_round
from qamlab.models.protocol import Classification, ProtocolMode

from .conftest import DTM_BATTERY, accept_all, contains_a_atm, loops_forever


def _battery_inputs():
    for factory, members, nonmembers in DTM_BATTERY:
        for x in members:
            yield factory, x, True
        for x in nonmembers:
            yield factory, x, False


def _cheats(spec, member):
    provers = [DefectDigit(spec, block=2, position=2, delta=1), SkipConfig(spec, block=2)]
    if not member:
        provers.append(PrematureAccept(spec))
    return provers


@pytest.mark.parametrize("factory,x,member", list(_battery_inputs()))
def test_honest_prover_is_never_rejected(factory, x, member) -> None:
    spec = factory()
    vc = make_verifier_config(spec, x)
    outcome, results = run_protocol(spec, vc, HonestDTM(spec), x, rounds=3)
    for result in results:
        assert result.ledger.conserved()
        assert result.ledger.p_pending == 0
        if member:
            assert result.ledger.p_reject == 0
            assert result.ledger.p_accept > 0
        else:
            assert result.ledger.p_accept == 0

    outcome, _ = run_protocol(spec, vc, HonestDTM(spec), x)
    assert outcome.classification is Classification.EXACT
    assert outcome.overall_accept == (1 if member else 0)


@pytest.mark.parametrize("factory,x,member", list(_battery_inputs()))
def test_cheating_provers_are_rejected_with_ratio(factory, x, member) -> None:
    spec = factory()
    vc = make_verifier_config(spec, x)
    m = vc.base
    bound = Fraction(1, m * m + 1)
    for prover in _cheats(spec, member):
        outcome, (result,) = run_protocol(spec, vc, prover, x)
        ledger = result.ledger
        assert ledger.conserved()
        assert ledger.p_reject >= m * m * ledger.p_accept, type(prover).__name__
        if outcome.classification is not Classification.NEVER_HALTS:
            assert outcome.upper <= bound, type(prover).__name__


@pytest.mark.parametrize("factory,x,member", list(_battery_inputs()))
def test_register_checkpoints(factory, x, member) -> None:
    spec = factory()
    dm = digit_map(spec)
    vc = make_verifier_config(spec, x)
    s = vc.scale
    configs = honest_configurations(spec, x)
    c1, c2 = configs[0], configs[1]
    n1 = encode_config(next_config(spec, c1), dm)

    result = run_round(spec, vc, HonestDTM(spec), x)
    marks = {(cp.block, cp.marker): cp.register for cp in result.checkpoints}

    l1 = len(c1) + 2
    assert marks[(1, "second-dollar")] == [s**l1, s**l1 * n1, 0, 0]

    k = l1 + len(c2) + 1
    expected = [1, n1, encode_config(c2, dm), encode_config(next_config(spec, c2), dm)]
    assert marks[(2, "first-dollar")] == [s**k * v for v in expected]


def test_first_block_can_decide() -> None:
    spec = accept_all()
    vc = make_verifier_config(spec, "ab")
    outcome, (result,) = run_protocol(spec, vc, HonestDTM(spec), "ab")
    assert outcome.classification is Classification.EXACT
    assert outcome.overall_accept == 1
    assert [cp.marker for cp in result.checkpoints] == ["first-dollar"]


def test_silent_prover_never_halts(dtm) -> None:
    vc = make_verifier_config(dtm, "a")
    outcome, (result,) = run_protocol(dtm, vc, SilentProver(), "a")
    assert outcome.classification is Classification.NEVER_HALTS
    assert outcome.overall_accept is None
    assert result.ledger.p_pending > 0
    assert result.ledger.conserved()


def test_non_halting_machine_uses_the_fallback_horizon() -> None:
    spec = loops_forever()
    vc = make_verifier_config(spec, "a")
    assert vc.max_transcript == settings.FALLBACK_MAX_TRANSCRIPT
    outcome, (result,) = run_protocol(spec, vc, HonestDTM(spec, limit=30), "a")
    assert result.ledger.conserved()
    assert outcome.classification is Classification.NEVER_HALTS


def test_iterated_rounds_bracket_the_closed_form(dtm) -> None:
    vc = make_verifier_config(dtm, "ba")
    closed, _ = run_protocol(dtm, vc, HonestDTM(dtm), "ba")
    bounded, results = run_protocol(dtm, vc, HonestDTM(dtm), "ba", rounds=4)
    assert len(results) == 4
    assert bounded.classification is Classification.BOUNDS
    assert bounded.lower <= closed.overall_accept <= bounded.upper
    assert bounded.lower > 0


def test_trace_records_every_operator(dtm) -> None:
    vc = make_verifier_config(dtm, "a")
    result = run_round(dtm, vc, HonestDTM(dtm), "a", trace=True)
    # one operator per transcript symbol
    configs = honest_configurations(dtm, "a")
    assert len(result.trace) == sum(len(c) + 2 for c in configs)
    assert result.trace[0].operator.startswith("Interior")
    assert result.trace[-1].operator.startswith("Dollar2")


# Strong protocol on a normal-form ATM


@pytest.mark.parametrize("x", ["ab", "ba", "aa"])
def test_strong_honest_prover_accepts_members(atm, x) -> None:
    vc = make_verifier_config(atm, x)
    assert vc.mode is ProtocolMode.STRONG
    outcome, (result,) = run_protocol(atm, vc, HonestATM(atm), x)
    assert result.ledger.p_reject == 0
    assert result.ledger.conserved()
    assert outcome.overall_accept == 1


def test_strong_amplitude_ratio(atm) -> None:
    vc = make_verifier_config(atm, "bb")
    result = run_strong_round(atm, vc, HonestATM(atm, {"e": "l"}), "bb")
    assert result.ledger.conserved()

    for cp in result.checkpoints:
        assert cp.register[0] == 2 ** len(cp.path) * cp.register[4]

    by_coins = {record.coins: record for record in result.paths}
    assert set(by_coins) == {"ll", "lr", "rl", "rr"}
    for record in by_coins.values():
        assert record.exchanges == 2
        assert record.register[0] == 4 * record.register[4]
    assert by_coins["ll"].outcome == "accept"
    assert by_coins["lr"].outcome == "reject"
    assert by_coins["ll"].accept_mass * 16 == by_coins["lr"].reject_mass
    assert by_coins["rl"].accept_mass == by_coins["ll"].accept_mass


def test_strong_nonmember_is_rejected(atm) -> None:
    vc = make_verifier_config(atm, "bb")
    for strategy in ({"e": "l"}, {"e": "r"}):
        outcome, _ = run_protocol(atm, vc, HonestATM(atm, strategy), "bb")
        assert outcome.classification is Classification.EXACT
        assert outcome.overall_accept < 1


def test_strong_wrong_length_is_rejected(atm) -> None:
    vc = make_verifier_config(atm, "ab")
    outcome, (result,) = run_protocol(atm, vc, WrongLength(atm, block=2), "ab")
    assert result.ledger.p_accept == 0
    assert outcome.overall_accept == 0
    assert all(record.outcome == "defect" for record in result.paths)


def test_strong_round_requires_an_atm(dtm) -> None:
    vc = make_verifier_config(contains_a_atm(), "ab")
    with pytest.raises(SpecError):
        run_strong_round(dtm, vc, HonestDTM(dtm), "a")


def test_encoding_matches_digit_order(dtm) -> None:
    dm = digit_map(dtm)
    assert encode_symbols(["q1", "#"], dm) == dm["q1"] * dm.base + dm["#"]
