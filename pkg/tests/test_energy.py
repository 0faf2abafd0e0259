import pytest
from hypothesis import given
from hypothesis import strategies as st

from pedfsim.energy import (
    EnergyBand,
    EnergyError,
    EnergyParams,
    EnergyState,
    classify_band,
    consume,
    eligible_priorities,
    replenish,
)

levels = st.floats(0, 100, allow_nan=False)


@pytest.mark.parametrize(
    "level, band",
    [
        (27, EnergyBand.CASE_II),
        (76, EnergyBand.CASE_IV),
        (100, EnergyBand.CASE_IV),
        (0, EnergyBand.CASE_I),
        (25, EnergyBand.CASE_I),
        (25.0001, EnergyBand.CASE_II),
        (50, EnergyBand.CASE_II),
        (75, EnergyBand.CASE_III),
    ],
)
def test_classify_band(level, band):
    assert classify_band(level) is band


@pytest.mark.parametrize("level", [-0.1, 100.5, float("nan")])
def test_classify_out_of_range(level):
    with pytest.raises(EnergyError):
        classify_band(level)


def test_eligible_priorities_table():
    assert eligible_priorities(EnergyBand.CASE_I) == {1}
    assert eligible_priorities(EnergyBand.CASE_II) == {1, 2}
    assert eligible_priorities(EnergyBand.CASE_III) == {1, 2, 3}
    assert eligible_priorities(EnergyBand.CASE_IV) == {1, 2, 3, 4}


def test_band_labels():
    assert EnergyBand.CASE_III.label == "CaseIII"
    assert EnergyBand.from_label("CaseII") is EnergyBand.CASE_II


@given(levels, levels)
def test_band_and_eligibility_monotone(a, b):
    a, b = min(a, b), max(a, b)
    assert classify_band(a) <= classify_band(b)
    assert eligible_priorities(classify_band(a)) <= eligible_priorities(classify_band(b))


class TestConsume:
    def test_single_crossing(self):
        state, crossings = consume(EnergyState(80), 6)
        assert state.level == 74
        assert [c.threshold for c in crossings] == [75]

    def test_zero_amount(self):
        state, crossings = consume(EnergyState(80), 0)
        assert state.level == 80 and crossings == []

    def test_multi_crossing_to_death(self):
        state, crossings = consume(EnergyState(26), 30)
        assert state.level == 0 and not state.alive
        assert [c.threshold for c in crossings] == [25, 0]
        assert all(c.direction == "down" for c in crossings)

    def test_landing_exactly_on_threshold_counts(self):
        _, crossings = consume(EnergyState(76), 1)
        assert [c.threshold for c in crossings] == [75]

    def test_dead_node(self):
        with pytest.raises(EnergyError):
            consume(EnergyState(0), 1)

    def test_negative(self):
        with pytest.raises(EnergyError):
            consume(EnergyState(50), -1)


class TestReplenish:
    def test_crosses_25(self):
        state, crossings = replenish(EnergyState(24), 2, EnergyParams(replenish_rate=1))
        assert state.level == 26
        assert [c.threshold for c in crossings] == [25]
        assert crossings[0].direction == "up"

    def test_capped(self):
        state, crossings = replenish(EnergyState(100), 1000, EnergyParams(replenish_rate=3))
        assert state.level == 100 and crossings == []

    def test_two_crossings(self):
        state, crossings = replenish(EnergyState(40), 4, EnergyParams(replenish_rate=10))
        assert state.level == 80
        assert [c.threshold for c in crossings] == [50, 75]

    def test_revives_dead_node(self):
        state, _ = replenish(EnergyState(0), 0.1, EnergyParams(replenish_rate=1))
        assert state.alive

    def test_disabled(self):
        state, crossings = replenish(EnergyState(10), 50, EnergyParams())
        assert state.level == 10 and crossings == []

    def test_hysteresis_delays_upward_report(self):
        p = EnergyParams(replenish_rate=1, hysteresis=2)
        _, crossings = replenish(EnergyState(24), 2, p)
        assert crossings == []
        _, crossings = replenish(EnergyState(26), 2, p)
        assert [c.threshold for c in crossings] == [25]


def _band_steps(old, new):
    return abs(int(classify_band(old)) - int(classify_band(new)))


def test_crossing_completeness_sweep():
    """Every (old, new) pair on a 0.5 % grid: crossings of 75/50/25 match band changes."""
    grid = [i * 0.5 for i in range(201)]
    for old in grid:
        for new in grid:
            if new <= old:
                if old == 0:
                    continue
                _, crossings = consume(EnergyState(old), old - new)
                critical = [c for c in crossings if c.threshold > 0]
                assert len(critical) == _band_steps(old, new), (old, new)
                assert any(c.threshold == 0 for c in crossings) == (new == 0)
            else:
                _, crossings = replenish(EnergyState(old), 1, EnergyParams(replenish_rate=new - old))
                assert len(crossings) == _band_steps(old, new), (old, new)


@given(levels, st.lists(st.tuples(st.booleans(), st.floats(0, 60, allow_nan=False)), max_size=40))
def test_level_stays_in_range(start, ops):
    state = EnergyState(start)
    params = EnergyParams(replenish_rate=7.5)
    for is_consume, x in ops:
        if is_consume:
            if state.alive:
                state, _ = consume(state, x)
        else:
            state, _ = replenish(state, x, params)
        assert 0 <= state.level <= 100
        assert state.alive == (state.level > 0)


def test_params_reject_negative():
    with pytest.raises(EnergyError):
        EnergyParams(tx_cost=-1)
