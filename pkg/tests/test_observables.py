import numpy as np
import pytest

from epiwarn.constants import State
from epiwarn.observables import (DayEvents, aggregate_day, check_identities,
                                 compute_outcome)
from epiwarn.result import DailyRecord, Trajectory

from .mocks.sim_mocks import tiny_config


class FakeState:
    """End-of-day agent states and loads."""

    def __init__(self, state, load):
        self.state = np.array(state, dtype=np.int64)
        self.load = np.array(load, dtype=np.float64)


def trajectory(n, rows):
    """Trajectory from (S, I, R, D, new_inf) rows."""
    records = [DailyRecord(day=d, S=s, I=i, R=r, D=dd, new_inf=ni, I_mob=i)
               for d, (s, i, r, dd, ni) in enumerate(rows)]
    return Trajectory(n, records)


def test_aggregate_counts_and_loads():
    """Counts come from the states; load summaries from infected only."""
    config = tiny_config()
    fake = FakeState([State.S, State.I, State.I, State.R, State.D],
                     [0.0, 20.0, 60.0, 0.0, 0.0])
    events = DayEvents(4)
    events.new_inf, events.new_rec, events.new_dead = 1, 1, 1
    rec = aggregate_day(events, fake, config)
    assert (rec.day, rec.S, rec.I, rec.R, rec.D) == (4, 1, 2, 1, 1)
    assert (rec.new_inf, rec.new_rec, rec.new_dead) == (1, 1, 1)
    assert (rec.I_mob, rec.I_home) == (1, 1)
    assert rec.vl_mean == 40.0 and rec.vl_max == 60.0


def test_aggregate_without_infected():
    """Load summaries are 0 when nobody is infected."""
    fake = FakeState([State.S, State.R], [0.0, 0.0])
    rec = aggregate_day(DayEvents(9), fake, tiny_config())
    assert rec.I == 0
    assert rec.vl_mean == 0.0 and rec.vl_max == 0.0


def test_outcome_of_major_outbreak():
    """175 susceptible of 500 left is an attack rate of 0.65."""
    out = compute_outcome(trajectory(500, [(499, 1, 0, 0, 0),
                                           (175, 20, 300, 5, 324)]), 0.3)
    assert out.attack_rate == pytest.approx(0.65)
    assert out.label == 1
    assert (out.S_T, out.I_T, out.R_T, out.D_T) == (175, 20, 300, 5)
    assert out.cumulative_infections == 324
    assert out.mortality_fraction == pytest.approx(0.01)


def test_outcome_label_at_threshold():
    """An attack rate equal to the threshold is a major outbreak."""
    out = compute_outcome(trajectory(10, [(7, 3, 0, 0, 2)]), 0.3)
    assert out.attack_rate == 0.3
    assert out.label == 1


def test_outcome_without_spread():
    """A run that never spreads has attack rate 1/N and peak 1."""
    out = compute_outcome(trajectory(500, [(499, 1, 0, 0, 0),
                                           (499, 0, 1, 0, 0)]), 0.3)
    assert out.attack_rate == pytest.approx(0.002)
    assert out.label == 0
    assert out.peak_infected == 1 and out.peak_day == 0


def test_peak_ties_take_earliest_day():
    """The peak day is the first day reaching the peak."""
    out = compute_outcome(trajectory(20, [(18, 2, 0, 0, 1),
                                          (15, 5, 0, 0, 3),
                                          (12, 5, 3, 0, 3),
                                          (12, 1, 7, 0, 0)]), 0.3)
    assert out.peak_infected == 5 and out.peak_day == 1
    assert out.incidence_peak == 3


def test_outcome_of_empty_trajectory():
    """An empty trajectory has no outcome."""
    with pytest.raises(ValueError):
        compute_outcome(Trajectory(10), 0.3)


def test_identities_of_consistent_records():
    """Consistent records raise no violations."""
    records = [
        DailyRecord(0, S=8, I=2, new_inf=1, I_mob=2),
        DailyRecord(1, S=5, I=4, R=1, new_inf=3, new_rec=1, I_mob=3,
                    I_home=1),
        DailyRecord(2, S=5, I=2, R=1, D=2, new_dead=2, I_mob=2)]
    assert check_identities(records, 10) == []


def test_identities_find_violations():
    """A record that loses agents violates the identities."""
    records = [DailyRecord(0, S=8, I=1, new_inf=1, I_mob=1)]
    errors = check_identities(records, 10)
    assert any('S+I+R+D' in e for e in errors)
    assert any('I != I_prev' in e for e in errors)
