# -----------------------------------------------------------------------------
# Copyright (c) 2024 The epiwarn developers.
#
# This file is part of epiwarn.
#
# epiwarn is free software: you can redistribute it and/or modify it under the
# terms of the GNU General Public License as published by the Free Software
# Foundation, either version 3 of the License, or (at your option) any later
# version.
#
# epiwarn is distributed in the hope that it will be useful, but WITHOUT ANY
# WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS FOR
# A PARTICULAR PURPOSE. See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License along with
# epiwarn. If not, see <https://www.gnu.org/licenses/>.
# -----------------------------------------------------------------------------

"""
Daily observables and final outcomes.

The simulator reports each day through `aggregate_day`; finished
trajectories are summarized by `compute_outcome`. Both are pure
functions of their inputs.
"""

from __future__ import annotations

import logging
from typing import List

import numpy as np

from .constants import State
from .result import DailyRecord, Outcome, Trajectory

logger = logging.getLogger(__name__)


class DayEvents:
    """Event counters of one day.

    Attributes:
        day (int): Day index.
        new_inf (int): Infections during the day (not the seed agent).
        new_rec (int): Recoveries at the end of the day.
        new_dead (int): Deaths during the day.
    """

    def __init__(self, day: int = 0):
        self.day = day
        self.new_inf = 0
        self.new_rec = 0
        self.new_dead = 0

    def __repr__(self):
        return (f'DayEvents(day={self.day}, +I={self.new_inf}, '
                f'+R={self.new_rec}, +D={self.new_dead})')


def aggregate_day(events: DayEvents, step_state, config) -> DailyRecord:
    """Build the record of a day from its events and end-of-day state.

    Arguments:
        events: Counters of the day.
        step_state: `StepState` after end-of-day transitions.
        config: `SimConfig`.

    Returns:
        Daily record; viral-load summaries are 0 when nobody is infected.
    """
    z = step_state.state
    counts = np.bincount(z, minlength=len(State))
    loads = step_state.load[z == State.I]
    i_home = int(np.count_nonzero(loads > config.homebound_thr))
    return DailyRecord(
        day=events.day,
        S=int(counts[State.S]), I=int(counts[State.I]),
        R=int(counts[State.R]), D=int(counts[State.D]),
        new_inf=events.new_inf, new_rec=events.new_rec,
        new_dead=events.new_dead,
        I_mob=int(len(loads)) - i_home, I_home=i_home,
        vl_mean=float(loads.mean()) if len(loads) else 0.0,
        vl_max=float(loads.max()) if len(loads) else 0.0)


def compute_outcome(trajectory: Trajectory, rho_c: float) -> Outcome:
    """Final outcome of a trajectory.

    Arguments:
        trajectory: At least one recorded day.
        rho_c: Major outbreak threshold; the label uses $\\rho \\geq
            \\rho_c$.

    Raises:
        ValueError: if the trajectory is empty.

    Returns:
        Outcome; peak ties resolve to the earliest day.
    """
    if not trajectory.records:
        raise ValueError('cannot compute outcome of an empty trajectory')
    n, last = trajectory.n_agents, trajectory.records[-1]
    infected = np.array(trajectory.series('I'))
    incidence = np.array(trajectory.series('new_inf'))
    peak_at = int(np.argmax(infected))
    rho = (n - last.S) / n
    return Outcome(
        n=n, attack_rate=rho, label=int(rho >= rho_c),
        peak_infected=int(infected[peak_at]),
        peak_day=trajectory.records[peak_at].day,
        S_T=last.S, I_T=last.I, R_T=last.R, D_T=last.D,
        incidence_peak=int(incidence.max()),
        cumulative_infections=int(incidence.sum()),
        final_susceptible_fraction=last.S / n,
        mortality_fraction=last.D / n)


def check_identities(records: List[DailyRecord], n: int) -> List[str]:
    """Check count identities of consecutive records.

    Day 0 is checked against the initial state (one infected agent).

    Arguments:
        records: Records in day order.
        n: Population size.

    Returns:
        Description of every violated identity; empty if all hold.
    """
    errors = []
    prev = DailyRecord(day=-1, S=n - 1, I=1)
    for rec in records:
        d = rec.day
        if rec.total != n:
            errors.append(f'day {d}: S+I+R+D = {rec.total} != {n}')
        if rec.S != prev.S - rec.new_inf:
            errors.append(f'day {d}: S != S_prev - new_inf')
        if rec.I != prev.I + rec.new_inf - rec.new_rec - rec.new_dead:
            errors.append(f'day {d}: I != I_prev + new_inf - new_rec '
                          f'- new_dead')
        if rec.R != prev.R + rec.new_rec:
            errors.append(f'day {d}: R != R_prev + new_rec')
        if rec.D != prev.D + rec.new_dead:
            errors.append(f'day {d}: D != D_prev + new_dead')
        if rec.I_mob + rec.I_home != rec.I:
            errors.append(f'day {d}: I_mob + I_home != I')
        prev = rec
    return errors
