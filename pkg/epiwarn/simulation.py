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
Day-structured agent simulation.

Time advances in steps; a day has `L_D` daytime steps followed by
`L_N` nighttime steps. Locations `0..G^2-1` are grid cells and
`G^2..G^2+H-1` are homes. Dead agents have location `-1`.

Each step runs, in order:

1. viral loads of infected agents from their infection age,
2. effective locations,
3. transmission from a snapshot of the states at step start,
4. death check.

The last step of a day is followed by recovery and by aggregation
into a `DailyRecord`.

Typical usage:

```python
from epiwarn.config import SimConfig
from epiwarn.simulation import run_simulation

traj = run_simulation(SimConfig(seed=7).validate())
print(traj.outcome)
```
"""

from __future__ import annotations

import logging
from typing import Dict, Iterable, Optional

import numpy as np

from .constants import SPEC, State
from .curves import CurveSet
from .observables import DayEvents, aggregate_day, compute_outcome
from .population import PopulationState, init_population
from .result import DailyRecord, Trajectory

logger = logging.getLogger(__name__)

NOWHERE = -1
"""Location of dead agents."""


class StepState:
    """Dynamic state of all agents at a step.

    Attributes:
        population (PopulationState): Fixed agent attributes.
        load_table (np.ndarray): Load by category and infection age.
        past_peak (np.ndarray): Past-peak age bound by category.
        t (int): Global step index.
        state (np.ndarray): `(N,)` disease state codes.
        infected_at (np.ndarray): `(N,)` infection step, `-1` if never.
        location (np.ndarray): `(N,)` effective location.
        load (np.ndarray): `(N,)` viral load; 0 unless infected.
        quarantined_day (np.ndarray): `(N,)` quarantine day, `-1` if none.
        contacts (np.ndarray): `(N,)` co-location counts, when tracked.
    """

    def __init__(self, population: PopulationState, load_table: np.ndarray,
                 past_peak: np.ndarray, steps_per_day: int):
        n = len(population)
        self.population = population
        self.load_table = load_table
        self.past_peak = past_peak
        self.steps_per_day = steps_per_day
        self.t = 0
        self.state = np.full(n, State.S, dtype=np.int64)
        self.infected_at = np.full(n, -1, dtype=np.int64)
        self.location = np.full(n, NOWHERE, dtype=np.int64)
        self.load = np.zeros(n, dtype=np.float64)
        self.quarantined_day = np.full(n, -1, dtype=np.int64)
        self.contacts = np.zeros(n, dtype=np.int64)
        i0 = population.seed_agent
        self.state[i0] = State.I
        self.infected_at[i0] = 0

    @property
    def day(self) -> int:
        """Day of the current step."""
        return self.t // self.steps_per_day

    @property
    def tau(self) -> int:
        """Index of the current step within its day."""
        return self.t % self.steps_per_day

    @property
    def infected(self) -> np.ndarray:
        """Ids of infected agents."""
        return np.nonzero(self.state == State.I)[0]

    def copy(self) -> StepState:
        """Copy with private per-agent arrays."""
        other = object.__new__(StepState)
        other.__dict__.update(self.__dict__)
        for name in ('state', 'infected_at', 'location', 'load',
                     'quarantined_day', 'contacts'):
            setattr(other, name, getattr(self, name).copy())
        return other


def nominal_location(pop: PopulationState, i: int, day: int, tau: int,
                     config) -> int:
    """Scheduled location of agent `i`.

    At night this is the agent's home. During the day it is routine cell
    $r_{i,(o + \\tau) \\bmod K}$ with daily offset $o = (d \\cdot p_i)
    \\bmod K$.
    """
    if tau >= config.L_D:
        return config.n_cells + int(pop.home[i])
    offset = (day * int(pop.phase[i])) % config.K
    return int(pop.routine[i, (offset + tau) % config.K])


def effective_location(pop: PopulationState, i: int, day: int, tau: int,
                       state: int, load: float, config,
                       quarantined_day: Optional[int] = None) -> int:
    """Actual location of a living agent.

    Infected agents above the homebound threshold and agents quarantined
    on `day` stay home; everyone else follows `nominal_location`.
    """
    if (state == State.I and load > config.homebound_thr) \
            or quarantined_day == day:
        return config.n_cells + int(pop.home[i])
    return nominal_location(pop, i, day, tau, config)


def nominal_locations(pop: PopulationState, day: int, tau: int,
                      config) -> np.ndarray:
    """Vectorized `nominal_location` over all agents."""
    if tau >= config.L_D:
        return config.n_cells + pop.home
    index = (day * pop.phase + tau) % config.K
    return pop.routine[np.arange(len(pop)), index]


def update_loads(ss: StepState) -> None:
    """Set viral loads of infected agents from their infection age."""
    pop, inf = ss.population, ss.state == State.I
    ages = np.minimum(ss.t - ss.infected_at[inf], ss.load_table.shape[1] - 1)
    ss.load[:] = 0.0
    ss.load[inf] = ss.load_table[pop.immunity[inf], ages]


def update_locations(ss: StepState, config) -> None:
    """Set effective locations of all agents for the current step."""
    pop, day = ss.population, ss.day
    loc = nominal_locations(pop, day, ss.tau, config).copy()
    stay = ((ss.state == State.I) & (ss.load > config.homebound_thr)) \
        | (ss.quarantined_day == day)
    loc[stay] = config.n_cells + pop.home[stay]
    loc[ss.state == State.D] = NOWHERE
    ss.location = loc


def transmission_sites(config) -> np.ndarray:
    """Mask of locations where transmission is evaluated."""
    sites = np.zeros(config.n_locations, dtype=bool)
    sites[:config.n_cells] = True
    if config.home_transmission:
        sites[config.n_cells:] = True
    return sites


def count_contacts(ss: StepState, config) -> None:
    """Add this step's potential-transmission co-locations to `contacts`.

    A susceptible agent counts the infected agents at its location; an
    infected agent counts the susceptible ones.
    """
    sites = transmission_sites(config)
    sus = np.nonzero(ss.state == State.S)[0]
    inf = ss.infected
    sus, inf = sus[sites[ss.location[sus]]], inf[sites[ss.location[inf]]]
    if len(sus) == 0 or len(inf) == 0:
        return
    m = config.n_locations
    n_inf = np.bincount(ss.location[inf], minlength=m)
    n_sus = np.bincount(ss.location[sus], minlength=m)
    ss.contacts[sus] += n_inf[ss.location[sus]]
    ss.contacts[inf] += n_sus[ss.location[inf]]


def transmission_step(ss: StepState, config) -> np.ndarray:
    """Infect susceptible agents exposed above the threshold.

    Susceptible agent $j$ is infected iff some infected agent $i$ at the
    same eligible location has $v_i \\cdot s_j > \\theta_{tr}$. Since
    $s_j > 0$ this holds iff the largest load at the location exceeds
    it, so one maximum per location decides every agent there.
    Infections use the states at step start; newly infected agents do
    not transmit before the next step.

    Returns:
        Ids of newly infected agents, ascending.
    """
    pop, sites = ss.population, transmission_sites(config)
    inf = ss.infected
    inf = inf[sites[ss.location[inf]]]
    if len(inf) == 0:
        return inf
    peak = np.zeros(config.n_locations, dtype=np.float64)
    np.maximum.at(peak, ss.location[inf], ss.load[inf])
    sus = np.nonzero(ss.state == State.S)[0]
    where = ss.location[sus]
    exposure = peak[where] * pop.susceptibility[sus]
    new = sus[sites[where] & (exposure > config.theta_tr)]
    ss.state[new] = State.I
    ss.infected_at[new] = ss.t
    return new


def end_of_step_transitions(ss: StepState, config) -> np.ndarray:
    """Infected agents above the lethal load die.

    Returns:
        Ids of agents who died at this step.
    """
    dead = np.nonzero((ss.state == State.I)
                      & (ss.load > config.death_thr))[0]
    ss.state[dead] = State.D
    ss.location[dead] = NOWHERE
    ss.load[dead] = 0.0
    return dead


def end_of_day_transitions(ss: StepState, config) -> np.ndarray:
    """Recover infected agents whose load fell below the recovery level.

    Only agents past their curve peak recover; a fresh infection whose
    load has not risen yet stays infected.

    Returns:
        Ids of agents who recovered.
    """
    inf = ss.infected
    age = ss.t - ss.infected_at[inf]
    bound = ss.past_peak[ss.population.immunity[inf]]
    done = inf[(ss.load[inf] < config.recovery_thr) & (age > bound)]
    ss.state[done] = State.R
    ss.load[done] = 0.0
    return done


class Checkpoint:
    """Simulation state at the start of a day.

    Attributes:
        state (StepState): Agent state before the day's first step.
        records (List[DailyRecord]): Records of earlier days.
    """

    def __init__(self, state: StepState, records: Iterable[DailyRecord]):
        self.state = state
        self.records = list(records)

    @property
    def day(self) -> int:
        return self.state.day


class Simulation:
    """One simulation run, advanced day by day.

    Attributes:
        config (SimConfig): Simulator parameters.
        curves (CurveSet): Viral-load curves.
        population (PopulationState): Initialized agents.
        state (StepState): Current agent state.
        records (List[DailyRecord]): Records of finished days.
        checkpoints (Dict[int, Checkpoint]): Start-of-day snapshots.
        track_contacts_until (int): Count contacts through this day.
        done (bool): Horizon reached or epidemic extinct.
    """

    def __init__(self, config, curves: Optional[CurveSet] = None,
                 population: Optional[PopulationState] = None,
                 track_contacts_until: int = -1):
        self.config = config
        self.curves = curves or CurveSet.from_config(config)
        self.population = population or init_population(config)
        table = self.curves.table(config.T_max * config.L)
        past_peak = self.curves.past_peak(config.recovery_thr)
        self.state = StepState(self.population, table, past_peak, config.L)
        self.records = []
        self.checkpoints: Dict[int, Checkpoint] = {}
        self.track_contacts_until = track_contacts_until
        self.intervention: Optional[SPEC] = None
        self.done = False

    @property
    def day(self) -> int:
        """Next day to simulate."""
        return len(self.records)

    def quarantine(self, agent: int, day: int) -> Simulation:
        """Keep `agent` home for all steps of `day`.

        Raises:
            ValueError: if the agent or day is out of range, or the day
                has already been simulated.
        """
        if not (0 <= agent < self.config.N):
            raise ValueError(f'agent {agent} out of range [0, '
                             f'{self.config.N})')
        if not (self.day <= day < self.config.T_max):
            raise ValueError(f'day {day} out of range [{self.day}, '
                             f'{self.config.T_max})')
        self.state.quarantined_day[agent] = day
        self.intervention = (agent, day)
        return self

    def snapshot(self) -> Checkpoint:
        """Checkpoint of the current start-of-day state."""
        return Checkpoint(self.state.copy(), self.records)

    def restore(self, checkpoint: Checkpoint) -> Simulation:
        """Continue from a checkpoint; the checkpoint stays unchanged."""
        self.state = checkpoint.state.copy()
        self.records = list(checkpoint.records)
        self.done = False
        return self

    def step(self, events: DayEvents) -> None:
        """Run the current step."""
        ss, config = self.state, self.config
        update_loads(ss)
        update_locations(ss, config)
        if ss.day <= self.track_contacts_until:
            count_contacts(ss, config)
        events.new_inf += len(transmission_step(ss, config))
        events.new_dead += len(end_of_step_transitions(ss, config))

    def run_day(self) -> DailyRecord:
        """Simulate the next day and record it."""
        day, steps = self.day, self.config.L
        events = DayEvents(day)
        for tau in range(steps):
            self.state.t = day * steps + tau
            self.step(events)
        events.new_rec = len(end_of_day_transitions(self.state, self.config))
        record = aggregate_day(events, self.state, self.config)
        self.state.t = (day + 1) * steps
        self.records.append(record)
        if self.day >= self.config.T_max or \
                (self.config.early_stop and record.I == 0):
            self.done = True
        return record

    def run(self, checkpoint_days: Iterable[int] = ()) -> Trajectory:
        """Run to the end, keeping checkpoints at the given days."""
        keep = set(checkpoint_days)
        traj = Trajectory(self.config.N).on_start()
        while not self.done:
            if self.day in keep:
                self.checkpoints[self.day] = self.snapshot()
            self.run_day()
        traj.records = list(self.records)
        traj.intervention = self.intervention
        traj.outcome = compute_outcome(traj, self.config.rho_c)
        logger.debug(f'seed {self.config.seed}: {traj.outcome}')
        return traj.on_end()


def run_simulation(config, intervention: Optional[SPEC] = None,
                   curves: Optional[CurveSet] = None,
                   population: Optional[PopulationState] = None
                   ) -> Trajectory:
    """Simulate one run.

    Arguments:
        config: Valid `SimConfig`.
        intervention: Optional `(agent, day)` quarantine.
        curves: Prebuilt curves; built from `config` when omitted.
        population: Prebuilt population; drawn from `config.seed` when
            omitted.

    Raises:
        ValueError: if the intervention is out of range.

    Returns:
        Trajectory with outcome.
    """
    sim = Simulation(config, curves, population)
    if intervention is not None:
        sim.quarantine(*intervention)
    return sim.run()
