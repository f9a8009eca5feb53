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

from __future__ import annotations

import logging
import time
from abc import ABC, abstractmethod
from typing import Optional, Dict, List, Tuple, Any, Type

import numpy as np

from .constants import COUNT_COLUMNS, RECORD_COLUMNS, SPEC

logger = logging.getLogger(__name__)


class Timeable:
    """Represents an entity whose runtime can be measured.

    Attributes:
        start_time (int): recorded start time.
        end_time (int): recorded end time.
    """

    def __init__(self):
        self.start_time = 0
        self.end_time = 0

    @property
    def time_diff(self) -> int:
        """Time delta between start and end time."""
        return self.end_time - self.start_time

    @property
    def dur_s(self) -> float:
        """Duration in seconds."""
        return round(self.time_diff / 1e9, 1)

    @property
    def dur_ms(self) -> int:
        """Duration in milliseconds."""
        return int(round(self.time_diff / 1e6))

    def on_start(self) -> Timeable:
        """Called at start of timeable entity."""
        self.start_time = time.time_ns()
        return self

    def on_end(self) -> Timeable:
        """Called at end of timeable entity."""
        self.end_time = time.time_ns()
        return self


class Serializable(ABC):
    """General utilities for converting results and configurations to
    JSON-writable objects and vice versa."""

    @property
    def _attrs(self) -> List[str]:
        """List of simple attribute names."""
        return []

    @property
    def _ser_attrs(self) -> List[Tuple[str, Type[Serializable]]]:
        """Attributes of type Serializable."""
        return []

    @property
    def _ser_list(self) -> List[Tuple[str, Type[Serializable]]]:
        """List attributes where values are of Serializable type."""
        return []

    def to_dict(self) -> Dict[str, Any]:
        """Convert an object to a JSON-compatible dictionary."""
        simple = dict((k, getattr(self, k)) for k in self._attrs)
        objs = dict((k, getattr(self, k).to_dict())
                    for k, _ in self._ser_attrs
                    if getattr(self, k) is not None)
        lists = dict((k, [v.to_dict() for v in getattr(self, k)])
                     for k, _ in self._ser_list)
        return {**simple, **objs, **lists}

    @staticmethod
    @abstractmethod
    def from_dict(**kwargs) -> Serializable:
        """Restore object from a dictionary; reverses `to_dict()`."""
        pass

    @staticmethod
    def _load(obj: Serializable, **kwargs) -> Any:
        """Initializes a Serializable object from kwargs.

        Arguments:
            obj: Initialized object.
            **kwargs: Object data.

        Returns:
            Loaded object.
        """
        for key in obj._attrs:
            Serializable._try_set(obj, key, **kwargs)
        for attr, objT in obj._ser_attrs:
            values = Serializable._try_get(attr, **kwargs)
            if values is not None:
                setattr(obj, attr, objT.from_dict(**values))
        for attr, objT in obj._ser_list:
            values = Serializable._try_get(attr, **kwargs) or []
            setattr(obj, attr, [objT.from_dict(**v) for v in values])
        return obj

    @staticmethod
    def _try_set(target: object, attr: str, *keys: str, **kwargs) -> None:
        """Try set target.attr from kwargs matching keys."""
        keys_ = (attr,) if not keys else keys
        ob = Serializable._try_get(*keys_, **kwargs)
        if ob is not None:
            setattr(target, attr, ob)

    @staticmethod
    def _try_get(*keys: str, **kwargs) -> Any:
        """Try to get a kwargs value that matches keys."""
        ob = kwargs
        for key in keys:
            ob = ob[key] if (ob and key in ob) else None
        return ob


class DailyRecord(Serializable):
    """Aggregate observables $Y_d$ of one simulated day.

    Attributes:
        day (int): Day index, 0-based.
        S (int): Susceptible agents at day end.
        I (int): Infected agents at day end.
        R (int): Recovered agents at day end.
        D (int): Dead agents at day end.
        new_inf (int): Infections whose infection step falls in the day.
        new_rec (int): Recoveries at the day's end.
        new_dead (int): Deaths during the day.
        I_mob (int): Infected agents at or below the homebound threshold.
        I_home (int): Infected agents above the homebound threshold.
        vl_mean (float): Mean viral load of infected agents (0 if none).
        vl_max (float): Max viral load of infected agents (0 if none).
    """

    def __init__(self, day: int = 0, S: int = 0, I: int = 0,  # noqa: E741
                 R: int = 0, D: int = 0, new_inf: int = 0,
                 new_rec: int = 0, new_dead: int = 0, I_mob: int = 0,
                 I_home: int = 0, vl_mean: float = 0.0,
                 vl_max: float = 0.0):
        self.day = day
        self.S, self.I, self.R, self.D = S, I, R, D
        self.new_inf = new_inf
        self.new_rec = new_rec
        self.new_dead = new_dead
        self.I_mob = I_mob
        self.I_home = I_home
        self.vl_mean = vl_mean
        self.vl_max = vl_max

    def __eq__(self, other):
        return isinstance(other, DailyRecord) and self.row == other.row

    def __repr__(self):
        return f'DailyRecord({self.row})'

    @property
    def _attrs(self) -> List[str]:
        return list(RECORD_COLUMNS)

    @property
    def counts(self) -> List[int]:
        """The nine count observables."""
        return [getattr(self, c) for c in COUNT_COLUMNS]

    @property
    def row(self) -> tuple:
        """All fields, in CSV column order."""
        return tuple(getattr(self, c) for c in RECORD_COLUMNS)

    @property
    def total(self) -> int:
        """S + I + R + D."""
        return self.S + self.I + self.R + self.D

    @staticmethod
    def from_dict(**kwargs) -> DailyRecord:
        """Restore DailyRecord object."""
        return Serializable._load(DailyRecord(), **kwargs)


class Outcome(Serializable):
    """Final outcome of a simulation run.

    Attributes:
        n (int): Population size.
        attack_rate (float): $\\rho = (N - S_T) / N$.
        label (int): 1 iff $\\rho \\geq \\rho_c$.
        peak_infected (int): $P = \\max_d I_d$.
        peak_day (int): Earliest day attaining the peak.
        S_T, I_T, R_T, D_T (int): Final counts.
        incidence_peak (int): $\\max_d \\Delta I_d$.
        cumulative_infections (int): $\\sum_d \\Delta I_d$.
        final_susceptible_fraction (float): $S_T / N$.
        mortality_fraction (float): $D_T / N$.
    """

    def __init__(self, n: int = 0, attack_rate: float = 0.0, label: int = 0,
                 peak_infected: int = 0, peak_day: int = 0, S_T: int = 0,
                 I_T: int = 0, R_T: int = 0, D_T: int = 0,
                 incidence_peak: int = 0, cumulative_infections: int = 0,
                 final_susceptible_fraction: float = 0.0,
                 mortality_fraction: float = 0.0):
        self.n = n
        self.attack_rate = attack_rate
        self.label = label
        self.peak_infected = peak_infected
        self.peak_day = peak_day
        self.S_T, self.I_T, self.R_T, self.D_T = S_T, I_T, R_T, D_T
        self.incidence_peak = incidence_peak
        self.cumulative_infections = cumulative_infections
        self.final_susceptible_fraction = final_susceptible_fraction
        self.mortality_fraction = mortality_fraction

    def __eq__(self, other):
        return isinstance(other, Outcome) and \
            self.to_dict() == other.to_dict()

    def __str__(self):
        kind = 'major outbreak' if self.label else 'contained'
        return (f'rho: {self.attack_rate:.3f} ({kind}) • peak: '
                f'{self.peak_infected} on day {self.peak_day} • '
                f'deaths: {self.D_T}')

    @property
    def _attrs(self) -> List[str]:
        return ('n,attack_rate,label,peak_infected,peak_day,S_T,I_T,R_T,'
                'D_T,incidence_peak,cumulative_infections,'
                'final_susceptible_fraction,mortality_fraction').split(',')

    @staticmethod
    def from_dict(**kwargs) -> Outcome:
        """Restore Outcome object."""
        return Serializable._load(Outcome(), **kwargs)


class Trajectory(Timeable, Serializable):
    """Sequence of daily records of one run, plus its outcome.

    Attributes:
        n_agents (int): Population size $N$.
        records (List[DailyRecord]): One record per simulated day.
        outcome (Optional[Outcome]): Final outcome, once computed.
        intervention (Optional[SPEC]): Quarantine (agent, day), if any.
    """

    def __init__(self, n_agents: int = 0,
                 records: Optional[List[DailyRecord]] = None,
                 outcome: Optional[Outcome] = None,
                 intervention: Optional[SPEC] = None):
        super().__init__()
        self.n_agents = n_agents
        self.records: List[DailyRecord] = records or []
        self.outcome: Optional[Outcome] = outcome
        self.intervention: Optional[SPEC] = \
            tuple(intervention) if intervention is not None else None

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return isinstance(other, Trajectory) and \
            self.n_agents == other.n_agents and \
            self.records == other.records

    @property
    def _attrs(self) -> List[str]:
        return ['n_agents', 'intervention']

    @property
    def _ser_attrs(self) -> List[Tuple[str, Type[Serializable]]]:
        return [('outcome', Outcome)]

    @property
    def _ser_list(self) -> List[Tuple[str, Type[Serializable]]]:
        return [('records', DailyRecord)]

    @property
    def recorded_days(self) -> int:
        """Number of recorded days."""
        return len(self.records)

    @property
    def last_day(self) -> int:
        """Index of the last recorded day, -1 when empty."""
        return self.records[-1].day if self.records else -1

    def counts(self) -> np.ndarray:
        """Count observables as a `(days, 9)` integer array."""
        return np.array([r.counts for r in self.records], dtype=np.int64) \
            .reshape(len(self.records), len(COUNT_COLUMNS))

    def series(self, name: str) -> List[float]:
        """One column of the trajectory, by CSV header name."""
        return [getattr(r, name) for r in self.records]

    def prefix(self, days: int) -> List[DailyRecord]:
        """Records of days `0..days-1`."""
        return self.records[:days]

    @staticmethod
    def from_dict(**kwargs) -> Trajectory:
        """Restore Trajectory object."""
        traj = Serializable._load(Trajectory(), **kwargs)
        if traj.intervention is not None:
            traj.intervention = tuple(traj.intervention)
        return traj
