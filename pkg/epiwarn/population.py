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
Population initialization.

All random draws of a run happen here, from one `Pcg32` seeded by the
run seed, in this order: homes, routines, susceptibility, immunity,
phase, initial infected agent. Each block draws for agents `0..N-1`
before the next block starts, so the same seed always yields the same
population regardless of how the simulation later evolves.
"""

from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np

from .constants import ConfigError, Immunity
from .prng import Pcg32

logger = logging.getLogger(__name__)


class Agent:
    """Read-only view of one agent's fixed attributes.

    Attributes:
        id (int): Index in `[0, N)`.
        home (int): Home index $h_i$ in `[0, H)`.
        routine (List[int]): $K$ distinct grid cells.
        phase (int): Routine phase $p_i$ in `{1..K-1}`.
        susceptibility (float): $s_i$ in `[s_lo, s_hi]`.
        immunity (Immunity): Immunity category $m_i$.
    """

    def __init__(self, id: int, home: int, routine: List[int], phase: int,
                 susceptibility: float, immunity: Immunity):
        self.id = id
        self.home = home
        self.routine = routine
        self.phase = phase
        self.susceptibility = susceptibility
        self.immunity = immunity

    def __repr__(self):
        return (f'Agent({self.id}, home={self.home}, phase={self.phase}, '
                f's={self.susceptibility:.4f}, {self.immunity.label})')


class PopulationState:
    """Fixed attributes of all agents, as arrays indexed by agent id.

    Attributes:
        home (np.ndarray): `(N,)` home index.
        routine (np.ndarray): `(N, K)` routine cells.
        phase (np.ndarray): `(N,)` routine phase.
        susceptibility (np.ndarray): `(N,)` susceptibility.
        immunity (np.ndarray): `(N,)` immunity category code.
        seed_agent (int): Initially infected agent $i_0$.
    """

    def __init__(self, home: np.ndarray, routine: np.ndarray,
                 phase: np.ndarray, susceptibility: np.ndarray,
                 immunity: np.ndarray, seed_agent: int):
        self.home = home
        self.routine = routine
        self.phase = phase
        self.susceptibility = susceptibility
        self.immunity = immunity
        self.seed_agent = seed_agent

    def __len__(self):
        return len(self.home)

    def __eq__(self, other):
        return isinstance(other, PopulationState) and \
            self.seed_agent == other.seed_agent and \
            all(np.array_equal(getattr(self, a), getattr(other, a))
                for a in ('home', 'routine', 'phase', 'susceptibility',
                          'immunity'))

    def agent(self, i: int) -> Agent:
        """View of agent `i`."""
        return Agent(i, int(self.home[i]), self.routine[i].tolist(),
                     int(self.phase[i]), float(self.susceptibility[i]),
                     Immunity(int(self.immunity[i])))

    @property
    def category_counts(self) -> List[int]:
        """Agents per immunity category."""
        return np.bincount(self.immunity, minlength=len(Immunity)).tolist()


def init_population(config, rng: Optional[Pcg32] = None) -> PopulationState:
    """Draw the initial population of a run.

    Arguments:
        config: Valid `SimConfig`.
        rng: Generator to draw from; defaults to `Pcg32(config.seed)`.

    Raises:
        ConfigError: if routines cannot be drawn (`K > G^2`).

    Returns:
        Initialized population.
    """
    n, k = config.N, config.K
    if k > config.n_cells:
        raise ConfigError('sim.K', f'{k} distinct cells do not fit in '
                                   f'{config.n_cells} grid cells')
    rng = rng or Pcg32(config.seed)

    home = np.array([rng.randbelow(config.H) for _ in range(n)],
                    dtype=np.int64)
    routine = np.array([rng.sample_distinct(config.n_cells, k)
                        for _ in range(n)], dtype=np.int64).reshape(n, k)
    susceptibility = np.array(
        [rng.uniform(config.s_lo, config.s_hi) for _ in range(n)],
        dtype=np.float64)
    immunity = np.array(
        [rng.categorical(config.immunity_probs) for _ in range(n)],
        dtype=np.int64)
    if k > 1:
        phase = np.array([1 + rng.randbelow(k - 1) for _ in range(n)],
                         dtype=np.int64)
    else:
        phase = np.ones(n, dtype=np.int64)
    seed_agent = rng.randbelow(n)

    logger.debug(f'population of {n} agents, seed agent {seed_agent}')
    return PopulationState(home, routine, phase, susceptibility, immunity,
                           seed_agent)
