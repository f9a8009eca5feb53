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
from enum import IntEnum, Enum
from typing import Tuple, List, Dict, Optional

LOCATION = int
"""Location index: grid cells `0..G²-1`, then homes `G²..G²+H-1`."""

SPEC = Tuple[int, int]
"""Intervention as an (agent, day) pair."""

COUNTS = List[int]
"""Nine daily count observables, in `COUNT_COLUMNS` order."""

SERIES = Dict[str, List[float]]
"""Named observable series."""

OPT_FLOAT = Optional[float]
"""Metric value, `None` when undefined (e.g. AUC of a one-class set)."""

COUNT_COLUMNS: Tuple[str, ...] = (
    'S', 'I', 'R', 'D', 'new_inf', 'new_rec', 'new_dead', 'I_mob', 'I_home')
"""The nine count observables fed to the Koopman model, in order."""

RECORD_COLUMNS: Tuple[str, ...] = \
    ('day',) + COUNT_COLUMNS + ('vl_mean', 'vl_max')
"""Trajectory CSV header."""


class State(IntEnum):
    """Disease state of an agent."""
    S = 0
    I = 1  # noqa: E741
    R = 2
    D = 3


class Immunity(IntEnum):
    """Immunity category; order matches `immunity_probs`."""
    STRONG = 0
    MEDIUM = 1
    LOW = 2
    COMPROMISED = 3

    @property
    def label(self) -> str:
        """Lowercase category name, as used in config files."""
        return self.name.lower()


class Strategy(str, Enum):
    """Intervention candidate enumeration strategy."""
    EXHAUSTIVE = 'exhaustive'
    CONTACT_RANKED = 'contact-ranked'


class Criterion(str, Enum):
    """Best-intervention selection criterion."""
    ATTACK_RATE = 'attack-rate'
    PEAK = 'peak'


class OutcomeType(str, Enum):
    """Qualitative effect of a counterfactual intervention."""
    PREVENTED = 'prevented'
    REDUCED = 'reduced'
    DELAYED = 'delayed'
    NULL = 'null'
    WORSENED = 'worsened'


class ExitCode(IntEnum):
    """Process exit status by failure category."""
    OK = 0
    FAILURE = 1
    USAGE = 2
    CONFIG = 3
    MISSING_ARTIFACT = 4
    DIVERGENCE = 5
    SEARCH = 6


class EpiwarnError(Exception):
    """Base class of all package errors."""
    exit_code = ExitCode.FAILURE


class ConfigError(EpiwarnError, ValueError):
    """Invalid configuration value.

    Attributes:
        field (str): Dotted name of the offending field.
    """
    exit_code = ExitCode.CONFIG

    def __init__(self, field: str, message: str):
        super().__init__(f'{field}: {message}')
        self.field = field


class ArtifactError(EpiwarnError, FileNotFoundError):
    """A required upstream artifact does not exist.

    Attributes:
        path (str): The missing file.
    """
    exit_code = ExitCode.MISSING_ARTIFACT

    def __init__(self, path: str, hint: str = ''):
        msg = f'missing artifact: {path}' + (f' ({hint})' if hint else '')
        super().__init__(msg)
        self.path = path


class DivergenceError(EpiwarnError, ArithmeticError):
    """Training produced a non-finite loss.

    Attributes:
        report: Training report up to and including the failing epoch.
    """
    exit_code = ExitCode.DIVERGENCE

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SearchError(EpiwarnError):
    """A search had nothing to search (no candidates, no bracket)."""
    exit_code = ExitCode.SEARCH
