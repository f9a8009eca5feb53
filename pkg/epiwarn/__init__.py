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
epiwarn: agent-based epidemic simulation, early outbreak warning and
counterfactual single-agent quarantine.
"""

__title__ = "epiwarn"
__author__ = "The epiwarn developers"
__license__ = "GPL-3.0-or-later"

__notice__ = (
    f"{__title__} Copyright (c) 2024 {__author__}. This program comes "
    f"with ABSOLUTELY NO WARRANTY; for details type `{__title__} --license W`."
    f" This is free software, and you are welcome to redistribute it under "
    f"certain conditions; type `{__title__} --license C` for details.")

__warranty__ = (
    f"{__title__} is distributed in the hope that it will be useful, but "
    f"WITHOUT ANY WARRANTY; without even the implied warranty of "
    f"MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the GNU "
    f"General Public License for more details "
    f"https://www.gnu.org/licenses/gpl-3.0.html.")

__conditions__ = (
    "Permissions of this strong copyleft license are conditioned on making "
    "available complete source code of licensed works and modifications, "
    "which include larger works using a licensed work, under the same "
    "license. Copyright and license notices must be preserved. Contributors "
    "provide an express grant of patent rights. See the GNU General Public "
    "License for more details https://www.gnu.org/licenses/gpl-3.0.html.")

# flake8: noqa: F401,E402
from epiwarn.version import __version__
from epiwarn.constants import *  # import all types
from epiwarn.config import PipelineConfig, SimConfig, SweepSpec, load_config
from epiwarn.curves import CurveSet, Pulse, TabulatedCurve
from epiwarn.population import PopulationState, init_population
from epiwarn.result import DailyRecord, Outcome, Trajectory
from epiwarn.simulation import Simulation, run_simulation
from epiwarn.dataset import Manifest, Window, generate_sweep, split_runs
from epiwarn.koopman import KoopmanModel
from epiwarn.forest import ForestModel
from epiwarn.earlywarn import evaluate_ew, train_ew
from epiwarn.intervention import run_counterfactual, search_best
