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

import json
import logging
import os
from typing import Any, Dict, Optional

import pandas as pd

from .constants import RECORD_COLUMNS, ArtifactError
from .observables import compute_outcome
from .result import DailyRecord, Trajectory
from .version import __version__

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.6f'
"""Float format of every CSV artifact."""

PROVENANCE = 'provenance.json'


def ensure_parent(file_name: str) -> str:
    """Create the directory of `file_name` if needed.

    Arguments:
        file_name: Path to a file that will be written.

    Returns:
        The same path.
    """
    dir_path, _ = os.path.split(file_name)
    if len(dir_path) > 0 and not os.path.exists(dir_path):
        os.makedirs(dir_path, exist_ok=True)
    return file_name


def write_json(file_name: str, content: Dict[str, Any]) -> None:
    """Write a JSON artifact.

    Expected behavior:

    - if path to output file does not exist it will be created
    - if output file exists it will be overwritten
    - keys are sorted so equal content gives identical bytes

    Arguments:
        file_name: Filename where to write.
        content: JSON serializable object.
    """
    with open(ensure_parent(file_name), "w") as outfile:
        json.dump(content, outfile, indent=4, sort_keys=True)
        outfile.write("\n")
    logger.info(f'saved {file_name}')


def read_json(file_name: str, hint: str = '') -> Dict[str, Any]:
    """Read a JSON artifact.

    Arguments:
        file_name: File to read.
        hint: What produces the file, for the error message.

    Raises:
        ArtifactError: if `file_name` does not exist.

    Returns:
        Parsed content.
    """
    if not os.path.isfile(file_name):
        raise ArtifactError(file_name, hint)
    with open(file_name) as file_object:
        return json.load(file_object)


def write_frame(file_name: str, frame: pd.DataFrame) -> None:
    """Write a CSV artifact with fixed float format and line endings."""
    frame.to_csv(ensure_parent(file_name), index=False,
                 float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f'saved {file_name}')


def read_frame(file_name: str, hint: str = '') -> pd.DataFrame:
    """Read a CSV artifact.

    Raises:
        ArtifactError: if `file_name` does not exist.
    """
    if not os.path.isfile(file_name):
        raise ArtifactError(file_name, hint)
    return pd.read_csv(file_name)


def trajectory_frame(trajectory: Trajectory) -> pd.DataFrame:
    """Trajectory records as a table, one row per day."""
    return pd.DataFrame([r.row for r in trajectory.records],
                        columns=list(RECORD_COLUMNS))


def save_trajectory(file_name: str, trajectory: Trajectory) -> None:
    """Save trajectory records as CSV."""
    write_frame(file_name, trajectory_frame(trajectory))


def load_trajectory(file_name: str, n_agents: int,
                    rho_c: Optional[float] = None) -> Trajectory:
    """Load trajectory records from CSV.

    This is the reverse of `save_trajectory`; viral-load summaries come
    back at the stored precision.

    Arguments:
        file_name: File to read.
        n_agents: Population size of the run.
        rho_c: When given, the outcome is recomputed from the records.

    Raises:
        ArtifactError: if the file does not exist.

    Returns:
        Loaded trajectory.
    """
    frame = read_frame(file_name, 'run `epiwarn sweep` first')
    records = [DailyRecord.from_dict(**{
        k: (float(v) if k.startswith('vl_') else int(v))
        for k, v in row.items()}) for row in frame.to_dict('records')]
    trajectory = Trajectory(n_agents, records)
    if rho_c is not None and records:
        trajectory.outcome = compute_outcome(trajectory, rho_c)
    return trajectory


def save_provenance(out_dir: str, command: str, config,
                    seeds: Optional[Dict[str, Any]] = None) -> None:
    """Write the provenance file of an output directory.

    Arguments:
        out_dir: Output directory.
        command: CLI command that produced the directory.
        config: `PipelineConfig` in effect.
        seeds: Seeds used by the command.
    """
    write_json(os.path.join(out_dir, PROVENANCE), {
        'tool': 'epiwarn', 'version': __version__, 'command': command,
        'config': config.to_dict(), 'seeds': seeds or {}})
