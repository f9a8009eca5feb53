import json
import os

import pytest

from epiwarn.config import PipelineConfig
from epiwarn.constants import ArtifactError
from epiwarn.file_io import (ensure_parent, load_trajectory, read_frame,
                             read_json, save_provenance, save_trajectory,
                             write_json)
from epiwarn.simulation import run_simulation

from .mocks.sim_mocks import tiny_config


# noinspection PyUnresolvedReferences
def test_write_json_creates_directory(mocker):
    """Method generates directory when it does not exist then saves."""
    mocker.patch('os.path.exists', return_value=False)
    mocker.patch('os.makedirs')
    mocker.patch('builtins.open')
    mocker.patch('json.dump')

    write_json('fake_path/deep/path/output.json', {'a': 1})

    os.makedirs.assert_called_once_with('fake_path/deep/path',
                                        exist_ok=True)
    json.dump.assert_called_once()


# noinspection PyUnresolvedReferences
def test_no_directory_for_bare_filename(mocker):
    mocker.patch('os.makedirs')
    assert ensure_parent('output.csv') == 'output.csv'
    os.makedirs.assert_not_called()


def test_json_bytes_are_stable(tmp_path):
    """Keys are sorted, so insertion order does not matter."""
    a, b = tmp_path / 'a.json', tmp_path / 'b.json'
    write_json(str(a), {'x': 1, 'b': [1, 2]})
    write_json(str(b), {'b': [1, 2], 'x': 1})
    assert a.read_bytes() == b.read_bytes()
    assert read_json(str(a)) == {'b': [1, 2], 'x': 1}


def test_missing_artifacts(tmp_path):
    """Missing inputs raise an error naming the file."""
    missing = str(tmp_path / 'nothing.json')
    with pytest.raises(ArtifactError) as err:
        read_json(missing, 'run `epiwarn sweep` first')
    assert err.value.path == missing
    assert 'epiwarn sweep' in str(err.value)
    with pytest.raises(FileNotFoundError):
        read_frame(str(tmp_path / 'nothing.csv'))


def test_trajectory_csv(tmp_path):
    """Saved trajectories load back with the same counts and outcome."""
    config = tiny_config(seed=5)
    traj = run_simulation(config)
    file_name = str(tmp_path / 'runs' / 'trajectory.csv')
    save_trajectory(file_name, traj)

    loaded = load_trajectory(file_name, config.N, config.rho_c)
    assert (loaded.counts() == traj.counts()).all()
    assert loaded.outcome.attack_rate == traj.outcome.attack_rate
    assert loaded.outcome.peak_day == traj.outcome.peak_day
    with open(file_name) as fp:
        assert fp.readline().startswith('day,S,I,')


def test_provenance(tmp_path):
    save_provenance(str(tmp_path), 'simulate', PipelineConfig(), {'seed': 4})
    content = read_json(str(tmp_path / 'provenance.json'))
    assert content['tool'] == 'epiwarn'
    assert content['command'] == 'simulate'
    assert content['seeds'] == {'seed': 4}
    assert content['config']['sim']['N'] == 500
