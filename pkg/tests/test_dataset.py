import json
import os

import numpy as np
import pytest

from epiwarn.config import SweepSpec
from epiwarn.constants import ConfigError, SearchError
from epiwarn.dataset import (Manifest, RunRecord, build_windows,
                             calibrate_threshold, extract_windows,
                             generate_sweep, load_trajectories,
                             probe_configs, regime_statistics, split_runs,
                             verify_manifest, windows_frame)
from epiwarn.file_io import read_json
from epiwarn.result import DailyRecord, Outcome, Trajectory

from .mocks.sim_mocks import tiny_config


def desk_spec(**changes):
    """Two values with two seeds each on the tiny simulator."""
    fields = dict(s_hi_values=[1.3015, 1.302], seeds_per_value=2, T_max=8,
                  master_seed=1, base_config=tiny_config())
    fields.update(changes)
    return SweepSpec(**fields).validate()


def run_with_days(days, run_id=0, rho=0.5):
    """Run record and a trajectory recorded for `days` days."""
    records = [DailyRecord(d, S=10 - d, I=d, new_inf=1, I_mob=d)
               for d in range(days)]
    outcome = Outcome(n=10, attack_rate=rho, label=int(rho >= 0.3))
    run = RunRecord(run_id=run_id, s_lo=1.3, s_hi=1.302,
                    recorded_days=days, outcome=outcome)
    return run, Trajectory(10, records, outcome)


def test_sweep_writes_every_run(tmp_path):
    """A sweep stores one trajectory per run and a manifest."""
    manifest = generate_sweep(desk_spec(), str(tmp_path))
    assert [r.run_id for r in manifest.runs] == [0, 1, 2, 3]
    assert [r.s_hi for r in manifest.runs] == [1.3015, 1.3015, 1.302, 1.302]
    for run in manifest.runs:
        assert os.path.isfile(os.path.join(tmp_path, run.trajectory_path))
    assert os.path.isfile(os.path.join(tmp_path, 'manifest.json'))
    assert manifest.regimes['n_runs'] == 4


def test_single_run_sweep(tmp_path):
    """One value with one seed is one run."""
    spec = desk_spec(s_hi_values=[1.302], seeds_per_value=1)
    assert len(generate_sweep(spec, str(tmp_path)).runs) == 1


def test_manifest_agrees_with_trajectories(tmp_path):
    """Outcomes recomputed from the stored files match the manifest."""
    generate_sweep(desk_spec(), str(tmp_path))
    manifest = Manifest.from_dict(
        **read_json(os.path.join(tmp_path, 'manifest.json')))
    trajectories = load_trajectories(manifest, str(tmp_path))
    assert verify_manifest(manifest, trajectories) == []
    assert manifest.sweep.base_config is manifest.sim


def test_sweep_is_reproducible(tmp_path):
    """The same master seed regenerates identical files."""
    a, b = str(tmp_path / 'a'), str(tmp_path / 'b')
    generate_sweep(desk_spec(), a)
    generate_sweep(desk_spec(), b)
    for name in ('manifest.json', os.path.join('runs', 'run_00003.csv')):
        with open(os.path.join(a, name)) as fa, \
                open(os.path.join(b, name)) as fb:
            assert fa.read() == fb.read()


def test_run_seeds_differ(tmp_path):
    """Every run of a sweep has its own seed."""
    manifest = generate_sweep(desk_spec(), str(tmp_path))
    assert len({r.seed for r in manifest.runs}) == 4
    run = manifest.run(2)
    assert manifest.run_config(run).seed == run.seed


def test_split_of_ten_runs():
    """Ten runs split 7 / 1 / 2."""
    parts = split_runs(list(range(10)), [0.7, 0.15, 0.15], 0)
    assert [len(parts[p]) for p in ('train', 'val', 'test')] == [7, 1, 2]


def test_split_of_full_sweep():
    """The full sweep splits 7140 / 1530 / 1530 without overlap."""
    parts = split_runs(list(range(10200)), [0.7, 0.15, 0.15], 0)
    assert [len(parts[p]) for p in ('train', 'val', 'test')] == \
           [7140, 1530, 1530]
    assert set(parts['train']).isdisjoint(parts['val'])
    assert set(parts['train']).isdisjoint(parts['test'])
    assert set(parts['val']).isdisjoint(parts['test'])
    assert sorted(parts['train'] + parts['val'] + parts['test']) == \
           list(range(10200))


def test_split_depends_only_on_seed():
    """The split is a pure function of the run ids and the seed."""
    ids = list(range(50))
    assert split_runs(ids, [0.7, 0.15, 0.15], 3) == \
           split_runs(list(reversed(ids)), [0.7, 0.15, 0.15], 3)
    assert split_runs(ids, [0.7, 0.15, 0.15], 3) != \
           split_runs(ids, [0.7, 0.15, 0.15], 4)


def test_split_needs_three_runs():
    """Fewer runs than partitions cannot be split."""
    with pytest.raises(ValueError):
        split_runs([0, 1], [0.7, 0.15, 0.15], 0)


def test_windows_of_long_run():
    """A run recorded past day 12 gives 9 windows of days 4..12."""
    run, traj = run_with_days(20)
    windows = extract_windows(run, traj, 5, 4, 12)
    assert [w.end_day for w in windows] == list(range(4, 13))
    assert windows[0].values.shape == (5, 9)
    assert windows[0].series('I').tolist() == [0, 1, 2, 3, 4]
    assert windows[-1].series('I').tolist() == [8, 9, 10, 11, 12]


def test_windows_of_short_runs():
    """Windows end only on recorded days."""
    run, traj = run_with_days(7)
    assert [w.end_day for w in extract_windows(run, traj, 5, 4, 12)] == \
           [4, 5, 6]
    run, traj = run_with_days(3)
    assert extract_windows(run, traj, 5, 4, 12) == []


def test_window_targets_are_padded():
    """Days ahead past the run end repeat the last day and are
    flagged."""
    run, traj = run_with_days(7)
    window = extract_windows(run, traj, 5, 4, 4, h=5)[0]
    assert window.padded.tolist() == [False, False, True, True, True]
    assert window.ahead[:, 1].tolist() == [5, 6, 6, 6, 6]
    assert window.next_values[:, 1].tolist() == [1, 2, 3, 4, 5]


def test_window_carries_run_metadata():
    """Windows keep label, attack rate and susceptibility bounds."""
    run, traj = run_with_days(10, run_id=4, rho=0.64)
    window = extract_windows(run, traj, 5, 4, 4)[0]
    assert (window.run_id, window.label, window.rho) == (4, 1, 0.64)
    assert (window.s_lo, window.s_hi) == (1.3, 1.302)


def test_window_range_must_fit_length():
    """Windows cannot start before day 0."""
    run, traj = run_with_days(10)
    with pytest.raises(ValueError):
        extract_windows(run, traj, 5, 3, 12)


def test_windows_table(tmp_path):
    """The windows table has metadata and k x 9 value columns."""
    manifest = generate_sweep(desk_spec(early_stop=False), str(tmp_path))
    trajectories = load_trajectories(manifest, str(tmp_path))
    windows = build_windows(manifest, trajectories, 3, 2, 5)
    assert len(windows) == 16
    frame = windows_frame(windows)
    assert len(frame) == len(windows)
    assert list(frame.columns[:6]) == ['run_id', 'end_day', 'label', 'rho',
                                       's_lo', 's_hi']
    assert len(frame.columns) == 6 + 27
    assert 'd2_I_home' in frame.columns


def test_regime_statistics():
    """Statistics split runs by label and count the gap."""
    runs = [run_with_days(3, i, rho)[0]
            for i, rho in enumerate([0.002, 0.02, 0.2, 0.6, 0.7])]
    stats = regime_statistics(runs)
    assert stats['contained']['runs'] == 3
    assert stats['major']['runs'] == 2
    assert stats['gap_fraction'] == pytest.approx(0.2)
    json.dumps(stats)


def test_probe_configs():
    """Probe runs have distinct seeds and cycle the upper bounds."""
    base = tiny_config()
    configs = probe_configs(base, 4, 7, [1.31, 1.32])
    assert len({c.seed for c in configs}) == 4
    assert [c.s_hi for c in configs] == [1.31, 1.32, 1.31, 1.32]
    assert all(c.early_stop for c in configs)
    later = probe_configs(base, 4, 7, [1.31, 1.32], offset=4)
    assert not {c.seed for c in configs} & {c.seed for c in later}


def fake_outcomes(gap_above=None):
    """Outcomes of 20 runs whose outbreak fraction falls linearly from
    1 at threshold 0 to 0 at threshold 100. Contained runs reach an
    attack rate of 0.2 at thresholds of at least `gap_above`."""
    def outcomes(theta, *args):
        frac = (100 - theta) / 100 if theta <= 100 else 0.0
        majors = round(frac * 20)
        small = 0.2 if gap_above is not None and theta >= gap_above \
            else 0.02
        return [Outcome(attack_rate=0.8, label=1)] * majors + \
            [Outcome(attack_rate=small, label=0)] * (20 - majors)
    return outcomes


def test_calibration_bisects_into_band(mocker):
    """Bisection halves the bracket until the fraction is in the
    band."""
    mocker.patch('epiwarn.dataset.calibration_outcomes',
                 side_effect=fake_outcomes())
    theta, table = calibrate_threshold(tiny_config(), 20, [0.3, 0.7],
                                       [0.0, 200.0], 20)
    assert theta == 50.0
    assert table['theta_tr'].tolist() == [0.0, 200.0, 100.0, 50.0]
    assert table['iteration'].tolist() == [0, 0, 1, 2]
    assert table['outbreaks'].tolist() == [20, 0, 0, 10]
    assert table['gap'].tolist() == [0.0] * 4


def test_calibration_avoids_gap_runs(mocker):
    """A threshold in the band with many gap runs is passed over for a
    lower one without them."""
    mocker.patch('epiwarn.dataset.calibration_outcomes',
                 side_effect=fake_outcomes(gap_above=40.0))
    theta, table = calibrate_threshold(tiny_config(), 20, [0.3, 0.7],
                                       [0.0, 200.0], 20)
    assert theta == 37.5
    assert table['theta_tr'].tolist() == \
        [0.0, 200.0, 100.0, 50.0, 25.0, 37.5]
    assert table['gap'].tolist()[3] == 0.5
    assert table['gap'].tolist()[-1] == 0.0


def test_calibration_falls_back_to_smallest_gap(mocker):
    """Without a gap-free threshold the in-band one is kept."""
    mocker.patch('epiwarn.dataset.calibration_outcomes',
                 side_effect=fake_outcomes(gap_above=0.0))
    theta, table = calibrate_threshold(tiny_config(), 20, [0.3, 0.7],
                                       [0.0, 200.0], 3)
    assert theta == 50.0
    assert len(table) == 5


def test_calibration_needs_twenty_runs():
    with pytest.raises(ConfigError):
        calibrate_threshold(tiny_config(), 19, [0.3, 0.7])
    with pytest.raises(ConfigError):
        SweepSpec(probe_seeds=10).validate()
    with pytest.raises(ConfigError):
        SweepSpec(max_gap=1.0).validate()


def test_calibrated_sweep_has_no_gap_runs(tmp_path):
    """A sweep at the calibrated threshold keeps attack rates out of
    the gap."""
    base = tiny_config(N=10, G=1, H=5, K=1)
    theta, table = calibrate_threshold(base, 20, [0.9, 1.0],
                                       [0.0, 1e6], 5)
    assert theta == 0.0
    assert table['gap'].tolist()[0] == 0.0
    spec = desk_spec(base_config=base.with_(theta_tr=theta))
    manifest = generate_sweep(spec, str(tmp_path))
    assert manifest.regimes['gap_fraction'] < 0.05
    assert manifest.regimes['major']['runs'] == 4


def test_calibration_accepts_bracket_end():
    """A bracket end inside the band is returned at once."""
    theta, table = calibrate_threshold(tiny_config(N=10, G=1, H=5, K=1),
                                       20, [0.9, 1.0], [0.0, 1e6], 5)
    assert theta == 0.0
    assert len(table) == 2


def test_calibration_without_crossing():
    """A bracket entirely above the band's thresholds is an error."""
    with pytest.raises(SearchError):
        calibrate_threshold(tiny_config(), 20, [0.3, 0.7], [1e5, 1e6], 5)


def test_padded_targets_are_counts():
    """Window targets are integer counts."""
    run, traj = run_with_days(8)
    window = extract_windows(run, traj, 5, 4, 4, h=2)[0]
    assert window.ahead.dtype == np.int64
