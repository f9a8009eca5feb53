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
Command line interface of the epiwarn pipeline.

If epiwarn is installed through pip, this is the entry point of

```
epiwarn <command> [options]
```

Commands, in pipeline order:

| command         | reads                    | writes                         |
|-----------------|--------------------------|--------------------------------|
| `simulate`      | config                   | trajectory CSV, outcome JSON   |
| `calibrate`     | config                   | probe table, calibrated config |
| `sweep`         | config                   | manifest, trajectories, windows|
| `train-koopman` | sweep                    | Koopman model and report       |
| `train-ew`      | sweep, Koopman model     | forest model                   |
| `eval`          | sweep, both models       | metric reports                 |
| `intervene`     | sweep, both models       | case directories               |
| `report`        | case directory           | SVG chart                      |

Every output directory receives a `provenance.json`. The process exits
with 0 on success and with a category code on failure (see
`ExitCode`). Logging defaults to level DEBUG; `--info` and `--silent`
reduce it.
"""

import argparse
import logging
import os
import shutil
import sys
import textwrap
from argparse import RawTextHelpFormatter
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from . import __version__, __title__ as epiwarn
from . import __notice__, __warranty__, __conditions__
from .chart import counterfactual_chart
from .config import PipelineConfig, load_config
from .constants import EpiwarnError, ExitCode
from .dataset import (Manifest, build_windows, calibrate_threshold,
                      generate_sweep, load_trajectories, probe_configs,
                      probe_fraction, split_runs, windows_frame)
from .curves import CurveSet
from .earlywarn import evaluate_ew, train_ew, window_features
from .file_io import (PROVENANCE, read_frame, read_json, save_provenance,
                      save_trajectory, write_frame, write_json)
from .forest import ForestModel
from .intervention import (enumerate_candidates, run_baseline, search_best,
                           select_cases)
from .koopman import (KoopmanModel, evaluate_koopman, export_latents,
                      last_windows, train)
from .simulation import run_simulation

logger = logging.getLogger(epiwarn)

COMMANDS = ('simulate', 'sweep', 'calibrate', 'train-koopman', 'train-ew',
            'eval', 'intervene', 'report')


def main(argv: Optional[List[str]] = None) -> None:
    """Epidemic early warning and counterfactual intervention pipeline."""
    sys.exit(int(dispatch(argv)))


def dispatch(argv: Optional[List[str]] = None) -> ExitCode:
    """Parse arguments and run one command.

    Returns:
        Process exit code.
    """
    parser = argparse.ArgumentParser(
        prog=epiwarn, description=main.__doc__ + '\n\n' + __notice__,
        formatter_class=RawTextHelpFormatter)
    args = __parse_args(parser, argv)

    if args.license:
        width = shutil.get_terminal_size((50, 20)).columns - 5
        text = __conditions__ if args.license == 'C' else __warranty__
        print(textwrap.fill(text, width))
        return ExitCode.OK

    if not args.command:
        parser.print_help()
        return ExitCode.USAGE

    level = 0 if args.silent else 30 if args.info else 40
    __setup_logger(logging.FATAL - level, args.logfile, args.no_time)

    try:
        cfg = load_config(args.config, args.overrides)
        if args.out and args.command not in ('simulate', 'report'):
            cfg.paths.root = args.out
        HANDLERS[args.command](cfg, args)
    except EpiwarnError as err:
        logger.error(str(err))
        return err.exit_code
    except ValueError as err:
        logger.error(str(err))
        return ExitCode.FAILURE
    except OSError as err:
        logger.error(f'I/O failure: {err}')
        return ExitCode.FAILURE
    return ExitCode.OK


def cmd_simulate(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Run one simulation."""
    sim = cfg.sim.with_(seed=args.seed) if args.seed is not None \
        else cfg.sim
    out = args.out or os.path.join(cfg.paths.root, 'simulate')
    quarantine = tuple(args.quarantine) if args.quarantine else None
    traj = run_simulation(sim, quarantine)
    save_trajectory(os.path.join(out, 'trajectory.csv'), traj)
    write_json(os.path.join(out, 'outcome.json'), traj.outcome.to_dict())
    cfg.sim = sim
    save_provenance(out, 'simulate', cfg, {'seed': sim.seed})
    logger.info(str(traj.outcome))


def cmd_calibrate(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Find a transmission threshold in the target outbreak band."""
    sweep = cfg.sweep_spec()
    base = cfg.sim.with_(s_lo=sweep.s_lo, T_max=sweep.T_max)
    theta, table = calibrate_threshold(
        base, sweep.probe_seeds, sweep.band, sweep.bracket, sweep.max_iter,
        sweep.master_seed, sweep.s_hi_values, sweep.n_jobs, sweep.max_gap)
    out = os.path.join(cfg.paths.root, 'calibrate')
    write_frame(os.path.join(out, 'probes.csv'), table)
    chosen = table[table['theta_tr'] == theta].iloc[-1]
    result = {'theta_tr': theta, 'band': list(sweep.band),
              'probe_seeds': sweep.probe_seeds,
              'fraction': float(chosen['fraction']),
              'gap_fraction': float(chosen['gap'])}
    if args.holdout:
        configs = probe_configs(base, args.holdout, sweep.master_seed,
                                sweep.s_hi_values, offset=sweep.probe_seeds)
        result['holdout_runs'] = args.holdout
        result['holdout_fraction'] = probe_fraction(
            theta, configs, CurveSet.from_config(base), sweep.n_jobs)
    write_json(os.path.join(out, 'calibration.json'), result)
    cfg.sim.theta_tr = theta
    write_json(os.path.join(out, 'config.json'), cfg.to_dict())
    save_provenance(out, 'calibrate', cfg,
                    {'master_seed': sweep.master_seed})
    logger.info(f'calibrated theta_tr = {theta}')


def cmd_sweep(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Generate the sweep and its windows table."""
    out = cfg.paths.dir('sweep')
    manifest = generate_sweep(cfg.sweep_spec(), out)
    trajectories = load_trajectories(manifest, out)
    windows = build_windows(manifest, trajectories, cfg.koopman.k,
                            cfg.earlywarn.end_day_min,
                            cfg.earlywarn.end_day_max)
    write_frame(cfg.paths.windows, windows_frame(windows))
    save_provenance(out, 'sweep', cfg,
                    {'master_seed': cfg.sweep.master_seed})
    logger.info(f'{len(manifest.runs)} runs, {len(windows)} windows, '
                f'regimes {manifest.regimes}')


def load_sweep(cfg: PipelineConfig) -> Tuple[Manifest, Dict]:
    """Manifest and trajectories of the configured sweep."""
    manifest = Manifest.from_dict(**read_json(
        cfg.paths.manifest, 'run `epiwarn sweep` first'))
    return manifest, load_trajectories(manifest, cfg.paths.dir('sweep'))


def split_windows(cfg: PipelineConfig, manifest: Manifest,
                  trajectories: Dict) -> Dict[str, list]:
    """Windows of the train, validation and test runs."""
    splits = split_runs([r.run_id for r in manifest.runs],
                        manifest.sweep.split_ratios,
                        manifest.sweep.split_seed)
    return {name: build_windows(
        manifest, trajectories, cfg.koopman.k, cfg.earlywarn.end_day_min,
        cfg.earlywarn.end_day_max, cfg.koopman.h, ids)
        for name, ids in splits.items()}


def load_koopman(cfg: PipelineConfig,
                 required: bool = True) -> Optional[KoopmanModel]:
    """Trained Koopman model, when the configuration uses one."""
    if not required:
        return None
    return KoopmanModel.from_dict(**read_json(
        cfg.paths.koopman_model, 'run `epiwarn train-koopman` first'))


def load_forest(cfg: PipelineConfig) -> ForestModel:
    return ForestModel.from_dict(**read_json(
        cfg.paths.forest_model, 'run `epiwarn train-ew` first'))


def cmd_train_koopman(cfg: PipelineConfig,
                      args: argparse.Namespace) -> None:
    """Train the Koopman model on the training runs."""
    manifest, trajectories = load_sweep(cfg)
    sets = split_windows(cfg, manifest, trajectories)
    model, report = train(sets['train'], sets['val'], cfg.koopman,
                          manifest.sim.N)
    out = cfg.paths.dir('models')
    write_json(cfg.paths.koopman_model, model.to_dict())
    write_json(os.path.join(out, 'koopman_report.json'), report.to_dict())
    write_frame(os.path.join(out, 'koopman_epochs.csv'), report.frame())
    write_frame(os.path.join(out, 'latents.csv'),
                export_latents(model, sets['test'] or sets['val']))
    save_provenance(out, 'train-koopman', cfg,
                    {'koopman': cfg.koopman.seed,
                     'split': manifest.sweep.split_seed})


def cmd_train_ew(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Train the early-warning forest on the training runs."""
    manifest, trajectories = load_sweep(cfg)
    sets = split_windows(cfg, manifest, trajectories)
    model = load_koopman(cfg, cfg.earlywarn.use_koopman)
    forest = train_ew(sets['train'], model, cfg.earlywarn)
    write_json(cfg.paths.forest_model, forest.to_dict())
    save_provenance(cfg.paths.dir('models'), 'train-ew', cfg,
                    {'forest': cfg.earlywarn.seed,
                     'split': manifest.sweep.split_seed})


def cmd_eval(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Evaluate both models on the test runs."""
    manifest, trajectories = load_sweep(cfg)
    test = split_windows(cfg, manifest, trajectories)['test']
    if not test:
        raise EpiwarnError('no test windows to evaluate')
    forest = load_forest(cfg)
    model = load_koopman(cfg, cfg.earlywarn.use_koopman)
    report = evaluate_ew(forest, model, test, cfg.earlywarn)
    out = cfg.paths.dir('reports')
    metrics = {'earlywarn': report.to_dict()}
    if model is not None:
        metrics['koopman'] = {
            k: v.to_dict() for k, v in evaluate_koopman(
                model, test, cfg.earlywarn.threshold).items()}
    write_json(os.path.join(out, 'metrics.json'), metrics)
    write_frame(os.path.join(out, 'end_day.csv'), report.end_day_frame())
    write_frame(os.path.join(out, 'family_importance.csv'),
                report.family_frame())
    write_frame(os.path.join(out, 'feature_importance.csv'), pd.DataFrame(
        list(report.feature_importance.items()),
        columns=['feature', 'importance']))
    save_provenance(out, 'eval', cfg, {'split': manifest.sweep.split_seed})


def cmd_intervene(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Search quarantines of outbreak baselines picked by early warning."""
    manifest, trajectories = load_sweep(cfg)
    forest = load_forest(cfg)
    model = load_koopman(cfg, cfg.earlywarn.use_koopman)
    windows = last_windows(build_windows(
        manifest, trajectories, cfg.koopman.k, cfg.earlywarn.end_day_min,
        cfg.earlywarn.end_day_max))
    if not windows:
        raise EpiwarnError('no early windows to score')
    x, _ = window_features(windows, model, cfg.earlywarn)
    scores = dict(zip([w.run_id for w in windows],
                      np.atleast_1d(forest.predict_proba(x)).tolist()))
    params = cfg.intervention
    chosen = select_cases(manifest.runs, scores, manifest.sim.rho_c,
                          params.max_baselines)
    out = cfg.paths.dir('cases')
    summary = []
    for n, run_id in enumerate(chosen):
        config = manifest.run_config(manifest.run(run_id))
        baseline = run_baseline(config, params)
        candidates = enumerate_candidates(baseline, params.strategy, params)
        result = search_best(config, candidates, params.criterion,
                             baseline, params.n_jobs)
        case = os.path.join(out, f'case_{n + 1:02d}')
        write_json(os.path.join(case, 'report.json'), {
            'run_id': run_id, 'score': scores[run_id], **result.to_dict()})
        save_trajectory(os.path.join(case, 'baseline.csv'),
                        baseline.trajectory)
        save_trajectory(os.path.join(case, 'counterfactual.csv'),
                        result.best_trajectory)
        save_provenance(case, 'intervene', cfg, {'run': config.seed})
        summary.append({'case': n + 1, 'run_id': run_id,
                        'score': scores[run_id], **result.best.to_dict(),
                        'types': result.counts()})
    write_json(os.path.join(out, 'summary.json'), {'cases': summary})
    save_provenance(out, 'intervene', cfg,
                    {'runs': [manifest.run(i).seed for i in chosen]})


def cmd_report(cfg: PipelineConfig, args: argparse.Namespace) -> None:
    """Render the chart of a case directory.

    A directory without a provenance file gets one; a case directory
    keeps the provenance of the search that produced it.
    """
    if not args.case:
        raise EpiwarnError('report needs --case DIR')
    report = read_json(os.path.join(args.case, 'report.json'),
                       'run `epiwarn intervene` first')
    base = read_frame(os.path.join(args.case, 'baseline.csv'))
    cf = read_frame(os.path.join(args.case, 'counterfactual.csv'))
    agent, day = report['best']
    svg = counterfactual_chart(
        base['I'].tolist(), cf['I'].tolist(), day,
        f'quarantine of agent {agent} on day {day}')
    file_out = args.out or os.path.join(args.case, 'chart.svg')
    with open(file_out, 'w') as fp:
        fp.write(svg)
    logger.info(f'saved {file_out}')
    out_dir = os.path.dirname(os.path.abspath(file_out))
    if not os.path.exists(os.path.join(out_dir, PROVENANCE)):
        save_provenance(out_dir, 'report', cfg)


HANDLERS = {'simulate': cmd_simulate, 'sweep': cmd_sweep,
            'calibrate': cmd_calibrate, 'train-koopman': cmd_train_koopman,
            'train-ew': cmd_train_ew, 'eval': cmd_eval,
            'intervene': cmd_intervene, 'report': cmd_report}


def __parse_args(
        parser: argparse.ArgumentParser, args: Optional[List] = None
) -> argparse.Namespace:
    """Setup available program arguments."""
    parser.add_argument(
        'command',
        help="one of: " + ", ".join(COMMANDS),
        choices=COMMANDS,
        metavar="command",
        nargs="?"
    )
    parser.add_argument(
        '-v', "--version",
        action="version",
        version="%(prog)s " + __version__,
    )
    parser.add_argument(
        "--license",
        action='store',
        dest='license',
        type=str.upper,
        metavar="opt",
        choices=['W', 'C'],
        help="show warranty (W) or conditions (C) and exit"
    )

    config = parser.add_argument_group('Configuration options')
    config.add_argument(
        '--config', '-c',
        action='store',
        metavar="FILE",
        help="pipeline config JSON [default: $EPIWARN_CONFIG]"
    )
    config.add_argument(
        '--set',
        action='append',
        dest='overrides',
        default=[],
        metavar="KEY=VALUE",
        help="override a config field, e.g. sim.theta_tr=45"
    )
    config.add_argument(
        '--out', '-o',
        action="store",
        metavar="DIR",
        help="output directory",
    )

    command = parser.add_argument_group('Command options')
    command.add_argument(
        '--seed',
        action='store',
        type=int,
        metavar="N",
        help="simulation seed (simulate)"
    )
    command.add_argument(
        '--quarantine',
        action='store',
        type=int,
        nargs=2,
        metavar=("AGENT", "DAY"),
        help="quarantine one agent for one day (simulate)"
    )
    command.add_argument(
        '--holdout',
        action='store',
        type=int,
        default=0,
        metavar="N",
        help="check calibration on N fresh runs (calibrate)"
    )
    command.add_argument(
        '--case',
        action='store',
        metavar="DIR",
        help="case directory to chart (report)"
    )

    log_group = parser.add_argument_group('Terminal log options')
    log_group.add_argument(
        "--logfile",
        action="store",
        metavar="FILE",
        help="write console output to a file",
    )
    log_group.add_argument(
        "--no_time",
        action='store_true',
        help="omits timestamps from log output"
    )
    log_group.add_argument(
        '--info',
        action='store_true',
        help="set logging level to info"
    )
    log_group.add_argument(
        "--silent",
        action='store_true',
        help="disable all terminal output"
    )

    return parser.parse_args(args)


def __setup_logger(
        level: int = logging.ERROR, log_filename: Optional[str] = None,
        hide_time: bool = False
) -> None:
    """Create a configured instance of logger.

    Arguments:
        level: Describe the severity level of the logs to handle.
        log_filename: Write logging info to a file.
        hide_time: Leave timestamps out of log lines.
    """
    fmt = "%(levelname)s (%(module)s): %(message)s" if hide_time else \
        "[%(asctime)s] %(levelname)s (%(module)s): %(message)s"
    formatter = logging.Formatter(fmt, datefmt="%H:%M:%S")

    root = logging.getLogger(epiwarn)
    root.setLevel(level)
    root.handlers.clear()

    stream_handler = logging.StreamHandler()
    stream_handler.setFormatter(formatter)
    root.addHandler(stream_handler)

    if log_filename is not None:
        file_handler = logging.FileHandler(log_filename)
        file_handler.setFormatter(formatter)
        root.addHandler(file_handler)


if __name__ == '__main__':
    main()
