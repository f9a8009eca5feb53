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
Counterfactual single-agent quarantine.

An intervention `(a, d)` keeps agent `a` at home for every step of day
`d` and changes nothing else: the counterfactual run reuses the
baseline's population and resumes from the baseline's state at the
start of day `d`, so all earlier days are the baseline's records.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .config import InterventionParams
from .constants import SPEC, Criterion, OutcomeType, SearchError, Strategy
from .curves import CurveSet
from .population import PopulationState
from .result import Outcome, Serializable, Trajectory
from .simulation import Checkpoint, Simulation, run_simulation

logger = logging.getLogger(__name__)


class Baseline:
    """Baseline run with what counterfactuals need to replay it.

    Attributes:
        config (SimConfig): Simulator configuration.
        curves (CurveSet): Viral-load curves.
        population (PopulationState): Initialized agents.
        trajectory (Trajectory): Baseline trajectory.
        checkpoints (Dict[int, Checkpoint]): Start-of-day states.
        contacts (np.ndarray): Co-location counts per agent.
    """

    def __init__(self, config, curves: CurveSet,
                 population: PopulationState, trajectory: Trajectory,
                 checkpoints: Dict[int, Checkpoint], contacts: np.ndarray):
        self.config = config
        self.curves = curves
        self.population = population
        self.trajectory = trajectory
        self.checkpoints = checkpoints
        self.contacts = contacts

    @property
    def outcome(self) -> Outcome:
        return self.trajectory.outcome


def run_baseline(config, params: InterventionParams) -> Baseline:
    """Simulate a baseline, keeping checkpoints of candidate days and
    contact counts through the last candidate day."""
    sim = Simulation(config, track_contacts_until=params.day_max)
    trajectory = sim.run(range(params.day_min, params.day_max + 1))
    return Baseline(config, sim.curves, sim.population, trajectory,
                    sim.checkpoints, sim.state.contacts.copy())


def contact_ranking(contacts: np.ndarray) -> List[int]:
    """Agents with a positive contact count, most contacts first,
    then by agent id."""
    agents = np.nonzero(contacts > 0)[0]
    order = np.lexsort((agents, -contacts[agents]))
    return agents[order].tolist()


def enumerate_candidates(baseline: Baseline, strategy,
                         params: InterventionParams) -> List[SPEC]:
    """Candidate `(agent, day)` pairs.

    Exhaustive candidates are every agent on every day of
    `[day_min, day_max]`, by agent then day. Contact-ranked candidates
    are the top `k_agents` agents by contact count crossed with the same
    days, in rank then day order.

    Raises:
        SearchError: if no candidate exists.
    """
    config = baseline.config
    days = [d for d in range(params.day_min, params.day_max + 1)
            if d < config.T_max]
    if Strategy(strategy) == Strategy.EXHAUSTIVE:
        agents = list(range(config.N))
    else:
        agents = contact_ranking(baseline.contacts)[:params.k_agents]
    candidates = [(a, d) for a in agents for d in days]
    if not candidates:
        raise SearchError(f'no {Strategy(strategy).value} candidates on '
                          f'days {params.day_min}..{params.day_max}')
    return candidates


def run_counterfactual(config, spec: SPEC,
                       baseline: Optional[Baseline] = None) -> Trajectory:
    """Trajectory with agent `spec[0]` quarantined on day `spec[1]`.

    With a baseline, the run resumes from its checkpoint of that day;
    otherwise it starts from initialization.

    Raises:
        ValueError: if the intervention is out of range.
    """
    agent, day = spec
    if not (0 <= agent < config.N and 0 <= day < config.T_max):
        raise ValueError(f'invalid intervention {spec}')
    if baseline is None or day not in baseline.checkpoints:
        return run_simulation(config, (agent, day))
    sim = Simulation(config, baseline.curves, baseline.population)
    sim.restore(baseline.checkpoints[day]).quarantine(agent, day)
    return sim.run()


class InterventionReport(Serializable):
    """Comparison of a counterfactual with its baseline.

    Attributes:
        agent (int): Quarantined agent.
        day (int): Quarantine day.
        rho0 (float): Baseline attack rate.
        rho_u (float): Counterfactual attack rate.
        delta_rho (float): `rho0 - rho_u`.
        peak0 (int): Baseline peak infected.
        peak_u (int): Counterfactual peak infected.
        delta_peak (int): `peak0 - peak_u`.
        peak_day0 (int): Baseline peak day.
        peak_day_u (int): Counterfactual peak day.
        prevented (bool): Baseline major outbreak, counterfactual not.
        outcome_type (str): Qualitative outcome.
    """

    def __init__(self, agent: int = 0, day: int = 0, rho0: float = 0.0,
                 rho_u: float = 0.0, delta_rho: float = 0.0, peak0: int = 0,
                 peak_u: int = 0, delta_peak: int = 0, peak_day0: int = 0,
                 peak_day_u: int = 0, prevented: bool = False,
                 outcome_type: str = OutcomeType.NULL.value):
        self.agent = agent
        self.day = day
        self.rho0, self.rho_u, self.delta_rho = rho0, rho_u, delta_rho
        self.peak0, self.peak_u, self.delta_peak = peak0, peak_u, delta_peak
        self.peak_day0 = peak_day0
        self.peak_day_u = peak_day_u
        self.prevented = prevented
        self.outcome_type = outcome_type

    def __str__(self):
        return (f'agent {self.agent} on day {self.day}: rho '
                f'{self.rho0:.3f} -> {self.rho_u:.3f} • peak {self.peak0} '
                f'-> {self.peak_u} • {self.outcome_type}')

    @property
    def _attrs(self) -> List[str]:
        return ['agent', 'day', 'rho0', 'rho_u', 'delta_rho', 'peak0',
                'peak_u', 'delta_peak', 'peak_day0', 'peak_day_u',
                'prevented', 'outcome_type']

    @property
    def spec(self) -> SPEC:
        return self.agent, self.day

    @property
    def is_reduced(self) -> bool:
        """Not prevented, but attack rate or peak went down."""
        return not self.prevented and \
            (self.delta_rho > 0 or self.delta_peak > 0)

    @staticmethod
    def from_dict(**kwargs) -> InterventionReport:
        """Restore InterventionReport object."""
        return Serializable._load(InterventionReport(), **kwargs)


def classify(prevented: bool, delta_rho: float, delta_peak: int,
             peak_day0: int, peak_day_u: int) -> OutcomeType:
    """Qualitative type of an intervention outcome."""
    if prevented:
        return OutcomeType.PREVENTED
    if delta_peak > 0:
        return OutcomeType.REDUCED
    # a later peak outranks a smaller attack rate
    if peak_day_u > peak_day0:
        return OutcomeType.DELAYED
    if delta_rho > 0:
        return OutcomeType.REDUCED
    if delta_rho == 0 and delta_peak == 0:
        return OutcomeType.NULL
    return OutcomeType.WORSENED


def evaluate_intervention(base: Outcome, cf: Outcome, rho_c: float,
                          spec: SPEC = (0, 0)) -> InterventionReport:
    """Compare a counterfactual outcome with the baseline outcome.

    Arguments:
        base: Baseline outcome.
        cf: Counterfactual outcome of the same configuration.
        rho_c: Major outbreak threshold.
        spec: The `(agent, day)` intervention.

    Returns:
        Report; prevention requires $\\rho^0 \\geq \\rho_c$ and
        $\\rho^u < \\rho_c$.
    """
    delta_rho = base.attack_rate - cf.attack_rate
    delta_peak = base.peak_infected - cf.peak_infected
    prevented = base.attack_rate >= rho_c and cf.attack_rate < rho_c
    kind = classify(prevented, delta_rho, delta_peak, base.peak_day,
                    cf.peak_day)
    return InterventionReport(
        agent=spec[0], day=spec[1], rho0=base.attack_rate,
        rho_u=cf.attack_rate, delta_rho=delta_rho,
        peak0=base.peak_infected, peak_u=cf.peak_infected,
        delta_peak=delta_peak, peak_day0=base.peak_day,
        peak_day_u=cf.peak_day, prevented=prevented,
        outcome_type=kind.value)


class SearchResult(Serializable):
    """Ranked candidate reports of one baseline.

    Attributes:
        criterion (str): Ranking criterion.
        baseline (Outcome): Baseline outcome.
        reports (List[InterventionReport]): Reports, best first.
        best_trajectory (Trajectory): Counterfactual of the best
            candidate; not serialized.
    """

    def __init__(self, criterion: str = Criterion.ATTACK_RATE.value,
                 baseline: Optional[Outcome] = None,
                 reports: Optional[List[InterventionReport]] = None,
                 best_trajectory: Optional[Trajectory] = None):
        self.criterion = criterion
        self.baseline = baseline or Outcome()
        self.reports = reports or []
        self.best_trajectory = best_trajectory

    @property
    def _attrs(self) -> List[str]:
        return ['criterion']

    @property
    def _ser_attrs(self):
        return [('baseline', Outcome)]

    @property
    def _ser_list(self):
        return [('reports', InterventionReport)]

    @property
    def best(self) -> InterventionReport:
        return self.reports[0]

    def to_dict(self):
        return {**super().to_dict(), 'best': list(self.best.spec)}

    def counts(self) -> Dict[str, int]:
        """Reports per outcome type."""
        return {t.value: sum(r.outcome_type == t.value
                             for r in self.reports) for t in OutcomeType}

    @staticmethod
    def from_dict(**kwargs) -> SearchResult:
        """Restore SearchResult object."""
        return Serializable._load(SearchResult(), **kwargs)


def _evaluate_candidate(baseline: Baseline, spec: SPEC
                        ) -> Tuple[InterventionReport, Trajectory]:
    cf = run_counterfactual(baseline.config, spec, baseline)
    return evaluate_intervention(baseline.outcome, cf.outcome,
                                 baseline.config.rho_c, spec), cf


def rank_key(report: InterventionReport, criterion) -> tuple:
    """Sort key: largest reduction first, then earlier day, then lower
    agent id."""
    gain = report.delta_rho if Criterion(criterion) == \
        Criterion.ATTACK_RATE else report.delta_peak
    return -gain, report.day, report.agent


def search_best(config, candidates: Sequence[SPEC], criterion,
                baseline: Optional[Baseline] = None,
                n_jobs: int = 1) -> SearchResult:
    """Evaluate every candidate and rank them.

    Arguments:
        config: Simulator configuration of the baseline.
        candidates: `(agent, day)` pairs.
        criterion: `attack-rate` or `peak`.
        baseline: Baseline to replay; simulated when omitted.
        n_jobs: Parallel workers.

    Raises:
        SearchError: if there are no candidates.

    Returns:
        Ranked reports; the first is the best intervention.
    """
    if not candidates:
        raise SearchError('no candidates to search')
    criterion = Criterion(criterion)
    if baseline is None:
        days = sorted({d for _, d in candidates})
        baseline = run_baseline(config, InterventionParams(
            day_min=days[0], day_max=days[-1]))
    results = Parallel(n_jobs=n_jobs)(
        delayed(_evaluate_candidate)(baseline, c) for c in candidates)
    order = sorted(range(len(results)),
                   key=lambda i: rank_key(results[i][0], criterion))
    result = SearchResult(criterion.value, baseline.outcome,
                          [results[i][0] for i in order],
                          results[order[0]][1])
    logger.info(f'best of {len(candidates)}: {result.best}')
    return result


def select_cases(runs: Sequence, scores: Dict[int, float], rho_c: float,
                 max_cases: int) -> List[int]:
    """Baseline runs to search, by early-warning score.

    Runs are ranked by descending score, then run id; runs whose true
    attack rate is below `rho_c` are skipped.

    Arguments:
        runs: `RunRecord` objects with outcomes.
        scores: Early-warning probability per run id.
        rho_c: Major outbreak threshold.
        max_cases: Number of runs to return at most.

    Returns:
        Selected run ids.
    """
    ranked = sorted((r for r in runs if r.run_id in scores),
                    key=lambda r: (-scores[r.run_id], r.run_id))
    chosen = [r.run_id for r in ranked if r.rho >= rho_c][:max_cases]
    logger.info(f'selected {len(chosen)} outbreak baselines of '
                f'{len(ranked)} scored runs')
    return chosen
