import numpy as np
import pytest

from epiwarn.config import InterventionParams
from epiwarn.constants import Criterion, OutcomeType, SearchError, State
from epiwarn.dataset import RunRecord
from epiwarn.file_io import read_json
from epiwarn.intervention import (
    Baseline, InterventionReport, SearchResult, classify, contact_ranking,
    enumerate_candidates, evaluate_intervention, rank_key, run_baseline,
    run_counterfactual, search_best, select_cases)
from epiwarn.result import Outcome
from epiwarn.simulation import run_simulation

from .mocks.sim_mocks import one_cell_config, population, tiny_config


def contact_baseline(contacts, config=None):
    """Baseline holding only what candidate enumeration reads."""
    return Baseline(config or tiny_config(), None, None, None, {},
                    np.array(contacts))


def test_exhaustive_candidates():
    """Ten agents on days 0..4 give 50 candidates, by agent then day."""
    config = one_cell_config()
    params = InterventionParams(strategy='exhaustive', day_min=0, day_max=4)
    candidates = enumerate_candidates(
        run_baseline(config, params), 'exhaustive', params)
    assert len(candidates) == 50
    assert candidates[:6] == [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4),
                              (1, 0)]


def test_candidate_days_stop_at_horizon():
    params = InterventionParams(day_min=17, day_max=30)
    candidates = enumerate_candidates(
        contact_baseline([0, 2]), 'exhaustive', params)
    assert sorted({d for _, d in candidates}) == [17, 18, 19]


def test_contact_ranking_order():
    """Most contacts first, ties by agent id, zero contacts dropped."""
    assert contact_ranking(np.array([0, 3, 5, 3, 0, 1])) == [2, 1, 3, 5]


def test_contact_ranked_candidates():
    params = InterventionParams(k_agents=2, day_min=1, day_max=2)
    candidates = enumerate_candidates(
        contact_baseline([0, 3, 5, 3, 0, 1]), 'contact-ranked', params)
    assert candidates == [(2, 1), (2, 2), (1, 1), (1, 2)]


def test_no_contacts_no_candidates():
    with pytest.raises(SearchError):
        enumerate_candidates(contact_baseline([0, 0, 0]), 'contact-ranked',
                             InterventionParams())


def test_baseline_tracks_contacts():
    """Co-location counts are kept for every agent."""
    config = one_cell_config()
    baseline = run_baseline(config, InterventionParams(day_max=2))
    assert baseline.contacts.shape == (config.N,)
    assert baseline.trajectory == run_simulation(config)
    assert 0 in baseline.checkpoints


def test_prevented_example():
    """0.650 down to 0.002 prevents a major outbreak."""
    base = Outcome(n=500, attack_rate=0.650, peak_infected=120, peak_day=9)
    cf = Outcome(n=500, attack_rate=0.002, peak_infected=1, peak_day=0)
    report = evaluate_intervention(base, cf, 0.3, (7, 2))
    assert report.prevented
    assert report.delta_rho == pytest.approx(0.648)
    assert report.delta_peak == 119
    assert report.outcome_type == OutcomeType.PREVENTED.value
    assert report.spec == (7, 2)
    assert not report.is_reduced


def test_no_prevention_without_baseline_outbreak():
    base = Outcome(attack_rate=0.2, peak_infected=10, peak_day=4)
    cf = Outcome(attack_rate=0.1, peak_infected=5, peak_day=4)
    report = evaluate_intervention(base, cf, 0.3)
    assert not report.prevented
    assert report.outcome_type == OutcomeType.REDUCED.value
    assert report.is_reduced


@pytest.mark.parametrize('args,expected', [
    ((True, 0.5, 10, 5, 2), OutcomeType.PREVENTED),
    ((False, 0.0, 3, 5, 5), OutcomeType.REDUCED),
    ((False, -0.01, 0, 5, 8), OutcomeType.DELAYED),
    ((False, 0.02, 0, 5, 5), OutcomeType.REDUCED),
    ((False, 0.0, 0, 5, 5), OutcomeType.NULL),
    ((False, -0.02, -1, 5, 4), OutcomeType.WORSENED)])
def test_classify(args, expected):
    assert classify(*args) == expected


def test_later_peak_is_delayed_despite_smaller_attack_rate():
    """DELAYED takes precedence over an attack rate reduction alone."""
    assert classify(False, 0.086, 0, 223, 239) == OutcomeType.DELAYED
    assert classify(False, 0.086, 0, 239, 239) == OutcomeType.REDUCED


def test_rank_ties_prefer_earlier_day_then_agent():
    reports = [InterventionReport(agent=a, day=d, delta_rho=0.1)
               for a, d in ((5, 2), (3, 1), (4, 1))]
    ranked = sorted(reports, key=lambda r: rank_key(r, 'attack-rate'))
    assert [r.spec for r in ranked] == [(3, 1), (4, 1), (5, 2)]


def test_rank_by_peak():
    a = InterventionReport(agent=0, delta_rho=0.3, delta_peak=1)
    b = InterventionReport(agent=1, delta_rho=0.1, delta_peak=5)
    assert min((a, b), key=lambda r: rank_key(r, Criterion.PEAK)) is b
    assert min((a, b), key=lambda r: rank_key(r, 'attack-rate')) is a


def test_counterfactual_keeps_prefix():
    """A replay from checkpoint equals a fresh quarantined run."""
    config = tiny_config(seed=2)
    baseline = run_baseline(config, InterventionParams(day_min=1,
                                                       day_max=3))
    for spec in ((0, 1), (11, 3)):
        cf = run_counterfactual(config, spec, baseline)
        assert cf.prefix(spec[1]) == baseline.trajectory.prefix(spec[1])
        assert cf == run_simulation(config, spec)


def test_counterfactual_out_of_range():
    with pytest.raises(ValueError):
        run_counterfactual(tiny_config(), (40, 0))


def test_search_ranks_all_candidates():
    config = tiny_config(seed=2)
    candidates = [(a, d) for a in (0, 1, 2) for d in (1, 2)]
    result = search_best(config, candidates, 'attack-rate')
    assert len(result.reports) == 6
    keys = [rank_key(r, 'attack-rate') for r in result.reports]
    assert keys == sorted(keys)
    assert result.best_trajectory == run_simulation(config, result.best.spec)
    assert result.baseline == run_simulation(config).outcome
    assert sum(result.counts().values()) == 6
    assert result.to_dict()['best'] == list(result.best.spec)


def test_search_result_restore():
    config = one_cell_config()
    result = search_best(config, [(1, 0), (2, 1)], 'peak')
    restored = SearchResult.from_dict(**result.to_dict())
    assert restored.criterion == 'peak'
    assert [r.spec for r in restored.reports] == \
        [r.spec for r in result.reports]


def test_search_without_candidates():
    with pytest.raises(SearchError):
        search_best(tiny_config(), [], 'attack-rate')


def test_select_cases():
    """Highest scores first, below-threshold runs skipped."""
    runs = [RunRecord(run_id=i, outcome=Outcome(attack_rate=rho))
            for i, rho in enumerate((0.6, 0.1, 0.8, 0.5, 0.9))]
    scores = {0: 0.7, 1: 0.99, 2: 0.7, 3: 0.9}
    assert select_cases(runs, scores, 0.3, 10) == [3, 0, 2]
    assert select_cases(runs, scores, 0.3, 2) == [3, 0]


def test_quarantine_of_recovered_or_dead_agent_is_null():
    """Quarantining an agent that can neither infect nor be infected
    leaves the trajectory unchanged."""
    config = tiny_config(seed=2)
    baseline = run_baseline(config, InterventionParams(day_min=15,
                                                       day_max=15))
    agent = baseline.population.seed_agent
    # the first infection has resolved long before day 15
    state = baseline.checkpoints[15].state.state[agent]
    assert state in (State.R, State.D)
    cf = run_counterfactual(config, (agent, 15), baseline)
    assert cf == baseline.trajectory
    report = evaluate_intervention(baseline.outcome, cf.outcome,
                                   config.rho_c, (agent, 15))
    assert report.outcome_type == OutcomeType.NULL.value
    assert report.delta_rho == 0 and report.delta_peak == 0


def test_frozen_prevented_case():
    """Keeping the compromised seed home on day 0 stops the outbreak:
    it is home-bound from its eighth step on and dies on day 1."""
    case = read_json('tests/mocks/prevented_case.json')
    config = tiny_config(**case['sim'])
    pop = population(seed_agent=0, **case['population'])
    spec = tuple(case['intervention'])
    base = run_simulation(config, population=pop)
    cf = run_simulation(config, spec, population=pop)
    report = evaluate_intervention(base.outcome, cf.outcome, config.rho_c,
                                   spec)
    expected = case['expected']
    assert report.rho0 == pytest.approx(expected['rho0'])
    assert report.rho_u == pytest.approx(expected['rho_u'])
    assert report.outcome_type == expected['outcome_type']
    assert report.prevented


def test_rank_by_peak_of_seeded_search():
    """Peak ranking of a real search puts the largest peak reduction
    first."""
    config = tiny_config(seed=2)
    candidates = [(a, d) for a in range(6) for d in (0, 1)]
    result = search_best(config, candidates, 'peak')
    gains = [r.delta_peak for r in result.reports]
    assert gains == sorted(gains, reverse=True)
    assert result.best.delta_peak == max(gains)
    assert result.reports == sorted(
        result.reports, key=lambda r: rank_key(r, 'peak'))
    assert result.to_dict() == \
        search_best(config, candidates, 'peak').to_dict()
