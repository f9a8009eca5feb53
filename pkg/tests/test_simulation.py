import math

import numpy as np
import pytest

from epiwarn.config import SimConfig
from epiwarn.constants import State
from epiwarn.curves import CurveSet
from epiwarn.observables import check_identities
from epiwarn.population import init_population
from epiwarn.simulation import (NOWHERE, Simulation, StepState,
                                effective_location, end_of_day_transitions,
                                end_of_step_transitions, nominal_location,
                                run_simulation, transmission_step,
                                update_locations)

from .mocks.sim_mocks import one_cell_config, population, tiny_config


def step_state(pop, config, t=0):
    """Step state at global step `t` with the config's curves."""
    curves = CurveSet.from_config(config)
    ss = StepState(pop, curves.table(200), curves.past_peak(1.0), config.L)
    ss.t = t
    return ss


def three_agents(config, susceptibility=(1.0, 1.3, 1.3)):
    """Agents 0 and 1 share cell 0, agent 2 is in cell 1."""
    pop = population([0, 0, 1], [[0], [0], [1]], list(susceptibility))
    ss = step_state(pop, config)
    ss.location = np.array([0, 0, 1])
    return ss


def test_nominal_location_daytime_index():
    """Daytime location follows the phase-shifted routine index."""
    config = SimConfig().validate()
    pop = population([4], [list(range(100, 110))], [1.0], phase=[3])
    assert nominal_location(pop, 0, day=2, tau=2, config=config) == 108


def test_nominal_location_at_night():
    """At night every agent is at its home."""
    config = SimConfig().validate()
    pop = population([4], [list(range(100, 110))], [1.0], phase=[3])
    assert nominal_location(pop, 0, day=2, tau=config.L_D,
                            config=config) == config.n_cells + 4


def test_effective_location_homebound():
    """Infected agents above the homebound load stay home."""
    config = SimConfig().validate()
    pop = population([4], [list(range(100, 110))], [1.0], phase=[3])
    home = config.n_cells + 4
    assert effective_location(pop, 0, 2, 2, State.I, 60.0, config) == home
    assert effective_location(pop, 0, 2, 2, State.I, 30.0, config) == 108


def test_daily_locations_cover_routine():
    """With K = L_D each day visits every routine cell exactly once."""
    config = SimConfig().validate()
    assert config.K == config.L_D == 10
    pop = init_population(config)
    for i in range(50):
        for day in range(5):
            visited = [nominal_location(pop, i, day, tau, config)
                       for tau in range(config.L_D)]
            assert sorted(visited) == sorted(pop.routine[i].tolist())


def test_effective_location_quarantine():
    """A quarantined agent is home for every step of its day only."""
    config = SimConfig().validate()
    pop = population([4], [list(range(100, 110))], [1.0], phase=[3])
    home = config.n_cells + 4
    for tau in range(config.L):
        assert effective_location(pop, 0, 2, tau, State.S, 0.0, config,
                                  quarantined_day=2) == home
    assert effective_location(pop, 0, 3, 0, State.S, 0.0, config,
                              quarantined_day=2) != home


def test_transmission_above_threshold():
    """Exposure 30 x 1.3 = 39 exceeds 38 and infects."""
    config = tiny_config(G=2, H=2, K=1, theta_tr=38.0)
    ss = three_agents(config)
    ss.load[0] = 30.0
    assert transmission_step(ss, config).tolist() == [1]
    assert ss.state[1] == State.I and ss.infected_at[1] == ss.t
    assert ss.state[2] == State.S


def test_transmission_needs_strict_excess():
    """Exposure exactly at the threshold does not infect."""
    config = tiny_config(G=2, H=2, K=1, theta_tr=50.0)
    ss = three_agents(config, susceptibility=(1.0, 1.25, 1.25))
    ss.load[0] = 40.0
    assert len(transmission_step(ss, config)) == 0
    assert ss.state[1] == State.S


def test_transmission_takes_strongest_source():
    """Among sources of loads 20 and 40 the stronger one infects."""
    config = tiny_config(G=2, H=2, K=1, theta_tr=50.0)
    pop = population([0, 0, 0], [[0], [0], [0]], [1.0, 1.0, 1.3])
    ss = step_state(pop, config)
    ss.state[1] = State.I
    ss.location = np.array([0, 0, 0])
    ss.load[:2] = [20.0, 40.0]
    assert transmission_step(ss, config).tolist() == [2]


def test_transmission_uses_start_of_step_states():
    """A infects B but B does not pass it on to C within the step."""
    config = tiny_config(G=2, H=2, K=1, theta_tr=50.0)
    pop = population([0, 0, 0], [[0], [0], [0]], [1.0, 1.3, 1.0])
    ss = step_state(pop, config)
    ss.location = np.array([0, 0, 0])
    ss.load[0] = 40.0
    ss.load[1] = 90.0
    assert transmission_step(ss, config).tolist() == [1]
    assert ss.state[1] == State.I and ss.infected_at[1] == 0
    assert ss.state[2] == State.S


def test_no_transmission_at_homes():
    """Homes are not transmission sites by default."""
    config = tiny_config(G=2, H=2, K=1, theta_tr=10.0)
    ss = three_agents(config)
    ss.location = np.array([4, 4, 5])
    ss.load[0] = 30.0
    assert len(transmission_step(ss, config)) == 0
    config.home_transmission = True
    assert transmission_step(ss, config).tolist() == [1]


def test_recovered_agents_are_not_reinfected():
    """Recovered agents ignore high-load infected neighbors."""
    config = tiny_config(G=2, H=2, K=1, theta_tr=1.0)
    ss = three_agents(config)
    ss.state[1] = State.R
    ss.load[0] = 90.0
    assert len(transmission_step(ss, config)) == 0
    assert ss.state[1] == State.R


def test_death_needs_strict_excess():
    """A load of exactly 100 is survived; 101 is lethal."""
    config = tiny_config(G=2, H=2, K=1)
    ss = three_agents(config)
    ss.load[0] = 100.0
    assert len(end_of_step_transitions(ss, config)) == 0
    ss.load[0] = 101.0
    assert end_of_step_transitions(ss, config).tolist() == [0]
    assert ss.state[0] == State.D and ss.location[0] == NOWHERE


def test_dead_agents_leave_the_grid():
    """Dead agents have no location at later steps."""
    config = tiny_config(G=2, H=2, K=1)
    ss = three_agents(config)
    ss.state[0] = State.D
    update_locations(ss, config)
    assert ss.location[0] == NOWHERE


def test_susceptible_unchanged_by_step_transitions():
    """Death applies to infected agents only."""
    config = tiny_config(G=2, H=2, K=1)
    ss = three_agents(config)
    ss.load[1] = 500.0
    end_of_step_transitions(ss, config)
    assert ss.state[1] == State.S


def test_recovery_only_past_peak():
    """A low load recovers a past-peak infection but not a fresh one."""
    config = tiny_config(G=2, H=2, K=1)
    ss = three_agents(config)
    ss.past_peak = np.array([5, 5, 5, 5])
    ss.t = 10
    ss.state[1] = State.I
    ss.infected_at[:2] = [0, 8]
    ss.load[:2] = [0.5, 0.5]
    assert end_of_day_transitions(ss, config).tolist() == [0]
    assert ss.state[0] == State.R and ss.state[1] == State.I


def test_no_transmission_with_infinite_threshold():
    """Reference config with an infinite threshold infects nobody."""
    config = SimConfig(theta_tr=math.inf).validate()
    traj = run_simulation(config)
    assert traj.records[0].S == 499 and traj.records[0].I == 1
    assert traj.records[0].new_inf == 0
    assert traj.outcome.S_T == 499
    assert traj.outcome.attack_rate == pytest.approx(0.002)
    assert traj.outcome.label == 0
    assert traj.recorded_days == config.T_max


def test_zero_threshold_infects_everyone_sharing_a_cell():
    """Any positive load infects when the threshold is 0."""
    config = one_cell_config(theta_tr=0.0)
    traj = run_simulation(config)
    assert traj.records[0].new_inf == config.N - 1
    assert traj.outcome.attack_rate == 1.0


def test_simulation_is_deterministic():
    """The same config gives the same trajectory."""
    config = tiny_config()
    assert run_simulation(config) == run_simulation(config)


def test_count_identities_hold():
    """Daily counts satisfy conservation and flow identities."""
    for seed in range(4):
        traj = run_simulation(tiny_config(seed=seed))
        assert check_identities(traj.records, 40) == []


def test_state_machine_is_monotone():
    """S never grows; R and D never shrink."""
    traj = run_simulation(tiny_config(seed=1))
    s, r, d = (np.array(traj.series(c)) for c in 'SRD')
    assert (np.diff(s) <= 0).all()
    assert (np.diff(r) >= 0).all() and (np.diff(d) >= 0).all()


def test_early_stop_at_extinction():
    """With early stop the run ends after the first day without
    infected agents."""
    for seed in range(4):
        traj = run_simulation(tiny_config(seed=seed, early_stop=True))
        infected = traj.series('I')
        assert 0 not in infected[:-1]
        assert infected[-1] == 0 or traj.recorded_days == 20


def test_quarantine_keeps_prefix():
    """Days before the quarantine day equal the baseline."""
    config = tiny_config(seed=2)
    base = run_simulation(config)
    for agent in (0, 7, 39):
        cf = run_simulation(config, (agent, 3))
        assert cf.prefix(3) == base.prefix(3)
        assert cf.intervention == (agent, 3)


def test_quarantine_after_extinction_changes_nothing():
    """With nothing spreading, a quarantine is a null intervention."""
    config = tiny_config(theta_tr=math.inf)
    assert run_simulation(config, (5, 4)) == run_simulation(config)


def test_invalid_quarantine():
    """Quarantines outside the population or horizon are errors."""
    config = tiny_config()
    with pytest.raises(ValueError):
        run_simulation(config, (40, 1))
    with pytest.raises(ValueError):
        run_simulation(config, (1, 20))


def test_restore_from_checkpoint():
    """Resuming from a start-of-day checkpoint reproduces the run."""
    config = tiny_config(seed=4)
    sim = Simulation(config)
    full = sim.run(checkpoint_days=[3])
    resumed = Simulation(config, sim.curves, sim.population)
    resumed.restore(sim.checkpoints[3])
    assert resumed.run() == full


def test_checkpoint_is_not_modified_by_resume():
    """A checkpoint can be resumed more than once."""
    config = tiny_config(seed=4)
    sim = Simulation(config)
    sim.run(checkpoint_days=[2])
    first = Simulation(config, sim.curves, sim.population) \
        .restore(sim.checkpoints[2]).quarantine(0, 2).run()
    second = Simulation(config, sim.curves, sim.population) \
        .restore(sim.checkpoints[2]).quarantine(0, 2).run()
    assert first == second
    assert first == run_simulation(config, (0, 2))
