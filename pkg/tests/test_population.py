import pytest

from epiwarn.config import SimConfig
from epiwarn.constants import ConfigError, Immunity
from epiwarn.population import init_population
from epiwarn.prng import Pcg32

from .mocks.sim_mocks import tiny_config


def test_reference_population():
    """Reference config: 500 agents with 10 distinct routine cells each
    and one seed agent."""
    config = SimConfig().validate()
    pop = init_population(config)
    assert len(pop) == 500
    assert pop.routine.shape == (500, 10)
    assert all(len(set(row)) == 10 for row in pop.routine.tolist())
    assert 0 <= pop.seed_agent < 500


def test_population_ranges():
    """Drawn attributes respect their configured ranges."""
    config = tiny_config(s_lo=0.8, s_hi=1.2)
    pop = init_population(config)
    assert pop.home.min() >= 0 and pop.home.max() < config.H
    assert pop.routine.min() >= 0 and pop.routine.max() < config.n_cells
    assert pop.phase.min() >= 1 and pop.phase.max() <= config.K - 1
    assert pop.susceptibility.min() >= 0.8
    assert pop.susceptibility.max() <= 1.2
    assert sum(pop.category_counts) == config.N


def test_single_agent_is_seed():
    """With one agent, that agent is infected."""
    pop = init_population(tiny_config(N=1))
    assert pop.seed_agent == 0


def test_same_seed_same_population():
    """Initialization is a pure function of the seed."""
    config = tiny_config(seed=11)
    assert init_population(config) == init_population(config)


def test_different_seed_different_population():
    """Another seed draws another population."""
    assert init_population(tiny_config(seed=1)) != \
        init_population(tiny_config(seed=2))


def test_explicit_generator():
    """Passing the seeded generator is the same as the default."""
    config = tiny_config(seed=5)
    assert init_population(config, Pcg32(5)) == init_population(config)


def test_equal_susceptibility_bounds():
    """Equal bounds give every agent the same susceptibility."""
    pop = init_population(tiny_config(s_lo=1.3, s_hi=1.3))
    assert set(pop.susceptibility.tolist()) == {1.3}


def test_routine_length_one():
    """A one-cell routine uses phase 1."""
    pop = init_population(tiny_config(K=1))
    assert set(pop.phase.tolist()) == {1}


def test_routine_too_long_for_grid():
    """More routine cells than grid cells cannot be drawn."""
    config = tiny_config()
    config.K = 20
    with pytest.raises(ConfigError):
        init_population(config)


def test_agent_view():
    """The agent view exposes one agent's attributes."""
    pop = init_population(tiny_config())
    agent = pop.agent(3)
    assert agent.home == pop.home[3]
    assert agent.routine == pop.routine[3].tolist()
    assert isinstance(agent.immunity, Immunity)
