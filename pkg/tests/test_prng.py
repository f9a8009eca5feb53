import pytest

from epiwarn.prng import Pcg32, derive_seed, mix64


def test_derived_seeds_are_reproducible():
    """Deriving a seed twice from the same coordinates gives the same
    value."""
    assert derive_seed(2024, 3, 17) == derive_seed(2024, 3, 17)


def test_derived_seeds_depend_on_every_coordinate():
    """Changing the master seed, a coordinate or their order changes the
    derived seed."""
    seeds = {derive_seed(2024, 3, 17), derive_seed(2025, 3, 17),
             derive_seed(2024, 4, 17), derive_seed(2024, 17, 3),
             derive_seed(2024, 3), derive_seed(2024)}
    assert len(seeds) == 6


def test_mix_is_64_bit():
    """Mixed values fit in 64 bits."""
    assert 0 <= mix64(-1) < 2 ** 64
    assert 0 <= mix64(2 ** 70) < 2 ** 64


def test_generator_is_deterministic():
    """Two generators with the same seed produce the same stream."""
    a, b = Pcg32(7), Pcg32(7)
    assert [a.next_u32() for _ in range(50)] == \
           [b.next_u32() for _ in range(50)]


def test_generator_streams_differ_by_seed():
    """Different seeds give different streams."""
    a, b = Pcg32(7), Pcg32(8)
    assert [a.next_u32() for _ in range(10)] != \
           [b.next_u32() for _ in range(10)]


def test_outputs_are_32_bit():
    """Raw outputs lie in [0, 2^32)."""
    rng = Pcg32(0)
    assert all(0 <= rng.next_u32() < 2 ** 32 for _ in range(1000))


def test_randbelow_stays_in_range():
    """Bounded draws lie in [0, n) and hit every value."""
    rng = Pcg32(1)
    draws = [rng.randbelow(5) for _ in range(500)]
    assert set(draws) == {0, 1, 2, 3, 4}


def test_randbelow_rejects_empty_range():
    """A bound of 0 is an error."""
    with pytest.raises(ValueError):
        Pcg32(1).randbelow(0)


def test_random_floats_in_unit_interval():
    """Floats lie in [0, 1)."""
    rng = Pcg32(2)
    assert all(0.0 <= rng.random() < 1.0 for _ in range(1000))


def test_uniform_with_equal_bounds():
    """Uniform draw between equal bounds is the bound itself."""
    assert Pcg32(3).uniform(1.3, 1.3) == 1.3


def test_categorical_degenerate_probabilities():
    """All probability on one category always draws that category."""
    rng = Pcg32(4)
    assert {rng.categorical([0, 0, 1, 0]) for _ in range(100)} == {2}
    assert {rng.categorical([1, 0, 0, 0]) for _ in range(100)} == {0}


def test_sample_distinct_values():
    """Distinct sampling returns k different in-range values."""
    rng = Pcg32(5)
    for _ in range(50):
        sample = rng.sample_distinct(30, 10)
        assert len(sample) == len(set(sample)) == 10
        assert all(0 <= v < 30 for v in sample)


def test_sample_distinct_full_range_is_permutation():
    """Drawing all n values gives a permutation."""
    assert sorted(Pcg32(6).sample_distinct(12, 12)) == list(range(12))


def test_sample_distinct_too_many():
    """Drawing more values than exist is an error."""
    with pytest.raises(ValueError):
        Pcg32(6).sample_distinct(3, 4)
