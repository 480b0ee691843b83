import numpy as np

from lotrank.rng import SplitMix64, derive_seed


def test_scalar_and_bulk_streams_agree():
    a = SplitMix64(12345)
    b = SplitMix64(12345)
    scalar = [a.next_u64() for _ in range(257)]
    bulk = b.next_u64_array(257)
    assert scalar == [int(v) for v in bulk]


def test_bulk_stream_resumes_at_the_right_offset():
    a = SplitMix64(99)
    first = a.next_u64_array(10)
    second = a.next_u64_array(10)
    fresh = SplitMix64(99).next_u64_array(20)
    assert [int(v) for v in np.concatenate([first, second])] == [int(v) for v in fresh]


def test_known_splitmix64_values():
    # First outputs for seed 0, cross-checked against the published splitmix64
    # reference sequence.
    rng = SplitMix64(0)
    assert rng.next_u64() == 0xE220A8397B1DCDAF
    assert rng.next_u64() == 0x6E789E6AA1B965F4
    assert rng.next_u64() == 0x06C45D188009454F


def test_uniform_bounds_and_determinism():
    rng = SplitMix64(7)
    values = rng.uniform_array(10_000)
    assert values.min() >= 0.0
    assert values.max() < 1.0
    assert np.array_equal(values, SplitMix64(7).uniform_array(10_000))


def test_uniform_scalar_matches_array():
    a = SplitMix64(3)
    b = SplitMix64(3)
    assert [a.uniform() for _ in range(5)] == list(b.uniform_array(5))


def test_shuffle_is_seed_deterministic_and_seed_sensitive():
    items = list(range(50))
    one = items[:]
    two = items[:]
    other = items[:]
    SplitMix64(1).shuffle(one)
    SplitMix64(1).shuffle(two)
    SplitMix64(2).shuffle(other)
    assert one == two
    assert one != other
    assert sorted(one) == items


def test_sample_indices_prefix_consistency():
    # Same seed: a smaller sample is a prefix of a larger one (partial
    # Fisher-Yates), which keeps occupied-slot sets nested across occupancies.
    big = SplitMix64(11).sample_indices(100, 60)
    small = SplitMix64(11).sample_indices(100, 25)
    assert big[:25] == small
    assert len(set(big)) == 60


def test_normal_array_moments_and_determinism():
    rng = SplitMix64(5)
    values = rng.normal_array(200_000, sigma=2.0)
    assert abs(values.mean()) < 0.02
    assert abs(values.std() - 2.0) < 0.02
    assert np.array_equal(values, SplitMix64(5).normal_array(200_000, sigma=2.0))


def test_derive_seed_distinct_per_salt():
    seeds = {derive_seed(42, salt) for salt in range(1000)}
    assert len(seeds) == 1000
