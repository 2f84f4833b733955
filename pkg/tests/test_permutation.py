import numpy as np
import pytest
from numpy.testing import assert_array_equal

from hotspot_cli import permutation
from hotspot_cli.errors import ValidationError


def test_streams_are_reproducible_and_distinct():
    a = permutation.stream(42, permutation.LOCAL_STREAM, 7).random(5)
    b = permutation.stream(42, permutation.LOCAL_STREAM, 7).random(5)
    c = permutation.stream(42, permutation.LOCAL_STREAM, 8).random(5)
    d = permutation.stream(42, permutation.GLOBAL_STREAM, 7).random(5)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


@pytest.mark.parametrize("pool_size,k", [(8, 8), (10, 3), (300, 8), (5000, 4), (1000, 400)])
def test_samples_are_distinct_and_in_range(pool_size, k):
    rng = np.random.default_rng(1)
    draws = permutation.sample_without_replacement(rng, pool_size, k, 200)
    assert draws.shape == (200, k)
    assert draws.min() >= 0 and draws.max() < pool_size
    for row in draws:
        assert len(set(row.tolist())) == k


def test_sampling_is_roughly_uniform():
    rng = np.random.default_rng(3)
    draws = permutation.sample_without_replacement(rng, 500, 3, 20000)
    counts = np.bincount(draws.ravel(), minlength=500)
    expected = 20000 * 3 / 500
    assert abs(counts.mean() - expected) < 1e-9
    assert counts.min() > expected * 0.5 and counts.max() < expected * 1.5


def test_sampling_more_than_pool_fails():
    with pytest.raises(ValidationError):
        permutation.sample_without_replacement(np.random.default_rng(0), 3, 4, 1)


def test_pool_to_cells_skips_focal():
    assert_array_equal(permutation.pool_to_cells(np.array([0, 1, 2, 3]), 2), [0, 1, 3, 4])


def test_pseudo_p_upper_tail():
    sims = np.arange(99, dtype=float)
    # Observed above every replicate.
    assert permutation.pseudo_p(sims, 200.0) == pytest.approx(1 / 100)
    # 10 replicates (89..98) at least as large as 89.
    assert permutation.pseudo_p(sims, 89.0) == pytest.approx(11 / 100)


def test_pseudo_p_lower_tail_and_reference():
    sims = np.linspace(-1, 1, 99)
    p_low = permutation.pseudo_p(sims, -2.0, reference=0.0)
    assert p_low == pytest.approx(1 / 100)
    # Below the reference the lower tail is used.
    assert permutation.pseudo_p(sims, -0.5, reference=-0.4) < 0.5


def test_pseudo_p_counts_ties():
    sims = np.full(9, 1.0)
    assert permutation.pseudo_p(sims, 1.0) == 1.0


def test_two_sided_doubles_and_caps():
    sims = np.arange(99, dtype=float)
    directional = permutation.pseudo_p(sims, 89.0)
    assert permutation.pseudo_p(sims, 89.0, alternative="two-sided") == pytest.approx(2 * directional)
    assert permutation.pseudo_p(np.zeros(9), 0.0, alternative="two-sided") == 1.0


def test_pseudo_p_bounds():
    rng = np.random.default_rng(5)
    for _ in range(50):
        sims = rng.normal(size=19)
        p = permutation.pseudo_p(sims, float(rng.normal()))
        assert 1 / 20 <= p <= 1.0


def test_chunked_covers_range():
    parts = permutation.chunked(10, 3)
    assert [i for r in parts for i in r] == list(range(10))
    assert permutation.chunked(0, 4) == [range(0, 0)]


def test_parallel_map_preserves_order():
    out = permutation.parallel_map(lambda r: list(r), 37, threads=4)
    assert [i for part in out for i in part] == list(range(37))


def test_check_permutations():
    with pytest.raises(ValidationError):
        permutation.check_permutations(0)


def test_default_threads_from_env(monkeypatch):
    monkeypatch.setenv("HOTSPOT_THREADS", "3")
    assert permutation.default_threads() == 3
    monkeypatch.setenv("HOTSPOT_THREADS", "many")
    with pytest.raises(ValidationError):
        permutation.default_threads()
