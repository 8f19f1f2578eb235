import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lscdsim import seeding
from lscdsim.mcstats import Estimate, batch_cov, batch_means, delta_se, ratio_estimate
from lscdsim.parallel import chunks, ordered_map


class TestBatchMeans:
    def test_mean_is_exact(self):
        x = np.arange(1, 101, dtype=float)
        assert batch_means(x).mean == 50.5

    def test_se_close_to_iid_formula(self):
        x = np.random.default_rng(0).normal(0, 2.0, 30_000)
        se = batch_means(x).se
        assert se == pytest.approx(2.0 / math.sqrt(x.size), rel=0.35)

    def test_small_samples(self):
        assert batch_means([3.0]).se == math.inf
        assert batch_means([1.0, 3.0]).se == pytest.approx(1.0)
        with pytest.raises(ValueError):
            batch_means([])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=200))
    def test_order_of_batches_irrelevant_to_mean(self, xs):
        assert batch_means(xs).mean == pytest.approx(batch_means(xs[::-1]).mean, rel=1e-12, abs=1e-9)

    def test_ci(self):
        assert Estimate(10.0, 1.0, 5).ci() == (7.0, 13.0)


class TestCovAndRatio:
    def test_cov_of_identical_is_variance(self):
        x = np.random.default_rng(1).normal(size=3000)
        assert batch_cov(x, x) == pytest.approx(batch_means(x).se ** 2)

    def test_ratio(self):
        rng = np.random.default_rng(2)
        den = rng.integers(1, 10, 5000).astype(float)
        num = 2.5 * den + rng.normal(0, 0.1, 5000)
        r = ratio_estimate(num, den)
        assert abs(r.mean - 2.5) < 3 * r.se + 1e-3
        assert r.se < 0.01


class TestDeltaSe:
    def test_linear_function_exact(self):
        cov = np.array([[4.0, 1.0], [1.0, 9.0]])
        se = delta_se(lambda v: 2 * v[0] - v[1], np.array([1.0, 2.0]), cov)
        assert se == pytest.approx(math.sqrt(4 * 4 - 4 * 1 + 9), rel=1e-8)

    def test_ratio_function(self):
        cov = np.diag([0.01, 0.04])
        se = delta_se(lambda v: v[0] / v[1], np.array([2.0, 4.0]), cov)
        assert se == pytest.approx(math.sqrt((0.25**2) * 0.01 + (2 / 16) ** 2 * 0.04), rel=1e-6)


class TestSeeding:
    def test_same_key_same_stream(self):
        a = seeding.generator(5, 1, 2, 3).random(4)
        b = seeding.generator(5, 1, 2, 3).random(4)
        assert np.array_equal(a, b)

    def test_keys_are_distinct_streams(self):
        a = seeding.generator(5, 1, 2, 3).random(4)
        assert not np.array_equal(a, seeding.generator(5, 1, 2, 4).random(4))
        assert not np.array_equal(a, seeding.generator(6, 1, 2, 3).random(4))

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_seed_range(self, seed):
        with pytest.raises(ValueError):
            seeding.generator(seed)

    def test_max_seed(self):
        seeding.generator(2**64 - 1, 1)

    def test_gamma_key(self):
        assert seeding.gamma_key(4.0) == 4_000_000
        assert seeding.gamma_key(2.5000000001) == seeding.gamma_key(2.5)


class TestParallel:
    def test_order_preserved(self):
        assert ordered_map(lambda x: x * x, range(50), threads=8) == [x * x for x in range(50)]

    def test_chunks(self):
        assert [list(c) for c in chunks(5, 2)] == [[0, 1], [2, 3], [4]]
