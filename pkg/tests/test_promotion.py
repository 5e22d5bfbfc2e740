import random
import threading

import pytest

from bskiplist.oracle import geometric_fit
from bskiplist.promotion import HeightSampler, PromotionParams, height_pmf, sample_height
from bskiplist.workload import binomial_halfwidth


def test_defaults_give_one_in_64():
    params = PromotionParams.from_node_bytes(2048, 0.5, 5)
    assert params.node_capacity == 128
    assert params.promotion_p == 1 / 64
    assert PromotionParams() == params


@pytest.mark.parametrize("kwargs", [
    dict(node_capacity=1),
    dict(max_height=0),
    dict(scale=0),
    dict(node_capacity=2, scale=0.5),  # p = 1
])
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        PromotionParams(**kwargs)


def test_single_level_is_always_zero():
    params = PromotionParams(4, 0.5, 1)
    rng = random.Random(1)
    assert {sample_height(params, rng) for _ in range(10_000)} == {0}
    fit = geometric_fit([0] * 1000, params.promotion_p, 1)
    assert fit.statistic == 0 and fit.passes()


def test_pmf_sums_to_one():
    for p, h in [(1 / 64, 5), (0.5, 2), (0.25, 7)]:
        assert sum(height_pmf(p, h)) == pytest.approx(1.0, abs=1e-12)


def test_same_seed_same_heights():
    params = PromotionParams(8, 0.5, 5)
    a = HeightSampler(params, seed=3)
    b = HeightSampler(params, seed=3)
    assert [a.sample() for _ in range(2000)] == [b.sample() for _ in range(2000)]
    c = HeightSampler(params, seed=4)
    assert [c.sample() for _ in range(2000)] != [HeightSampler(params, 3).sample() for _ in range(2000)]


def test_threads_get_distinct_streams():
    sampler = HeightSampler(PromotionParams(4, 0.5, 5), seed=9)
    out = {}

    def run(t):
        out[t] = [sampler.sample() for _ in range(500)]

    threads = [threading.Thread(target=run, args=(t,)) for t in range(2)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert out[0] != out[1]


def test_promoted_fraction_within_4_sigma():
    params = PromotionParams()
    rng = random.Random(2024)
    n = 200_000
    promoted = sum(sample_height(params, rng) >= 1 for _ in range(n))
    p = params.promotion_p
    assert abs(promoted / n - p) <= binomial_halfwidth(p, n)


def test_wrong_p_fails_fit():
    rng = random.Random(5)
    samples = [sample_height(PromotionParams(128, 0.25, 5), rng) for _ in range(200_000)]
    assert not geometric_fit(samples, 1 / 64, 5).passes()
    assert geometric_fit(samples, 1 / 32, 5).passes()
