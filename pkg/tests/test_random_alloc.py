"""Monte Carlo random-allocation baseline."""

import numpy as np
import pytest

from qalloc.allocation import AllocationScenario, solve_within
from qalloc.cqr import QuantileFrontier, evaluate_frontier
from qalloc.errors import ConfigError, ValidationError
from qalloc.random_alloc import (GLOBAL_PER_DECILE, PER_DECILE_OBSERVED,
                                 RandomAllocationConfig,
                                 RandomAllocationSummary, simulate)


def _front(alphas, betas, tau=0.5):
    return QuantileFrontier.from_hyperplanes(tau, alphas, betas)


def _random_setup(rng, K, d):
    fronts = []
    for _ in range(K):
        beta = np.sort(rng.uniform(0.1, 2.0, size=(2, d)), axis=0)[::-1]
        alpha = np.sort(rng.uniform(-0.2, 1.0, 2))
        fronts.append(_front(alpha, beta))
    Xper = rng.uniform(0.5, 3.0, size=(K, d))
    return fronts, (Xper.sum(axis=0), Xper)


def test_single_pseudo_dmu_is_deterministic():
    rng = np.random.default_rng(2)
    fronts, totals = _random_setup(rng, 3, 2)
    cfg = RandomAllocationConfig(draws=50, seed=7, pseudo_dmus_per_decile=1)
    out = simulate(fronts, totals, cfg)
    # one unit per decile leaves nothing to randomize
    expected = sum(float(evaluate_frontier(f, totals[1][t]))
                   for t, f in enumerate(fronts))
    assert np.allclose(out.samples, expected, atol=1e-12)
    assert out.mean_output == pytest.approx(expected, abs=1e-12)
    assert out.median_output == pytest.approx(expected, abs=1e-12)


def test_flat_technology_has_zero_variance():
    fronts = [_front([1.5], [[0.0]]), _front([0.5], [[0.0]])]
    Xper = np.array([[2.0], [3.0]])
    cfg = RandomAllocationConfig(draws=40, seed=3, pseudo_dmus_per_decile=3)
    out = simulate(fronts, (Xper.sum(axis=0), Xper), cfg)
    # output is independent of the split, so every draw is 3 * (1.5 + 0.5)
    assert np.allclose(out.samples, 3 * 2.0, atol=1e-12)


def test_same_seed_reproduces_samples_exactly():
    rng = np.random.default_rng(11)
    fronts, totals = _random_setup(rng, 4, 1)
    cfg = RandomAllocationConfig(draws=30, seed=123, pseudo_dmus_per_decile=2)
    a = simulate(fronts, totals, cfg)
    b = simulate(fronts, totals, cfg)
    assert np.array_equal(a.samples, b.samples)
    assert a.samples.tobytes() == b.samples.tobytes()


def test_distinct_seeds_differ():
    rng = np.random.default_rng(13)
    fronts, totals = _random_setup(rng, 3, 1)
    a = simulate(fronts, totals,
                 RandomAllocationConfig(draws=20, seed=1,
                                        pseudo_dmus_per_decile=2))
    b = simulate(fronts, totals,
                 RandomAllocationConfig(draws=20, seed=2,
                                        pseudo_dmus_per_decile=2))
    assert not np.array_equal(a.samples, b.samples)


def test_substreams_independent_of_draw_count():
    # sample k is a function of (seed, draw index, decile) only
    rng = np.random.default_rng(17)
    fronts, totals = _random_setup(rng, 3, 2)
    short = simulate(fronts, totals,
                     RandomAllocationConfig(draws=1, seed=5,
                                            pseudo_dmus_per_decile=3))
    long = simulate(fronts, totals,
                    RandomAllocationConfig(draws=10, seed=5,
                                           pseudo_dmus_per_decile=3))
    assert long.samples[0] == short.samples[0]


def test_draws_bounded_by_within_optimum():
    rng = np.random.default_rng(19)
    for _ in range(4):
        fronts, totals = _random_setup(rng, 3, 1)
        cfg = RandomAllocationConfig(draws=60, seed=int(rng.integers(1000)),
                                     pseudo_dmus_per_decile=2)
        out = simulate(fronts, totals, cfg)
        best = solve_within(fronts, totals, AllocationScenario.for_model(
            "lp8", pseudo_dmus_per_decile=2))
        assert np.all(out.samples <= best.total_output + 1e-6)


def test_mean_strictly_below_optimum_on_curved_frontier():
    # f = min(2x, x + 1): the optimum splits at the kink; random splits
    # almost surely miss it, so the Monte Carlo mean sits strictly below
    fronts = [_front([0.0, 1.0], [[2.0], [1.0]])]
    Xper = np.array([[2.0]])
    cfg = RandomAllocationConfig(draws=200, seed=29,
                                 pseudo_dmus_per_decile=2)
    out = simulate(fronts, (Xper.sum(axis=0), Xper), cfg)
    optimum = 4.0
    assert np.all(out.samples <= optimum + 1e-9)
    assert out.mean_output < optimum - 0.01


def test_global_interpretation_splits_industry_total_everywhere():
    fronts = [_front([0.0], [[1.0]]), _front([1.0], [[1.0]])]
    X = np.array([6.0])
    cfg = RandomAllocationConfig(draws=10, seed=31, pseudo_dmus_per_decile=1,
                                 totals_interpretation=GLOBAL_PER_DECILE)
    out = simulate(fronts, X, cfg)
    # each decile spends the full industry total: 6 + (6 + 1)
    assert np.allclose(out.samples, 13.0, atol=1e-12)


def test_observed_interpretation_requires_per_decile_totals():
    fronts = [_front([0.0], [[1.0]])]
    cfg = RandomAllocationConfig(draws=5, seed=1,
                                 totals_interpretation=PER_DECILE_OBSERVED)
    with pytest.raises(ConfigError):
        simulate(fronts, np.array([4.0]), cfg)


def test_config_validation():
    with pytest.raises(ValidationError):
        RandomAllocationConfig(draws=0)
    with pytest.raises(ValidationError):
        RandomAllocationConfig(pseudo_dmus_per_decile=0)
    with pytest.raises(ConfigError):
        RandomAllocationConfig(totals_interpretation="whatever")


def test_keep_samples_false_drops_array_only():
    rng = np.random.default_rng(37)
    fronts, totals = _random_setup(rng, 2, 1)
    cfg = RandomAllocationConfig(draws=25, seed=4, pseudo_dmus_per_decile=2,
                                 keep_samples=False)
    out = simulate(fronts, totals, cfg)
    full = simulate(fronts, totals,
                    RandomAllocationConfig(draws=25, seed=4,
                                           pseudo_dmus_per_decile=2))
    assert out.samples is None
    assert out.mean_output == full.mean_output
    assert out.median_output == full.median_output


def test_summary_rejects_statistics_outside_sample_range():
    with pytest.raises(ValidationError):
        RandomAllocationSummary(mean_output=5.0, median_output=1.0,
                                samples=np.array([1.0, 2.0]))
