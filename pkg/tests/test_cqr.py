"""Quantile frontier estimation, evaluation, deciles, export/import."""

import io

import numpy as np
import pytest

from qalloc.cqr import (CRS, DEA_LIMIT, TAU_GRID, VRS, FrontierSet,
                        QuantileFrontier, evaluate_frontier, export_frontiers,
                        fit_cqr, fit_dea, fit_frontier_set, import_frontiers,
                        nearest_quantile, partition_deciles)
from qalloc.data_model import Observation, Panel
from qalloc.errors import ValidationError
from oracles import check_loss


def _panel(xs, ys, period=2005):
    obs = []
    for k, (x, y) in enumerate(zip(xs, ys)):
        x = (float(x),) if np.isscalar(x) else tuple(float(v) for v in x)
        obs.append(Observation(f"d{k}", period, float(y), x))
    return Panel(tuple(obs))


def _random_panel(rng, n, d):
    x = rng.uniform(0.5, 5.0, size=(n, d))
    y = 1.0 + np.sqrt(x).sum(axis=1) + rng.normal(0.0, 0.3, n)
    y = np.maximum(y, 0.1)
    return _panel(list(x), list(y))


def _flat_set(alphas):
    """Synthetic set with constant frontiers alpha_k at each grid tau."""
    return FrontierSet(tuple(
        QuantileFrontier.from_hyperplanes(tau, [a], [[0.0]])
        for tau, a in zip(TAU_GRID, alphas)))


def test_single_observation_interpolates():
    for tau in (0.05, 0.5, 0.95):
        f = fit_cqr(_panel([1.0], [1.0]), tau)
        assert f.objective_value == pytest.approx(0.0, abs=1e-9)
        assert evaluate_frontier(f, np.array([1.0])) == pytest.approx(1.0, abs=1e-7)


def test_two_stacked_observations_check_loss():
    # same x, y in {1, 3}; tau = 0.95 pins the fit to y = 3, loss 0.05 * 2
    f = fit_cqr(_panel([1.0, 1.0], [1.0, 3.0]), 0.95)
    assert f.objective_value == pytest.approx(0.1, abs=1e-9)
    assert evaluate_frontier(f, np.array([1.0])) == pytest.approx(3.0, abs=1e-6)


def test_six_point_objective_matches_independent_backend():
    panel = _panel([1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
                   [1.2, 2.1, 2.4, 3.5, 3.4, 4.0])
    for tau in (0.25, 0.5, 0.75):
        a = fit_cqr(panel, tau, backend="builtin")
        b = fit_cqr(panel, tau, backend="scipy")
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-6)
        # objective is the check loss of the fitted values
        x = panel.inputs_matrix()
        fitted = a.alpha + np.einsum("ij,ij->i", a.beta, x)
        assert a.objective_value == pytest.approx(
            check_loss(panel.outputs_vector(), fitted, tau), abs=1e-6)


def test_fit_invariants_on_random_datasets():
    rng = np.random.default_rng(21)
    for _ in range(6):
        n = int(rng.integers(5, 13))
        d = int(rng.integers(1, 3))
        panel = _random_panel(rng, n, d)
        tau = float(rng.choice([0.15, 0.5, 0.85]))
        f = fit_cqr(panel, tau)
        f.check_fit(panel.inputs_matrix(), panel.outputs_vector())
        b = fit_cqr(panel, tau, backend="scipy")
        assert f.objective_value == pytest.approx(b.objective_value, abs=1e-6)


def test_crs_nesting_and_zero_intercepts():
    rng = np.random.default_rng(4)
    panel = _random_panel(rng, 8, 1)
    vrs = fit_cqr(panel, 0.5, rts=VRS)
    crs = fit_cqr(panel, 0.5, rts=CRS)
    assert np.allclose(crs.alpha, 0.0)
    assert crs.objective_value >= vrs.objective_value - 1e-6
    crs.check_fit(panel.inputs_matrix(), panel.outputs_vector())


def test_tau_domain_and_period_errors():
    panel = _panel([1.0], [1.0])
    with pytest.raises(ValidationError):
        fit_cqr(panel, 0.0)
    with pytest.raises(ValidationError):
        fit_cqr(panel, 1.0)
    two_years = Panel((Observation("a", 2005, 1.0, (1.0,)),
                       Observation("a", 2006, 1.0, (1.0,))))
    with pytest.raises(ValidationError):
        fit_cqr(two_years, 0.5)


def test_dea_collinear_points_interpolated():
    f = fit_dea(_panel([1.0, 2.0], [1.0, 2.0]))
    assert f.objective_value == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(f.eps_minus, 0.0, atol=1e-9)
    assert np.allclose(f.eps_plus, 0.0)


def test_dea_vertical_dominance():
    f = fit_dea(_panel([1.0, 1.0], [2.0, 1.0]))
    assert f.eps_minus[0] == pytest.approx(0.0, abs=1e-9)
    assert f.eps_minus[1] == pytest.approx(1.0, abs=1e-9)


def test_dea_envelopment_and_oracle_match():
    rng = np.random.default_rng(9)
    panel = _random_panel(rng, 8, 2)
    f = fit_dea(panel)
    fitted = evaluate_frontier(f, panel.inputs_matrix())
    assert np.all(fitted >= panel.outputs_vector() - 1e-6)
    g = fit_dea(panel, backend="scipy")
    assert f.objective_value == pytest.approx(g.objective_value, abs=1e-6)


def test_high_tau_approaches_dea():
    rng = np.random.default_rng(14)
    panel = _random_panel(rng, 10, 1)
    hi = fit_cqr(panel, 0.99)
    mid = fit_cqr(panel, 0.5)
    assert hi.eps_plus.sum() <= mid.eps_plus.sum() + 1e-9


def test_evaluate_single_hyperplane():
    f = QuantileFrontier.from_hyperplanes(0.5, [1.0], [[2.0]])
    assert evaluate_frontier(f, np.array([3.0])) == pytest.approx(7.0)


def test_evaluate_kink():
    f = QuantileFrontier.from_hyperplanes(0.5, [0.0, 1.0], [[2.0], [1.0]])
    assert evaluate_frontier(f, np.array([0.0])) == pytest.approx(0.0)
    assert evaluate_frontier(f, np.array([2.0])) == pytest.approx(3.0)


def test_evaluate_dimension_mismatch():
    f = QuantileFrontier.from_hyperplanes(0.5, [0.0], [[1.0, 1.0]])
    with pytest.raises(ValidationError):
        evaluate_frontier(f, np.array([1.0]))


def test_midpoint_concavity_and_monotonicity_probes():
    rng = np.random.default_rng(33)
    f = QuantileFrontier.from_hyperplanes(
        0.5, rng.uniform(-1.0, 2.0, 5), rng.uniform(0.0, 3.0, size=(5, 2)))
    a = rng.uniform(0.0, 10.0, size=(1000, 2))
    b = rng.uniform(0.0, 10.0, size=(1000, 2))
    fa, fb = evaluate_frontier(f, a), evaluate_frontier(f, b)
    fmid = evaluate_frontier(f, 0.5 * (a + b))
    assert np.all(fmid >= 0.5 * (fa + fb) - 1e-9)
    hi = np.maximum(a, b)
    assert np.all(evaluate_frontier(f, hi) >= fa - 1e-9)


def test_nearest_quantile_exact_and_tie():
    fs = _flat_set(list(range(10)))  # frontier k has constant value k
    on_045 = Observation("a", 2005, 4.0, (1.0,))
    assert nearest_quantile(fs, on_045) == 0.45
    equidistant = Observation("b", 2005, 3.5, (1.0,))  # between 0.35 and 0.45
    assert nearest_quantile(fs, equidistant) == 0.35


def test_nearest_quantile_brute_force_scan():
    rng = np.random.default_rng(6)
    fs = FrontierSet(tuple(
        QuantileFrontier.from_hyperplanes(
            tau, rng.uniform(0.0, 3.0, 2), rng.uniform(0.0, 2.0, size=(2, 1)))
        for tau in TAU_GRID))
    for k in range(20):
        obs = Observation(f"d{k}", 2005, float(rng.uniform(0.1, 6.0)),
                          (float(rng.uniform(0.1, 4.0)),))
        x = np.asarray(obs.inputs_x)
        resid = [abs(obs.output_y - evaluate_frontier(f, x)) for f in fs]
        assert nearest_quantile(fs, obs) == TAU_GRID[int(np.argmin(resid))]


def test_nearest_quantile_unknown_dmu():
    panel = _panel([1.0, 2.0, 3.0, 4.0], [1.0, 1.5, 2.0, 2.2])
    fs = fit_frontier_set(panel)
    with pytest.raises(LookupError):
        nearest_quantile(fs, Observation("stranger", 2005, 1.0, (1.0,)))


def test_partition_balanced_sizes():
    rng = np.random.default_rng(8)
    fs = _flat_set([0.5 + 0.5 * k for k in range(10)])
    for n, allowed in ((20, {2}), (23, {2, 3})):
        panel = _panel([1.0] * n, list(rng.uniform(0.3, 5.5, n)))
        assign = partition_deciles(fs, panel)
        sizes = np.bincount([d for d, _ in assign.mapping.values()],
                            minlength=11)[1:]
        assert set(sizes.tolist()) == allowed
        assert sizes.sum() == n


def test_partition_planted_quantiles_rank_correctly():
    # two DMUs planted exactly on each constant frontier k+1
    alphas = [float(k + 1) for k in range(10)]
    fs = _flat_set(alphas)
    xs, ys, want = [], [], {}
    for k, a in enumerate(alphas):
        for r in range(2):
            xs.append(1.0)
            ys.append(a)
            want[f"d{len(xs) - 1}"] = 10 - k  # higher quantile, better decile
    panel = _panel(xs, ys)
    assign = partition_deciles(fs, panel)
    for dmu, decile in want.items():
        assert assign.decile_of(dmu) == decile
    # ranking consistent with nearest tau: higher tau => weakly better decile
    pairs = [(assign.nearest_tau_of(d), assign.decile_of(d))
             for d in want]
    for t1, g1 in pairs:
        for t2, g2 in pairs:
            if t1 > t2:
                assert g1 <= g2


def test_frontier_set_requires_standard_grid():
    f = QuantileFrontier.from_hyperplanes(0.5, [0.0], [[1.0]])
    with pytest.raises(ValidationError):
        FrontierSet((f,))


def test_export_import_round_trip():
    rng = np.random.default_rng(12)
    fs = FrontierSet(tuple(
        QuantileFrontier.from_hyperplanes(
            tau, rng.uniform(-1, 2, 3), rng.uniform(0, 2, size=(3, 2)))
        for tau in TAU_GRID))
    buf = io.StringIO()
    export_frontiers(fs, buf)
    back = import_frontiers(buf.getvalue())
    assert isinstance(back, FrontierSet)
    for f, g in zip(fs, back):
        assert g.tau == f.tau
        assert np.array_equal(g.alpha, f.alpha)
        assert np.array_equal(g.beta, f.beta)


def test_export_import_dea_token():
    f = fit_dea(_panel([1.0, 2.0, 3.0], [1.0, 1.8, 2.2]))
    buf = io.StringIO()
    export_frontiers(f, buf)
    back = import_frontiers(buf.getvalue())
    assert isinstance(back, list) and back[0].tau == DEA_LIMIT
    assert np.array_equal(back[0].eps_minus, f.eps_minus)
