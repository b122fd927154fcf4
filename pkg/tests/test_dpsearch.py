from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strucbreak import BreakPartition, ModelSpec, PanelDataset, SpecError
from strucbreak.dpsearch import (
    estimate_breaks,
    grid_search_oracle,
    n_feasible_partitions,
    optimal_partition,
    segment_costs,
)
from strucbreak.regress import ssr_given_breaks

from conftest import simulate_panel, simulate_series


def segment_ssr(y, X, a, b):
    """OLS SSR on 1-based periods a..b via the normal equations."""
    Xs, ys = X[a - 1 : b], y[a - 1 : b]
    beta = np.linalg.solve(Xs.T @ Xs, Xs.T @ ys)
    r = ys - Xs @ beta
    return float(r @ r)


def test_segment_costs_match_per_segment_ols(rng):
    ds = simulate_series(rng, 15, q=2)
    spec = ModelSpec("y", break_vars=("x1", "x2"), deterministic="constant-breaks")
    costs = segment_costs(ds, spec, h=4)
    y = ds.column("y")[0]
    X = np.column_stack([ds.column("x1")[0], ds.column("x2")[0], np.ones(15)])
    for a in range(1, 16):
        for b in range(a + 3, 16):
            assert costs(a, b) == pytest.approx(segment_ssr(y, X, a, b), rel=1e-8)


def test_n_feasible_partitions():
    assert n_feasible_partitions(10, 1, 3) == 5
    assert n_feasible_partitions(10, 3, 3) == 0
    assert n_feasible_partitions(9, 2, 3) == 1


@pytest.mark.parametrize("s", [1, 2, 3])
def test_dp_matches_exhaustive_search(s):
    rng = np.random.default_rng(40 + s)
    ds = simulate_series(rng, 40, breaks=(13, 27), slopes=(1.0, -1.0, 0.5), intercepts=(0, 1, 0))
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks")
    costs = segment_costs(ds, spec)
    stats = {}
    part, cost = optimal_partition(costs, s, stats=stats)
    opart, ocost = grid_search_oracle(costs, s)
    assert part == opart
    assert cost == pytest.approx(ocost, rel=1e-10)
    assert stats["segment_evals"] == costs.n_evals
    assert stats["path_costs"][s] == cost


@given(st.integers(0, 2**32 - 1), st.integers(12, 30), st.integers(1, 3))
@settings(max_examples=40, deadline=None)
def test_dp_optimality_property(seed, T, s):
    rng = np.random.default_rng(seed)
    ds = simulate_series(rng, T, breaks=(T // 2,), slopes=(1.0, -1.0))
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks")
    costs = segment_costs(ds, spec)
    if n_feasible_partitions(T, s, costs.h) == 0:
        with pytest.raises(SpecError):
            optimal_partition(costs, s)
        return
    part, cost = optimal_partition(costs, s)
    opart, ocost = grid_search_oracle(costs, s)
    assert part == opart and cost == pytest.approx(ocost, rel=1e-10)
    # the optimum also equals the SSR of a fresh joint fit at those breaks
    assert cost == pytest.approx(ssr_given_breaks(ds, spec, part), rel=1e-8, abs=1e-10)


def test_infeasible_request_is_an_error(rng):
    ds = simulate_series(rng, 20)
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks")
    with pytest.raises(SpecError):
        estimate_breaks(ds, spec, 6)


def test_pure_change_recovers_planted_breaks(rng):
    ds = simulate_series(rng, 120, breaks=(40, 80), slopes=(2.0, -1.0, 1.0), sigma=0.3)
    est = estimate_breaks(ds, ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks"), 2)
    assert est.breaks == (40, 80)
    assert est.converged and est.iterations == 1
    slopes = [r["coefficients"]["x1"]["coef"] for r in est.regime_table()]
    np.testing.assert_allclose(slopes, [2.0, -1.0, 1.0], atol=0.15)


def test_partial_change_recovers_planted_breaks(rng):
    T = 150
    x = rng.standard_normal(T)
    z = rng.standard_normal(T)
    slope = np.where(np.arange(T) < 60, 1.5, -0.5)
    y = 3.0 + slope * x + 2.0 * z + 0.3 * rng.standard_normal(T)
    ds = PanelDataset.from_series({"y": y, "x": x, "z": z})
    spec = ModelSpec("y", break_vars=("x",), nobreak_vars=("z",), deterministic="constant")
    est = estimate_breaks(ds, spec, 1)
    assert est.breaks == (60,)
    assert est.nonbreaking_table()["z"]["coef"] == pytest.approx(2.0, abs=0.1)
    assert est.ssr_path[-1] >= est.ssr - 1e-9
    # no other single break yields a smaller joint SSR
    h = 23
    best = min(ssr_given_breaks(ds, spec, BreakPartition((t,), T)) for t in range(h, T - h + 1))
    assert est.ssr == pytest.approx(best, rel=1e-10)


def test_panel_with_cross_section_averages(rng):
    ds = simulate_panel(rng, 8, 60, breaks=(25,), slopes=(1.0, -1.0), factor=True, sigma=0.5)
    spec = ModelSpec("y", break_vars=("x",), csa_nobreak=("x", "y"))
    est = estimate_breaks(ds, spec, 1)
    assert est.breaks == (25,)


def test_zero_breaks(rng):
    ds = simulate_series(rng, 30)
    est = estimate_breaks(ds, ModelSpec("y", break_vars=("x1",)), 0)
    assert est.breaks == () and est.labels == []


def test_minimised_cost_non_increasing_in_s(rng):
    ds = simulate_series(rng, 60, breaks=(20, 40), slopes=(1.0, 0.0, -1.0))
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks")
    costs = segment_costs(ds, spec)
    values = [optimal_partition(costs, s)[1] for s in range(0, 5)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_partial_change_ssr_path_never_increases(seed):
    rng = np.random.default_rng(seed)
    T = 80
    x, z = rng.standard_normal(T), rng.standard_normal(T)
    y = np.where(np.arange(T) < 35, 1.0, 0.0) * x + z + rng.standard_normal(T)
    ds = PanelDataset.from_series({"y": y, "x": x, "z": z})
    est = estimate_breaks(ds, ModelSpec("y", break_vars=("x",), nobreak_vars=("z",)), 2)
    assert all(b <= a * (1 + 1e-12) for a, b in zip(est.ssr_path, est.ssr_path[1:]))
    assert est.ssr <= min(est.ssr_path) * (1 + 1e-12)
