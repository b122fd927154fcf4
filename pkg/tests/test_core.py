from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strucbreak.core import (
    BreakPartition,
    DataError,
    Deterministic,
    ModelSpec,
    PanelDataset,
    RankDeficiencyError,
    SpecError,
    build_design,
    cross_sectional_averages,
    max_breaks,
    min_segment_length,
    parse_lag,
    regime_indicator,
    resolve_layout,
)

from conftest import simulate_panel, simulate_series


@pytest.mark.parametrize("eps,expected", [(0.15, 5), (0.10, 8), (0.05, 18), (0.20, 3), (0.25, 2)])
def test_max_breaks(eps, expected):
    assert max_breaks(eps) == expected


def test_unsupported_trimming_names_supported_values():
    with pytest.raises(SpecError, match="0.05, 0.10, 0.15, 0.20, 0.25"):
        max_breaks(0.12)


def test_min_segment_length_is_ceiling():
    assert min_segment_length(0.15, 100) == 15
    assert min_segment_length(0.15, 101) == 16
    assert min_segment_length(0.10, 30) == 3


def test_cross_sectional_averages(rng):
    one = PanelDataset.from_series({"c": [1.0, 2.0, 5.0]})
    np.testing.assert_array_equal(cross_sectional_averages(one, ["c"])["c"], [1, 2, 5])
    base = rng.standard_normal(6)
    same = PanelDataset(("a", "b", "c"), np.arange(6), {"v": np.tile(base, (3, 1))})
    np.testing.assert_allclose(cross_sectional_averages(same, ["v"])["v"], base)
    two = PanelDataset(("a", "b"), np.arange(1), {"v": [[1.0], [3.0]]})
    assert cross_sectional_averages(two, ["v"])["v"][0] == 2.0
    with pytest.raises(DataError):
        cross_sectional_averages(two, ["nope"])


def test_dataset_invariants():
    with pytest.raises(DataError):
        PanelDataset(("a",), np.array([1, 3, 2]), {"y": [[1.0, 2.0, 3.0]]})
    with pytest.raises(DataError):
        PanelDataset(("a", "a"), np.arange(2), {"y": np.zeros((2, 2))})
    with pytest.raises(DataError):
        PanelDataset(("a",), np.arange(3), {"y": [[1.0, 2.0]]})
    ds = PanelDataset(("a",), np.arange(3), {"y": [[1.0, np.nan, 3.0]]})
    with pytest.raises(DataError, match="time '1'"):
        ds.column("y")
    assert ds.is_time_series


def test_lag_materialization():
    assert parse_lag("L.cases") == (1, "cases")
    assert parse_lag("L3.x") == (3, "x")
    assert parse_lag("level") == (0, "level")
    ds = PanelDataset.from_series({"x": [1.0, 2.0, 3.0, 4.0]}, time_labels=["a", "b", "c", "d"])
    m = ds.materialize(["x", "L.x", "L2.x"])
    assert m.T == 2
    np.testing.assert_array_equal(m.column("L.x")[0], [2.0, 3.0])
    np.testing.assert_array_equal(m.column("L2.x")[0], [1.0, 2.0])
    np.testing.assert_array_equal(m.column("x")[0], [3.0, 4.0])
    assert m.time_labels == ("c", "d")


def test_deterministic_switches():
    f = Deterministic.from_options
    assert f() is Deterministic.FIXED_EFFECTS
    assert f(breakfixedeffects=True) is Deterministic.FIXED_EFFECTS_BREAKS
    assert f(breakconstant=True) is Deterministic.FIXED_EFFECTS_BREAKS
    assert f(nofixedeffects=True) is Deterministic.CONSTANT
    assert f(nofixedeffects=True, breakconstant=True) is Deterministic.CONSTANT_BREAKS
    assert f(nofixedeffects=True, noconstant=True) is Deterministic.NONE
    with pytest.raises(SpecError):
        f(breakfixedeffects=True, nofixedeffects=True)
    with pytest.raises(SpecError):
        f(breakconstant=True, noconstant=True)


def test_spec_validation():
    with pytest.raises(SpecError):
        ModelSpec("y", break_vars=("x",), nobreak_vars=("x",))
    with pytest.raises(SpecError):
        ModelSpec("y", break_vars=("y",))
    with pytest.raises(SpecError):
        ModelSpec("y", break_vars=("x",), vce="robust")
    with pytest.raises(SpecError):
        ModelSpec("y", break_vars=("x",), trimming=0.3)


def test_fixed_effects_need_breaking_regressor():
    spec = ModelSpec("y", nobreak_vars=("x",), deterministic="fe")
    with pytest.raises(SpecError, match="fixed effects"):
        resolve_layout(spec, 5)
    # a breaking constant alone is a valid model
    lay = resolve_layout(ModelSpec("y", deterministic="constant-breaks"), 5)
    assert lay.q == 1


def test_layout_roles():
    spec = ModelSpec("y", break_vars=("w",), nobreak_vars=("x",), csa_break=("w",),
                     csa_nobreak=("x",), kfactors=("f",), nbkfactors=("g",))
    ts = resolve_layout(spec, 1)
    assert ts.breaking == ("w", "f") and ts.nonbreaking == ("x", "g")
    assert ts.aug_break == () and ts.aug_nobreak == ("_fe",)
    pn = resolve_layout(spec, 4)
    assert pn.breaking == ("w",) and pn.nonbreaking == ("x",)
    assert pn.aug_break == ("csa(w)", "f") and pn.aug_nobreak == ("_fe", "csa(x)", "g")


def test_partition_arithmetic():
    p = BreakPartition((3, 7), 10)
    assert p.s == 2
    assert p.bounds() == [(1, 3), (4, 7), (8, 10)]
    assert p.lengths() == [3, 4, 3]
    assert [p.regime_of(t) for t in (1, 3, 4, 7, 8, 10)] == [1, 1, 2, 2, 3, 3]
    np.testing.assert_array_equal(regime_indicator(p), [1, 1, 1, 2, 2, 2, 2, 3, 3, 3])
    assert p.insert(5).breaks == (3, 5, 7)
    assert p.is_feasible(3) and not p.is_feasible(4)
    with pytest.raises(SpecError):
        BreakPartition((5, 5), 10)
    with pytest.raises(SpecError):
        BreakPartition((10,), 10)
    with pytest.raises(SpecError):
        BreakPartition((1, 5), 20).check_feasible(0.15)


@given(st.integers(10, 60), st.data())
@settings(max_examples=50, deadline=None)
def test_regime_of_matches_indicator(T, data):
    s = data.draw(st.integers(0, 3))
    br = sorted(data.draw(st.sets(st.integers(1, T - 1), min_size=s, max_size=s)))
    p = BreakPartition(tuple(br), T)
    ind = regime_indicator(p)
    assert all(ind[t - 1] == p.regime_of(t) for t in range(1, T + 1))
    assert sum(p.lengths()) == T


def test_column_count_time_series_constant(rng):
    ds = simulate_series(rng, 30)
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant")
    sys_ = build_design(ds, spec, BreakPartition((10, 20), 30))
    assert len(sys_.breaking_columns(1)) == 1
    assert sys_.design.shape[1] == 4
    assert len(sys_.nonbreaking_columns()) == 1
    t = sys_.time_of_row()
    for j, (a, b) in enumerate(sys_.partition.bounds(), start=1):
        col = sys_.design[:, sys_.breaking_columns(j)[0]]
        outside = (t < a - 1) | (t > b - 1)
        assert np.all(col[outside] == 0)


def test_fixed_effects_demean(rng):
    ds = simulate_panel(rng, 4, 20)
    spec = ModelSpec("y", break_vars=("x",))
    sys_ = build_design(ds, spec, BreakPartition((10,), 20))
    Y = sys_.response.reshape(4, 20)
    D = sys_.design.reshape(4, 20, -1)
    assert np.all(np.abs(Y.sum(axis=1)) <= 1e-8 * np.linalg.norm(Y))
    assert np.all(np.abs(D.sum(axis=1)) <= 1e-8 * np.linalg.norm(D))


def test_fixed_effects_with_breaks_demean_by_regime(rng):
    ds = simulate_panel(rng, 3, 20)
    spec = ModelSpec("y", break_vars=("x",), deterministic="fe-breaks")
    sys_ = build_design(ds, spec, BreakPartition((8,), 20))
    Y = sys_.response.reshape(3, 20)
    for sl in (slice(0, 8), slice(8, 20)):
        assert np.all(np.abs(Y[:, sl].sum(axis=1)) <= 1e-8 * np.linalg.norm(Y))


def test_rank_deficiency_names_columns(rng):
    x = rng.standard_normal(30)
    ds = PanelDataset.from_series({"y": rng.standard_normal(30), "a": x, "b": 2 * x})
    spec = ModelSpec("y", break_vars=("a",), nobreak_vars=("b",), deterministic="constant")
    with pytest.raises(RankDeficiencyError) as exc:
        build_design(ds, spec, BreakPartition((), 30))
    assert set(exc.value.columns) >= {"a@1", "b"}


def test_too_many_augmentation_columns(rng):
    ds = simulate_panel(rng, 3, 4)
    spec = ModelSpec("y", break_vars=("x",), csa_break=("x", "y"))
    with pytest.raises(SpecError):
        build_design(ds, spec, BreakPartition((2,), 4))
