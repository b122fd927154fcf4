from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from strucbreak import BreakPartition, ModelSpec, PanelDataset, SpecError
from strucbreak.core import build_design
from strucbreak.regress import chow_f, hac_bandwidth, long_run_scores, ols, ssr_given_breaks, wald_f

from conftest import simulate_panel, simulate_series


def test_ols_matches_hand_computed_normal_equations():
    x1 = np.array([1.0, 2.0, 3.0, 4.0])
    x2 = np.array([1.0, 0.0, 1.0, 0.0])
    y = np.array([2.0, 3.0, 7.0, 8.0])
    ds = PanelDataset.from_series({"y": y, "a": x1, "b": x2})
    sys_ = build_design(ds, ModelSpec("y", break_vars=("a",), nobreak_vars=("b",), deterministic="none"),
                        BreakPartition((), 4))
    fit = ols(sys_)
    # X'X = [[30, 4], [4, 2]], X'y = [61, 9]; det = 44
    b1 = (2 * 61 - 4 * 9) / 44
    b2 = (-4 * 61 + 30 * 9) / 44
    np.testing.assert_allclose(fit.coefficients, [b1, b2], atol=1e-10)
    r = y - b1 * x1 - b2 * x2
    assert fit.ssr == pytest.approx(r @ r, abs=1e-10)
    assert fit.dof_resid == 2
    np.testing.assert_allclose(fit.covariance, (r @ r / 2) * np.array([[2, -4], [-4, 30]]) / 44, atol=1e-10)


def test_hc0_matches_explicit_sandwich():
    x = np.array([1.0, -2.0, 0.5, 3.0, -1.0, 2.0])
    y = np.array([0.3, -1.0, 1.2, 2.0, 0.1, 0.7])
    ds = PanelDataset.from_series({"y": y, "x": x})
    spec = ModelSpec("y", break_vars=("x",), deterministic="constant", vce="hc")
    fit = ols(build_design(ds, spec, BreakPartition((), 6)), "hc")
    X = np.column_stack([x, np.ones(6)])
    A = np.linalg.inv(X.T @ X)
    e = y - X @ (A @ X.T @ y)
    meat = sum(e[t] ** 2 * np.outer(X[t], X[t]) for t in range(6))
    np.testing.assert_allclose(fit.covariance, A @ meat @ A, atol=1e-10)


def test_hac_bandwidth_rule():
    assert hac_bandwidth(100) == 4
    assert hac_bandwidth(200) == 4
    assert hac_bandwidth(50) == 3


def test_long_run_scores_bartlett_weights():
    u = np.array([[[1.0], [2.0], [-1.0]]])
    # lag 0: 1+4+1 = 6; lag 1: 1*2 + 2*(-1) = 0; lag 2: 1*(-1) = -1
    assert long_run_scores(u, 2)[0, 0] == pytest.approx(6 + 2 * (2 / 3) * 0 + 2 * (1 / 3) * -1)
    # lags never cross units
    two = np.array([[[1.0], [1.0]], [[1.0], [1.0]]])
    assert long_run_scores(two, 1)[0, 0] == pytest.approx(4 + 2 * 0.5 * 2)


def test_hac_and_np_shapes(rng):
    ds = simulate_panel(rng, 6, 40, breaks=(20,), slopes=(1.0, 0.0))
    for vce in ("hac", "np", "hc"):
        spec = ModelSpec("y", break_vars=("x",), vce=vce)
        fit = ols(build_design(ds, spec, BreakPartition((20,), 40)), vce)
        assert fit.covariance.shape == (2, 2)
        assert np.all(np.diag(fit.covariance) > 0)


def test_np_requires_panel(rng):
    ds = simulate_series(rng, 30)
    spec = ModelSpec("y", break_vars=("x1",), vce="np")
    with pytest.raises(SpecError):
        ols(build_design(ds, spec, BreakPartition((), 30)), "np")


def two_fit_chow(y, X, partition):
    """Restricted (no break) and unrestricted (regime-wise) OLS, classical F."""
    T = len(y)

    def ssr(M):
        b, *_ = np.linalg.lstsq(M, y, rcond=None)
        r = y - M @ b
        return r @ r

    blocks = []
    for a, b in partition.bounds():
        m = np.zeros((T, 1))
        m[a - 1 : b] = 1
        blocks.append(X * m)
    Xu = np.hstack(blocks)
    ssr_r, ssr_u = ssr(X), ssr(Xu)
    n = Xu.shape[1] - X.shape[1]
    dof = T - Xu.shape[1]
    return ((ssr_r - ssr_u) / n) / (ssr_u / dof), n, dof


def test_chow_matches_restricted_unrestricted_ratio(rng):
    ds = simulate_series(rng, 30, breaks=(15,), slopes=(1.0, 0.3))
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks")
    part = BreakPartition((15,), 30)
    out = chow_f(ds, spec, part)
    X = np.column_stack([ds.column("x1")[0], np.ones(30)])
    F, n, dof = two_fit_chow(ds.column("y")[0], X, part)
    assert out.statistic == pytest.approx(F, rel=1e-8)
    assert out.df == (n, dof)
    assert out.p_value == pytest.approx(stats.f.sf(F, n, dof), rel=1e-8)
    assert out.info["df_s"] == (1, dof)


def test_two_segment_ssr_matches_hand_rolled_fits(rng):
    ds = simulate_series(rng, 20)
    spec = ModelSpec("y", break_vars=("x1",), deterministic="constant-breaks")
    y, x = ds.column("y")[0], ds.column("x1")[0]
    for tb in (10, 11):
        total = 0.0
        for sl in (slice(0, tb), slice(tb, 20)):
            X = np.column_stack([x[sl], np.ones(sl.stop - sl.start)])
            b = np.linalg.solve(X.T @ X, X.T @ y[sl])
            total += float(((y[sl] - X @ b) ** 2).sum())
        assert ssr_given_breaks(ds, spec, BreakPartition((tb,), 20)) == pytest.approx(total, rel=1e-10)


def test_exact_fit_conventions():
    x = np.arange(1.0, 21.0)
    y = np.where(x <= 10, 2 * x, -x)
    ds = PanelDataset.from_series({"y": y, "x": x})
    spec = ModelSpec("y", break_vars=("x",), deterministic="none")
    part = BreakPartition((10,), 20)
    fit = ols(build_design(ds, spec, part))
    assert wald_f(fit, build_design(ds, spec, part), [(1, 2)])[0] == float("inf")
    ds2 = PanelDataset.from_series({"y": 2 * x, "x": x})
    sys2 = build_design(ds2, spec, part)
    assert wald_f(ols(sys2), sys2, [(1, 2)])[0] == 0.0


def test_chow_rejects_infeasible_or_empty_partition(rng):
    ds = simulate_series(rng, 40)
    spec = ModelSpec("y", break_vars=("x1",))
    with pytest.raises(SpecError):
        chow_f(ds, spec, BreakPartition((), 40))
    with pytest.raises(SpecError):
        chow_f(ds, spec, BreakPartition((2,), 40))
