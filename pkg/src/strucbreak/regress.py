"""Least squares, covariance estimators and the known-break Chow test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .core import (
    BreakPartition,
    ModelSpec,
    PanelDataset,
    RegressionSystem,
    SpecError,
    TestOutcome,
    build_design,
)

# ratio of SSR to |y|^2 below which a fit is treated as exact
EXACT_FIT_TOL = 1e-20


@dataclass
class FitResult:
    coefficients: np.ndarray
    residuals: np.ndarray
    ssr: float
    dof_resid: int
    covariance: np.ndarray
    vce: str
    column_map: tuple
    xtx_inv: np.ndarray

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def regime_coefficients(self, regime: int) -> dict:
        return {c.name: float(b) for c, b in zip(self.column_map, self.coefficients)
                if c.role == "break" and c.regime == regime}

    def table(self):
        rows = []
        for c, b, se in zip(self.column_map, self.coefficients, self.std_errors):
            rows.append({"variable": c.name, "regime": c.regime, "coef": float(b), "se": float(se)})
        return rows


def hac_bandwidth(T: int) -> int:
    """Newey-West rule of thumb floor(4 (T/100)^(2/9))."""
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def ols(system: RegressionSystem, vce: str = "ssr", bandwidth: int | None = None) -> FitResult:
    X, y = system.design, system.response
    k = X.shape[1]
    if k == 0:
        resid = y.copy()
        empty = np.zeros((0, 0))
        return FitResult(np.zeros(0), resid, float(resid @ resid), system.dof_resid, empty,
                         vce, system.column_map, empty)
    Q, R = np.linalg.qr(X)
    coef = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ coef
    Rinv = linalg.solve_triangular(R, np.eye(k))
    xtx_inv = Rinv @ Rinv.T
    fit = FitResult(coef, resid, float(resid @ resid), system.dof_resid, np.zeros((k, k)),
                    vce, system.column_map, xtx_inv)
    fit.covariance = covariance(fit, system, vce, bandwidth=bandwidth)
    return fit


def _unit_scores(system, resid):
    N, T = system.n_units, system.n_times
    return (system.design * resid[:, None]).reshape(N, T, -1)


def long_run_scores(scores: np.ndarray, bandwidth: int) -> np.ndarray:
    """Bartlett-weighted sum of score autocovariances within each unit.

    ``scores`` has shape (N, T, k); lags never cross unit boundaries.
    """
    S = np.einsum("ntk,ntl->kl", scores, scores)
    for lag in range(1, bandwidth + 1):
        w = 1.0 - lag / (bandwidth + 1.0)
        G = np.einsum("ntk,ntl->kl", scores[:, lag:], scores[:, :-lag])
        S += w * (G + G.T)
    return S


def covariance(fit: FitResult, system: RegressionSystem, vce: str,
               bandwidth: int | None = None) -> np.ndarray:
    """Coefficient covariance under ``vce`` in {ssr, hc, hac, np}."""
    A = fit.xtx_inv
    if vce == "ssr":
        if fit.dof_resid <= 0:
            raise SpecError("no residual degrees of freedom left")
        return (fit.ssr / fit.dof_resid) * A
    if vce == "hc":
        u = system.design * fit.residuals[:, None]
        V = A @ (u.T @ u) @ A
    elif vce == "hac":
        L = hac_bandwidth(system.n_times) if bandwidth is None else int(bandwidth)
        V = A @ long_run_scores(_unit_scores(system, fit.residuals), L) @ A
    elif vce == "np":
        V = _pesaran_np(system)
    else:
        raise SpecError(f"unknown vce {vce!r}")
    return 0.5 * (V + V.T)


def _pesaran_np(system: RegressionSystem) -> np.ndarray:
    # nonparametric estimator from the dispersion of unit-by-unit estimates
    N, T = system.n_units, system.n_times
    if N < 2:
        raise SpecError("vce np needs a panel (N > 1)")
    k = system.design.shape[1]
    D = system.design.reshape(N, T, k)
    y = system.response.reshape(N, T)
    moments = np.einsum("ntk,ntl->nkl", D, D) / T
    b = np.stack([np.linalg.lstsq(D[i], y[i], rcond=None)[0] for i in range(N)])
    dev = b - b.mean(axis=0)
    md = np.einsum("nkl,nl->nk", moments, dev)
    Rm = md.T @ md / (N - 1)
    Psi_inv = np.linalg.pinv(moments.mean(axis=0))
    return Psi_inv @ Rm @ Psi_inv / N


def ssr_given_breaks(data: PanelDataset, spec: ModelSpec, partition: BreakPartition) -> float:
    """SSR of the model estimated with the given break dates."""
    system = build_design(data, spec, partition)
    return ols(system, "ssr" if system.dof_resid > 0 else "hc").ssr


def regime_contrasts(system: RegressionSystem, pairs) -> np.ndarray:
    """Restriction matrix for delta_a = delta_b over every breaking variable."""
    k = system.design.shape[1]
    rows = []
    for a, b in pairs:
        ca, cb = system.breaking_columns(a), system.breaking_columns(b)
        for ia, ib in zip(ca, cb):
            r = np.zeros(k)
            r[ia], r[ib] = 1.0, -1.0
            rows.append(r)
    return np.array(rows).reshape(len(rows), k)


def wald_f(fit: FitResult, system: RegressionSystem, pairs) -> tuple[float, int]:
    """Wald statistic divided by the number of restrictions (an F form)."""
    Rm = regime_contrasts(system, pairs)
    n = Rm.shape[0]
    y2 = float(system.response @ system.response)
    if fit.ssr <= EXACT_FIT_TOL * max(y2, 1e-300):
        # exact fit: zero if the restriction holds, otherwise unbounded
        d = Rm @ fit.coefficients
        scale = max(np.abs(fit.coefficients).max(initial=0.0), 1e-300)
        return (0.0 if np.abs(d).max(initial=0.0) <= 1e-8 * scale else math.inf), n
    d = Rm @ fit.coefficients
    V = Rm @ fit.covariance @ Rm.T
    try:
        stat = float(d @ np.linalg.solve(V, d))
    except np.linalg.LinAlgError:
        stat = float(d @ np.linalg.pinv(V) @ d)
    return stat / n, n


def chow_f(data: PanelDataset, spec: ModelSpec, partition: BreakPartition) -> TestOutcome:
    """F test of no breaks against breaks at known dates."""
    if partition.s < 1:
        raise SpecError("the known-break test needs at least one break")
    data = data.materialize(spec.variables())
    partition.check_feasible(spec.trimming)
    system = build_design(data, spec, partition)
    fit = ols(system, spec.vce)
    pairs = [(j, j + 1) for j in range(1, partition.s + 1)]
    stat, n_restr = wald_f(fit, system, pairs)
    dof = system.dof_resid
    p = float(stats.f.sf(stat, n_restr, dof)) if math.isfinite(stat) else 0.0
    # p-value with one numerator degree of freedom per break, reported alongside
    p_s = float(stats.f.sf(stat, partition.s, dof)) if math.isfinite(stat) else 0.0
    crit = tuple(float(stats.f.ppf(lv, n_restr, dof)) for lv in (0.90, 0.95, 0.99))
    return TestOutcome(
        hypothesis="known breaks",
        statistic=stat,
        critical=crit,
        p_value=p,
        attained_partition=partition,
        df=(n_restr, dof),
        info={"p_value_df_s": p_s, "df_s": (partition.s, dof), "vce": spec.vce, "ssr": fit.ssr},
    )
