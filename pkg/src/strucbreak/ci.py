"""Confidence intervals for estimated break dates.

Under shrinking shifts, ``L * (T_hat - T_0)`` converges to the argmax of a
two-sided Brownian motion with drift ``-|v|/2``, where
``L = (d'Qd)^2 / (d'Omega d)``, ``d`` is the coefficient shift, ``Q`` the
per-period second moment of the breaking regressors and ``Omega`` the
long-run variance of their scores. The interval is
``T_hat -/+ ceil(c / L)`` with ``c`` the matching quantile of that argmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import norm

from .core import SpecError
from .dpsearch import BreakEstimates
from .regress import EXACT_FIT_TOL, hac_bandwidth, long_run_scores

LEVELS = (0.90, 0.95, 0.99)


def argmax_cdf(x: float) -> float:
    """CDF of argmax_v {W(v) - |v|/2} for two-sided standard Brownian motion."""
    if x < 0:
        return 1.0 - argmax_cdf(-x)
    if x == 0:
        return 0.5
    r = math.sqrt(x)
    return (1.0 + math.sqrt(x / (2.0 * math.pi)) * math.exp(-x / 8.0)
            - 0.5 * (x + 5.0) * norm.cdf(-r / 2.0)
            + 1.5 * math.exp(x) * norm.cdf(-1.5 * r))


def argmax_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -argmax_quantile(1.0 - p)
    hi = 1.0
    while argmax_cdf(hi) < p:
        hi *= 2.0
    return float(optimize.brentq(lambda x: argmax_cdf(x) - p, 0.0, hi, xtol=1e-12))


@dataclass(frozen=True)
class BreakInterval:
    break_index: int
    lower_index: int
    upper_index: int
    lower_label: str
    upper_label: str
    level: float
    scale: float  # the L of the module docstring; 0 when degenerate
    degenerate: bool = False

    def __post_init__(self):
        if not self.lower_index <= self.break_index <= self.upper_index:
            raise ValueError("interval does not contain the break date")

    def as_dict(self):
        return {"break_index": self.break_index, "lower_index": self.lower_index,
                "upper_index": self.upper_index, "lower_label": self.lower_label,
                "upper_label": self.upper_label, "level": self.level,
                "degenerate": self.degenerate}


def _check_level(level):
    lv = float(level)
    if lv > 1:
        lv /= 100.0
    for L in LEVELS:
        if abs(lv - L) < 1e-9:
            return L
    raise SpecError(f"confidence level must be one of {LEVELS}")


def _breaking_regressors(est: BreakEstimates):
    # the transformed breaking regressors, summed over their regime copies
    sys = est.system
    q = sys.q
    W = np.zeros((sys.n_rows, q))
    for j in range(1, sys.s + 2):
        W += sys.design[:, sys.breaking_columns(j)]
    return W


def _moments(W, e, rows, n_units, n_times, vce, dof, ssr):
    """(Q, Omega) per period over the selected rows."""
    Wr = W * rows[:, None]
    periods = rows.reshape(n_units, n_times).any(axis=0).sum()
    Q = Wr.T @ Wr / periods
    if vce == "ssr":
        return Q, (ssr / dof) * Q
    scores = (Wr * e[:, None]).reshape(n_units, n_times, -1)
    if vce == "hac":
        S = long_run_scores(scores, hac_bandwidth(n_times))
    else:
        S = np.einsum("ntk,ntl->kl", scores, scores)
    return Q, S / periods


def break_ci(est: BreakEstimates, level: float = 0.95, *, regime_specific: bool = False):
    """One interval per estimated break, clamped to 1..T."""
    level = _check_level(level)
    sys, fit, data = est.system, est.fit, est.data
    T = sys.n_times
    c = argmax_quantile(0.5 + level / 2.0)
    W = _breaking_regressors(est)
    e = fit.residuals
    reg = np.tile(np.repeat(np.arange(1, sys.s + 2), est.partition.lengths()), sys.n_units)
    everything = np.ones(sys.n_rows, dtype=bool)
    Q, Om = _moments(W, e, everything, sys.n_units, T, fit.vce, fit.dof_resid, fit.ssr)
    exact = fit.ssr <= EXACT_FIT_TOL * max(float(sys.response @ sys.response), 1e-300)
    out = []
    for j, tb in enumerate(est.partition.breaks, start=1):
        d = fit.coefficients[sys.breaking_columns(j + 1)] - fit.coefficients[sys.breaking_columns(j)]
        if regime_specific:
            sides = [_moments(W, e, reg == r, sys.n_units, T, fit.vce, fit.dof_resid, fit.ssr)
                     for r in (j, j + 1)]
        else:
            sides = [(Q, Om), (Q, Om)]
        coef_scale = max(float(np.abs(fit.coefficients).max(initial=0.0)), 1e-300)
        if np.abs(d).max(initial=0.0) <= 1e-8 * coef_scale:
            # no shift to speak of: the date is not identified
            out.append(BreakInterval(tb, 1, T, data.label(1), data.label(T), level, 0.0, True))
            continue
        scales = []
        for Qs, Oms in sides:
            num = float(d @ Qs @ d)
            den = float(d @ Oms @ d)
            if exact:
                scales.append(math.inf)
            elif den > 0:
                scales.append(num * num / den)
            else:
                scales.append(math.inf if num > 0 else 0.0)
        if min(scales) < 1e-12:
            out.append(BreakInterval(tb, 1, T, data.label(1), data.label(T), level, 0.0, True))
            continue
        # at least one period on each side, also for exact fits where c / L = 0
        lo = max(1, tb - max(1, math.ceil(c / scales[0])))
        hi = min(T, tb + max(1, math.ceil(c / scales[1])))
        out.append(BreakInterval(tb, lo, hi, data.label(lo), data.label(hi), level, min(scales)))
    return out
