"""Break-date estimation by minimising the SSR over trimmed partitions.

Pure structural change is solved exactly by one dynamic-programming pass
over a table of segment SSRs. Partial change (non-breaking regressors or
non-breaking unit effects) alternates between a joint fit at the current
partition and a pure-change DP on the response net of the non-breaking
contribution.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    BreakPartition,
    ModelSpec,
    PanelDataset,
    RegressionSystem,
    SpecError,
    build_design,
    layout_arrays,
    max_breaks,
    min_segment_length,
    resolve_layout,
)
from .regress import FitResult, ols

log = logging.getLogger(__name__)

ORACLE_LIMIT = 10**7


class ConvergenceError(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SegmentCostTable:
    """``cost[a-1, b-1]`` is the SSR of one regime spanning periods a..b."""

    cost: np.ndarray
    deficient: np.ndarray
    h: int
    n_evals: int

    @property
    def T(self) -> int:
        return self.cost.shape[0]

    def __call__(self, a: int, b: int) -> float:
        return float(self.cost[a - 1, b - 1])


def _scaled(A):
    scale = np.sqrt((A**2).mean(axis=(0, 1)))
    scale[scale == 0] = 1.0
    return A / scale, scale[-1]


def segment_costs(data: PanelDataset, spec: ModelSpec, h: int | None = None,
                  response=None) -> SegmentCostTable:
    """SSR of every admissible single-regime fit, pooled over units.

    Only the breaking structure is used: breaking regressors with common
    coefficients and, in panels, regime-specific unit augmentation.
    Non-breaking components must already be removed from ``response``.
    """
    data = data.materialize(spec.variables())
    layout = resolve_layout(spec, data.N)
    B, _, Zb, _ = layout_arrays(data, layout)
    y = data.column(spec.depvar) if response is None else np.asarray(response, dtype=float)
    y = y.reshape(data.N, data.T)
    if h is None:
        h = min_segment_length(spec.trimming, data.T)
    A = np.concatenate([Zb, B, y[:, :, None]], axis=-1)
    A, yscale = _scaled(np.ascontiguousarray(A, dtype=np.float64))
    cost, deficient, n_evals = kernels.segment_costs(A, Zb.shape[-1], int(h))
    return SegmentCostTable(cost * yscale**2, deficient, int(h), int(n_evals))


def _check_feasible(T, s, h):
    if s < 0:
        raise SpecError("number of breaks must be non-negative")
    if (s + 1) * h > T:
        raise SpecError(f"{s} breaks with minimum regime length {h} need at least {(s + 1) * h} periods, have {T}")


def optimal_partition(costs: SegmentCostTable, s: int, h: int | None = None, *, stats: dict | None = None):
    """Feasible partition with minimal total cost, and that cost.

    Ties go to the lexicographically smallest break vector.
    """
    h = costs.h if h is None else int(h)
    T = costs.T
    _check_feasible(T, s, h)
    G, n_updates = kernels.dp_table(costs.cost, s, h)
    breaks = kernels.backtrack(costs.cost, G, s, h)
    if stats is not None:
        stats["dp_updates"] = int(n_updates)
        stats["segment_evals"] = costs.n_evals
        stats["path_costs"] = [float(G[k, 0]) for k in range(s + 1)]
    return BreakPartition(tuple(breaks), T), float(G[s, 0])


def n_feasible_partitions(T: int, s: int, h: int) -> int:
    slack = T - (s + 1) * h
    return 0 if slack < 0 else math.comb(slack + s, s)


def grid_search_oracle(costs: SegmentCostTable, s: int, h: int | None = None):
    """Exhaustive minimum over all feasible partitions (verification only)."""
    h = costs.h if h is None else int(h)
    T = costs.T
    _check_feasible(T, s, h)
    if n_feasible_partitions(T, s, h) > ORACLE_LIMIT:
        raise SpecError("too many partitions for exhaustive search; use optimal_partition")
    c = costs.cost
    best, best_breaks = math.inf, None
    for combo in itertools.combinations(range(1, T), s):
        edges = (0, *combo, T)
        if any(edges[j + 1] - edges[j] < h for j in range(s + 1)):
            continue
        # sum right to left, the same association the DP uses
        total = c[edges[s], T - 1]
        for j in range(s - 1, -1, -1):
            total = c[edges[j], edges[j + 1] - 1] + total
        if total < best:
            best, best_breaks = total, combo
    return BreakPartition(tuple(best_breaks), T), float(best)


@dataclass
class BreakEstimates:
    partition: BreakPartition
    labels: list
    fit: FitResult
    system: RegressionSystem
    ssr_path: list
    iterations: int
    converged: bool
    spec: ModelSpec
    data: PanelDataset = field(repr=False)

    @property
    def ssr(self) -> float:
        return self.fit.ssr

    @property
    def breaks(self):
        return self.partition.breaks

    def regime_table(self):
        """Per-regime breaking coefficients with standard errors."""
        se = self.fit.std_errors
        out = []
        for j, (a, b) in enumerate(self.partition.bounds(), start=1):
            coefs = {}
            for k in self.system.breaking_columns(j):
                coefs[self.fit.column_map[k].name] = {"coef": float(self.fit.coefficients[k]), "se": float(se[k])}
            out.append({"regime": j, "first": a, "last": b,
                        "first_label": self.data.label(a), "last_label": self.data.label(b),
                        "coefficients": coefs})
        return out

    def nonbreaking_table(self):
        se = self.fit.std_errors
        return {self.fit.column_map[k].name: {"coef": float(self.fit.coefficients[k]), "se": float(se[k])}
                for k in self.system.nonbreaking_columns()}


def nonbreaking_part(system: RegressionSystem, fit: FitResult) -> np.ndarray:
    """Fitted contribution of non-breaking regressors and unit effects, (N, T)."""
    N, T = system.n_units, system.n_times
    X = system.raw_design
    coef = fit.coefficients
    nb = system.nonbreaking_columns()
    out = np.zeros((N, T))
    if nb:
        out += X[:, :, nb] @ coef[nb]
    kn = system.n_aug_nobreak
    if kn:
        rest = system.raw_response - X @ coef
        for i in range(N):
            g, *_ = np.linalg.lstsq(system.aug[i], rest[i], rcond=None)
            out[i] += system.aug[i, :, :kn] @ g[:kn]
    return out


def _fit(data, spec, partition):
    system = build_design(data, spec, partition)
    vce = spec.vce if system.dof_resid > 0 else "hc"
    return system, ols(system, vce)


def _iterate(data, spec, s, h, start, max_iter, tol):
    partition = start
    system, fit = _fit(data, spec, partition)
    path = [fit.ssr]
    best = (fit.ssr, partition, system, fit)
    for it in range(1, max_iter + 1):
        adjusted = data.column(spec.depvar) - nonbreaking_part(system, fit)
        costs = segment_costs(data, spec, h, response=adjusted)
        new_partition, _ = optimal_partition(costs, s, h)
        if new_partition == partition:
            return best, path, it, True
        partition = new_partition
        system, fit = _fit(data, spec, partition)
        prev = path[-1]
        path.append(fit.ssr)
        if fit.ssr < best[0]:
            best = (fit.ssr, partition, system, fit)
        if abs(prev - fit.ssr) <= tol * max(abs(prev), 1e-300):
            return best, path, it, True
    return best, path, max_iter, False


def estimate_breaks(data: PanelDataset, spec: ModelSpec, s: int, *,
                    max_iter: int = 100, tol: float = 1e-8) -> BreakEstimates:
    """Least-squares break dates for ``s`` breaks plus the joint fit."""
    data = data.materialize(spec.variables())
    layout = resolve_layout(spec, data.N)
    T = data.T
    h = min_segment_length(spec.trimming, T)
    if s > max_breaks(spec.trimming):
        raise SpecError(f"at most {max_breaks(spec.trimming)} breaks are allowed with trimming {spec.trimming}")
    _check_feasible(T, s, h)

    if s == 0:
        partition = BreakPartition((), T)
        system, fit = _fit(data, spec, partition)
        return BreakEstimates(partition, [], fit, system, [fit.ssr], 0, True, spec, data)

    if not layout.partial:
        costs = segment_costs(data, spec, h)
        partition, _ = optimal_partition(costs, s, h)
        system, fit = _fit(data, spec, partition)
        return BreakEstimates(partition, partition.labels(data), fit, system, [fit.ssr], 1, True, spec, data)

    # start 1: DP on the raw response ignoring non-breaking terms;
    # start 2: DP after removing the no-break fit of the non-breaking terms
    raw_start, _ = optimal_partition(segment_costs(data, spec, h), s, h)
    runs = [_iterate(data, spec, s, h, raw_start, max_iter, tol)]
    system0, fit0 = _fit(data, spec, BreakPartition((), T))
    adjusted = data.column(spec.depvar) - nonbreaking_part(system0, fit0)
    alt_start, _ = optimal_partition(segment_costs(data, spec, h, response=adjusted), s, h)
    if alt_start != raw_start:
        runs.append(_iterate(data, spec, s, h, alt_start, max_iter, tol))
    (ssr, partition, system, fit), path, iterations, converged = min(runs, key=lambda r: r[0][0])
    est = BreakEstimates(partition, partition.labels(data), fit, system, path, iterations, converged, spec, data)
    if not converged:
        raise ConvergenceError(f"break-date iteration did not converge in {max_iter} steps", est)
    return est
