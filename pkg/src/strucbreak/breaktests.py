"""Tests for unknown break dates: sup F(s), double maximum, F(s+1|s), and the
sequential estimate of the number of breaks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .core import (
    BreakPartition,
    ModelSpec,
    PanelDataset,
    SpecError,
    TestOutcome,
    build_design,
    max_breaks,
    resolve_layout,
)
from .critical_values import ALPHAS, alpha_from_level, default_table, snap_alpha
from .dpsearch import estimate_breaks
from .regress import ols, wald_f


def _q(data, spec):
    return resolve_layout(spec, data.N).q


def _check_s(spec, s, lo=1):
    top = max_breaks(spec.trimming)
    if not lo <= s <= top:
        raise SpecError(f"number of breaks must lie in {lo}..{top} for trimming {spec.trimming}")


def _wald_at(data, spec, partition, pairs):
    system = build_design(data, spec, partition)
    fit = ols(system, spec.vce)
    stat, _ = wald_f(fit, system, pairs)
    return stat, system.dof_resid


def sup_f(data: PanelDataset, spec: ModelSpec, s: int, *, table=None) -> TestOutcome:
    """sup F(s): no breaks against exactly ``s`` breaks at unknown dates.

    The F statistic is evaluated at the SSR-minimising partition. With the
    homoskedastic covariance this is the supremum over all trimmed
    partitions; with robust covariances it is the statistic at the
    least-squares break dates.
    """
    data = data.materialize(spec.variables())
    _check_s(spec, s)
    est = estimate_breaks(data, spec, s)
    pairs = [(j, j + 1) for j in range(1, s + 1)]
    stat, dof = _wald_at(data, spec, est.partition, pairs)
    q = _q(data, spec)
    table = table or default_table()
    return TestOutcome(
        hypothesis=f"supF({s})",
        statistic=stat,
        critical=table.criticals("supF", q, s, spec.trimming),
        attained_partition=est.partition,
        df=(s * q, dof),
        info={"q": q, "evaluated_at": "least-squares break dates", "vce": spec.vce},
    )


def double_max(data: PanelDataset, spec: ModelSpec, s_max: int, *, s_min: int = 1,
               weighted: bool = False, level: float = 0.95, table=None) -> TestOutcome:
    """UDmax / WDmax: no breaks against between ``s_min`` and ``s_max`` breaks."""
    data = data.materialize(spec.variables())
    _check_s(spec, s_max)
    if not 1 <= s_min <= s_max:
        raise SpecError("the lower bound on breaks must lie in 1..s_max")
    table = table or default_table()
    q = _q(data, spec)
    per_s = {s: sup_f(data, spec, s, table=table) for s in range(s_min, s_max + 1)}
    info = {"q": q, "supF": {s: o.statistic for s, o in per_s.items()}, "s_min": s_min, "s_max": s_max}
    if weighted:
        alpha = snap_alpha(alpha_from_level(level))
        c1 = table.lookup("supF", q, 1, spec.trimming, alpha)
        weights = {s: c1 / table.lookup("supF", q, s, spec.trimming, alpha) for s in per_s}
        info.update(weights=weights, weight_level=round(1 - alpha, 2))
    else:
        weights = {s: 1.0 for s in per_s}
    scored = {s: weights[s] * o.statistic for s, o in per_s.items()}
    best_s = max(scored, key=lambda s: (scored[s], -s))
    kind = "WDmax" if weighted else "Dmax"
    crit = table.criticals(kind, q, s_max, spec.trimming) if s_min == 1 else None
    if crit is None and s_min != 1:
        info["note"] = "critical values are tabulated only for a lower bound of 1 break"
    info["argmax_s"] = best_s
    return TestOutcome(
        hypothesis=kind,
        statistic=scored[best_s],
        critical=crit,
        attained_partition=per_s[best_s].attained_partition,
        info=info,
    )


def _sub_trim(eps, length, q):
    return max(math.ceil(round(eps * length, 9)), q + 1)


def f_next(data: PanelDataset, spec: ModelSpec, s: int, *, table=None) -> TestOutcome:
    """F(s+1|s): ``s`` estimated breaks against one more inside some regime."""
    data = data.materialize(spec.variables())
    top = max_breaks(spec.trimming)
    if not 0 <= s < top:
        raise SpecError(f"F(s+1|s) needs 0 <= s < {top} for trimming {spec.trimming}")
    q = _q(data, spec)
    T = data.T
    base = estimate_breaks(data, spec, s).partition if s else BreakPartition((), T)
    best = (-math.inf, None, None)
    dof = None
    for j, (first, last) in enumerate(base.bounds(), start=1):
        length = last - first + 1
        m = _sub_trim(spec.trimming, length, q)
        for tau in range(first - 1 + m, last - m + 1):
            cand = base.insert(tau)
            stat, d = _wald_at(data, spec, cand, [(j, j + 1)])
            if stat > best[0]:
                best, dof = (stat, j, cand), d
    if best[1] is None:
        raise SpecError("no regime is long enough to admit an additional break")
    stat, regime, cand = best
    table = table or default_table()
    return TestOutcome(
        hypothesis=f"F({s + 1}|{s})",
        statistic=stat,
        critical=table.criticals("FnextGivenS", q, s, spec.trimming),
        attained_partition=cand,
        df=(q, dof),
        info={"q": q, "null_partition": base.breaks, "regime": regime,
              "tau": cand.breaks[regime - 1], "vce": spec.vce},
    )


@dataclass
class SequentialResult:
    n_breaks: int
    level: float
    steps: list = field(default_factory=list)
    s_max: int = 0

    def counts_by_level(self):
        """Estimated number of breaks implied by the same trace at 90/95/99%."""
        out = {}
        for lvl in (0.90, 0.95, 0.99):
            n = 0
            for step in self.steps:
                if step.critical is not None and step.rejects_at(lvl):
                    n += 1
                else:
                    break
            out[lvl] = min(n, self.s_max)
        return out


def sequential_count(data: PanelDataset, spec: ModelSpec, s_max: int | None = None,
                     level: float = 0.95, *, table=None) -> SequentialResult:
    """Apply F(s+1|s) for s = 0, 1, ... until it fails to reject."""
    data = data.materialize(spec.variables())
    top = max_breaks(spec.trimming)
    s_max = top if s_max is None else int(s_max)
    _check_s(spec, s_max)
    alpha = snap_alpha(alpha_from_level(level))
    level = round(1 - alpha, 2)
    table = table or default_table()
    result = SequentialResult(0, level, [], s_max)
    for s in range(0, s_max):
        try:
            outcome = f_next(data, spec, s, table=table)
        except SpecError as exc:
            warnings.warn(f"sequential procedure stopped at {s} breaks: {exc}", stacklevel=2)
            break
        result.steps.append(outcome)
        if outcome.critical is None:
            raise SpecError(f"no critical values for F({s + 1}|{s}) with q={outcome.info['q']}")
        if not outcome.rejects_at(level):
            break
        result.n_breaks = s + 1
    return result


__all__ = ["ALPHAS", "SequentialResult", "double_max", "f_next", "sequential_count", "sup_f"]
