"""Critical values for the sup-F, double-maximum and sequential tests.

The shipped table (``data/critical_values.csv``) holds quantiles of the
limiting null distributions, obtained by simulating discretised Brownian
motions and maximising the Wald functional over every trimmed partition
(see :func:`simulate_limit_draws`). :func:`simulate_critical_values` reruns
that simulation so individual entries can be re-derived and checked.
"""

from __future__ import annotations

import csv
import hashlib
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import kernels
from .core import SUPPORTED_TRIMMING, check_trimming, max_breaks

KINDS = ("supF", "Dmax", "WDmax", "FnextGivenS")
ALPHAS = (0.10, 0.05, 0.01)
LEVELS = (0.90, 0.95, 0.99)

TABLE_FILE = "critical_values.csv"


def alpha_from_level(level: float) -> float:
    """Map a confidence level (0.95 or 95) or significance (0.05) to alpha."""
    x = float(level)
    if x > 1.0:
        x /= 100.0
    return round(1.0 - x, 10) if x >= 0.5 else x


def snap_alpha(alpha: float) -> float:
    """Closest tabulated significance level, warning when it differs."""
    best = min(ALPHAS, key=lambda a: abs(a - alpha))
    if abs(best - alpha) > 1e-9:
        warnings.warn(
            f"no critical values at level {1 - alpha:.4g}; using closest level {1 - best:.2f}",
            stacklevel=2,
        )
    return best


# --------------------------------------------------------------------------
# simulation
# --------------------------------------------------------------------------


def simulate_limit_draws(q, eps, reps, grid=1000, seed=0, s_max=None):
    """Draws of sup F(s), s = 1..s_max, from the limiting null distribution.

    Each replication uses its own child seed spawned from ``seed``, so any
    subset of replications can be reproduced independently and results
    do not depend on how the loop is split.

    Returns an array of shape ``(reps, s_max)``.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    eps = check_trimming(eps)
    s_max = max_breaks(eps) if s_max is None else int(s_max)
    h = math.ceil(round(eps * grid, 9))
    if (s_max + 1) * h > grid:
        raise ValueError("grid too coarse for the requested number of breaks")
    children = np.random.SeedSequence(seed).spawn(reps)
    out = np.empty((reps, s_max))
    buf = np.empty((grid, grid))
    denom = q * np.arange(1, s_max + 1)
    for r, child in enumerate(children):
        e = np.random.default_rng(child).standard_normal((grid, q))
        out[r] = kernels.limit_sup_values(e, h, s_max, buf) / denom
    return out


def quantile_with_se(x, p):
    """Empirical quantile and an order-statistic Monte Carlo standard error."""
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    value = float(np.quantile(x, p))
    half = math.sqrt(n * p * (1.0 - p))
    lo = int(max(0, math.floor(n * p - half) - 1))
    hi = int(min(n - 1, math.ceil(n * p + half) - 1))
    se = float(x[hi] - x[lo]) / 2.0
    return value, se


def _wdmax_draws(draws, s_max, alpha):
    crit = np.quantile(draws[:, :s_max], 1.0 - alpha, axis=0)
    weights = crit[0] / crit
    return (draws[:, :s_max] * weights).max(axis=1)


def table_rows_from_draws(draws, q, eps, grid):
    """Every table entry (all kinds) derivable from one set of draws."""
    reps, s_top = draws.shape
    rows = []

    def add(kind, s, alpha, sample, p):
        value, se = quantile_with_se(sample, p)
        rows.append(dict(kind=kind, q=q, s=s, epsilon=eps, alpha=alpha,
                         value=value, mc_se=se, reps=reps, grid=grid))

    for alpha in ALPHAS:
        for s in range(1, s_top + 1):
            add("supF", s, alpha, draws[:, s - 1], 1.0 - alpha)
        for s_max in range(1, s_top + 1):
            add("Dmax", s_max, alpha, draws[:, :s_max].max(axis=1), 1.0 - alpha)
            add("WDmax", s_max, alpha, _wdmax_draws(draws, s_max, alpha), 1.0 - alpha)
        for s in range(0, s_top):
            # the s+1 regime-wise suprema are asymptotically independent copies
            # of sup F(1), so the critical value is a quantile of sup F(1)
            add("FnextGivenS", s, alpha, draws[:, 0], (1.0 - alpha) ** (1.0 / (s + 1)))
    return rows


def simulate_critical_values(kind, q, s, eps, reps=5000, grid=1000, seed=0):
    """Simulated 90/95/99% critical values for one table key.

    Returns ``{"c90", "c95", "c99", "se90", "se95", "se99"}``.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown statistic kind {kind!r}; expected one of {KINDS}")
    if reps < 1000:
        raise ValueError("reps must be at least 1000")
    if grid < 1000:
        raise ValueError("grid must be at least 1000")
    eps = check_trimming(eps)
    top = max_breaks(eps)
    need = 1 if kind == "FnextGivenS" else s
    if kind == "FnextGivenS" and not 0 <= s < top:
        raise ValueError(f"s must lie in 0..{top - 1} for {kind}")
    if kind != "FnextGivenS" and not 1 <= s <= top:
        raise ValueError(f"s must lie in 1..{top} for {kind}")
    draws = simulate_limit_draws(q, eps, reps, grid=grid, seed=seed, s_max=need)
    out = {}
    for level, alpha in zip(LEVELS, ALPHAS):
        if kind == "supF":
            value, se = quantile_with_se(draws[:, s - 1], 1.0 - alpha)
        elif kind == "Dmax":
            value, se = quantile_with_se(draws.max(axis=1), 1.0 - alpha)
        elif kind == "WDmax":
            value, se = quantile_with_se(_wdmax_draws(draws, s, alpha), 1.0 - alpha)
        else:
            value, se = quantile_with_se(draws[:, 0], (1.0 - alpha) ** (1.0 / (s + 1)))
        tag = f"{round(level * 100):d}"
        out["c" + tag] = value
        out["se" + tag] = se
    return out


# --------------------------------------------------------------------------
# shipped table
# --------------------------------------------------------------------------


@dataclass
class CriticalValueTable:
    entries: dict = field(default_factory=dict)
    mc_se: dict = field(default_factory=dict)
    checksum: str = ""
    source: str = ""

    @classmethod
    def load(cls, path=None):
        if path is None:
            raw = resources.files("strucbreak").joinpath("data", TABLE_FILE).read_bytes()
            source = f"strucbreak/data/{TABLE_FILE}"
        else:
            raw = Path(path).read_bytes()
            source = str(path)
        table = cls(checksum=hashlib.sha256(raw).hexdigest(), source=source)
        lines = raw.decode("utf-8").splitlines()
        for row in csv.DictReader(line for line in lines if not line.startswith("#")):
            key = (row["kind"], int(row["q"]), int(row["s"]),
                   round(float(row["epsilon"]), 2), round(float(row["alpha"]), 2))
            table.entries[key] = float(row["value"])
            table.mc_se[key] = float(row["mc_se"])
        return table

    def lookup(self, kind, q, s, eps, alpha):
        key = (kind, int(q), int(s), round(float(eps), 2), round(float(alpha), 2))
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(
                f"no critical value for {kind} with q={q}, s={s}, trimming={eps}, alpha={alpha}"
            ) from None

    def criticals(self, kind, q, s, eps):
        """(c90, c95, c99), or None when the key is not tabulated."""
        try:
            return tuple(self.lookup(kind, q, s, eps, a) for a in ALPHAS)
        except KeyError:
            return None

    def keys(self, kind=None):
        return sorted(k for k in self.entries if kind is None or k[0] == kind)


_default_table = None


def default_table() -> CriticalValueTable:
    global _default_table
    if _default_table is None:
        _default_table = CriticalValueTable.load()
    return _default_table


def write_table(rows, path, header_lines=()):
    fields = ["kind", "q", "s", "epsilon", "alpha", "value", "mc_se", "reps", "grid"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow({
                **r,
                "epsilon": f"{r['epsilon']:.2f}",
                "alpha": f"{r['alpha']:.2f}",
                "value": f"{r['value']:.4f}",
                "mc_se": f"{r['mc_se']:.4f}",
            })


__all__ = [
    "ALPHAS", "KINDS", "LEVELS", "SUPPORTED_TRIMMING", "CriticalValueTable",
    "alpha_from_level", "default_table", "quantile_with_se", "simulate_critical_values",
    "simulate_limit_draws", "snap_alpha", "table_rows_from_draws", "write_table",
]
