"""Data model, model specification, partitions and regression-system assembly."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

SUPPORTED_TRIMMING = (0.05, 0.10, 0.15, 0.20, 0.25)
VCE_CHOICES = ("ssr", "hc", "hac", "np")
CONSTANT = "_cons"
UNIT_EFFECT = "_fe"


class SpecError(ValueError):
    """Invalid model specification or option combination."""


class DataError(ValueError):
    """Input data violates the balanced-panel requirements."""


class RankDeficiencyError(np.linalg.LinAlgError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


def check_trimming(eps: float) -> float:
    for v in SUPPORTED_TRIMMING:
        if abs(float(eps) - v) < 1e-9:
            return v
    supported = ", ".join(f"{v:.2f}" for v in SUPPORTED_TRIMMING)
    raise SpecError(f"trimming {eps!r} is not supported; critical values exist for {supported}")


def max_breaks(eps: float) -> int:
    """Largest number of breaks admissible under trimming ``eps``: ceil(1/eps) - 2."""
    eps = check_trimming(eps)
    return math.ceil(round(1.0 / eps, 9)) - 2


def min_segment_length(eps: float, T: int) -> int:
    return max(1, math.ceil(round(eps * T, 9)))


# --------------------------------------------------------------------------
# data
# --------------------------------------------------------------------------

_TS_OP = re.compile(r"^L(\d*)\.(.+)$", re.IGNORECASE)


def parse_lag(name: str):
    """Split a Stata-style lag name ``L.x`` / ``L2.x`` into (lag, base)."""
    m = _TS_OP.match(name)
    if not m:
        return 0, name
    return int(m.group(1) or 1), m.group(2)


@dataclass(frozen=True)
class PanelDataset:
    """Balanced panel: every column is an (N, T) array on a shared time grid."""

    unit_ids: tuple
    time_index: np.ndarray
    columns: dict
    time_labels: tuple | None = None

    def __post_init__(self):
        ti = np.asarray(self.time_index)
        if ti.ndim != 1 or ti.size < 1:
            raise DataError("time_index must be a non-empty 1-d grid")
        if not np.issubdtype(ti.dtype, np.integer):
            if not np.all(ti == np.round(ti)):
                raise DataError("time_index must be integer valued")
            ti = ti.astype(np.int64)
        if np.any(np.diff(ti) <= 0):
            raise DataError("time_index must be strictly increasing without duplicates")
        object.__setattr__(self, "time_index", ti)
        object.__setattr__(self, "unit_ids", tuple(self.unit_ids))
        if len(self.unit_ids) < 1:
            raise DataError("at least one unit is required")
        if len(set(self.unit_ids)) != len(self.unit_ids):
            raise DataError("unit ids must be unique")
        cols = {}
        for name, arr in self.columns.items():
            a = np.asarray(arr, dtype=float)
            if a.ndim == 1 and len(self.unit_ids) == 1:
                a = a[None, :]
            if a.shape != (self.N, self.T):
                raise DataError(f"column {name!r} has shape {a.shape}, expected {(self.N, self.T)}")
            a = a.copy()
            a.setflags(write=False)
            cols[name] = a
        object.__setattr__(self, "columns", cols)
        if self.time_labels is not None:
            labels = tuple(str(x) for x in self.time_labels)
            if len(labels) != self.T:
                raise DataError("time_labels must have one entry per time period")
            object.__setattr__(self, "time_labels", labels)

    @classmethod
    def from_series(cls, columns, time_index=None, time_labels=None):
        """Time-series (N = 1) dataset from 1-d arrays."""
        cols = {k: np.asarray(v, dtype=float).reshape(1, -1) for k, v in columns.items()}
        T = next(iter(cols.values())).shape[1]
        if time_index is None:
            time_index = np.arange(1, T + 1)
        return cls(("1",), np.asarray(time_index), cols, time_labels)

    @property
    def N(self) -> int:
        return len(self.unit_ids)

    @property
    def T(self) -> int:
        return int(self.time_index.size)

    @property
    def is_time_series(self) -> bool:
        return self.N == 1

    def label(self, position: int) -> str:
        """Display label of a 1-based time position."""
        if self.time_labels is not None:
            return self.time_labels[position - 1]
        return str(int(self.time_index[position - 1]))

    def column(self, name: str) -> np.ndarray:
        try:
            a = self.columns[name]
        except KeyError:
            raise DataError(f"column {name!r} not found; available: {sorted(self.columns)}") from None
        if not np.all(np.isfinite(a)):
            bad = np.argwhere(~np.isfinite(a))[0]
            raise DataError(
                f"column {name!r} has a missing or non-finite value at unit "
                f"{self.unit_ids[bad[0]]!r}, time {self.label(bad[1] + 1)!r}"
            )
        return a

    def materialize(self, names) -> PanelDataset:
        """Add lagged columns (``L.x``, ``L2.x``) and drop the periods they lose."""
        lags = {}
        for name in names:
            if name in self.columns:
                continue
            lag, base = parse_lag(name)
            if lag == 0:
                continue
            if base not in self.columns:
                raise DataError(f"column {base!r} (from {name!r}) not found")
            lags[name] = (lag, base)
        if not lags:
            return self
        if np.any(np.diff(self.time_index) != 1):
            raise DataError("lag operators need a gap-free time grid")
        drop = max(lag for lag, _ in lags.values())
        if drop >= self.T:
            raise DataError("lag exceeds the number of periods")
        cols = {k: v[:, drop:] for k, v in self.columns.items()}
        for name, (lag, base) in lags.items():
            cols[name] = self.columns[base][:, drop - lag : self.T - lag]
        labels = self.time_labels[drop:] if self.time_labels is not None else None
        return PanelDataset(self.unit_ids, self.time_index[drop:], cols, labels)


def cross_sectional_averages(data: PanelDataset, names) -> dict:
    """Mean over units at every period, one series of length T per name."""
    return {name: data.column(name).mean(axis=0) for name in names}


# --------------------------------------------------------------------------
# specification
# --------------------------------------------------------------------------


class Deterministic(str, Enum):
    FIXED_EFFECTS = "fe"
    FIXED_EFFECTS_BREAKS = "fe-breaks"
    CONSTANT = "constant"
    CONSTANT_BREAKS = "constant-breaks"
    NONE = "none"

    @classmethod
    def from_options(cls, *, breakconstant=False, noconstant=False,
                     breakfixedeffects=False, nofixedeffects=False):
        """Resolve the command-line switches into one deterministic model."""
        if breakfixedeffects and nofixedeffects:
            raise SpecError("breakfixedeffects and nofixedeffects are mutually exclusive")
        if breakconstant and noconstant:
            raise SpecError("breakconstant and noconstant are mutually exclusive")
        if nofixedeffects:
            if breakconstant:
                return cls.CONSTANT_BREAKS
            return cls.NONE if noconstant else cls.CONSTANT
        # with one unit a breaking fixed effect is the breaking constant
        return cls.FIXED_EFFECTS_BREAKS if (breakfixedeffects or breakconstant) else cls.FIXED_EFFECTS


def _names(x):
    if x is None:
        return ()
    if isinstance(x, str):
        return (x,)
    return tuple(x)


@dataclass(frozen=True)
class ModelSpec:
    depvar: str
    break_vars: tuple = ()
    nobreak_vars: tuple = ()
    deterministic: Deterministic = Deterministic.FIXED_EFFECTS
    csa_break: tuple = ()
    csa_nobreak: tuple = ()
    kfactors: tuple = ()
    nbkfactors: tuple = ()
    trimming: float = 0.15
    vce: str = "ssr"

    def __post_init__(self):
        for f in ("break_vars", "nobreak_vars", "csa_break", "csa_nobreak", "kfactors", "nbkfactors"):
            object.__setattr__(self, f, _names(getattr(self, f)))
        object.__setattr__(self, "deterministic", Deterministic(self.deterministic))
        object.__setattr__(self, "trimming", check_trimming(self.trimming))
        if self.vce not in VCE_CHOICES:
            raise SpecError(f"vce must be one of {VCE_CHOICES}, got {self.vce!r}")
        overlap = set(self.break_vars) & set(self.nobreak_vars)
        if overlap:
            raise SpecError(f"variables both breaking and non-breaking: {sorted(overlap)}")
        if self.depvar in self.break_vars or self.depvar in self.nobreak_vars:
            raise SpecError("the dependent variable cannot also be a regressor")
        for group in ("break_vars", "nobreak_vars", "kfactors", "nbkfactors"):
            vals = getattr(self, group)
            if len(set(vals)) != len(vals):
                raise SpecError(f"duplicate names in {group}")

    def variables(self):
        seen = []
        for name in (self.depvar, *self.break_vars, *self.nobreak_vars, *self.csa_break,
                     *self.csa_nobreak, *self.kfactors, *self.nbkfactors):
            if name not in seen:
                seen.append(name)
        return seen

    def replace(self, **changes) -> ModelSpec:
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Layout:
    """Column roles of a specification once the panel dimension is known.

    ``breaking``/``nonbreaking`` carry common coefficients; ``aug_break`` and
    ``aug_nobreak`` carry unit-specific coefficients (regime-specific for
    ``aug_break``) and are partialled out unit by unit.
    """

    breaking: tuple
    nonbreaking: tuple
    aug_break: tuple
    aug_nobreak: tuple

    @property
    def q(self) -> int:
        return len(self.breaking)

    @property
    def p(self) -> int:
        return len(self.nonbreaking)

    @property
    def partial(self) -> bool:
        return bool(self.nonbreaking or self.aug_nobreak)


def resolve_layout(spec: ModelSpec, N: int) -> Layout:
    det = spec.deterministic
    breaking = list(spec.break_vars)
    nonbreaking = list(spec.nobreak_vars)
    aug_break, aug_nobreak = [], []
    if N == 1:
        # one unit: a breaking fixed effect is a breaking constant, cross-section
        # averages are undefined and known factors are ordinary regressors
        if det in (Deterministic.CONSTANT_BREAKS, Deterministic.FIXED_EFFECTS_BREAKS):
            breaking.append(CONSTANT)
        elif det is Deterministic.CONSTANT:
            nonbreaking.append(CONSTANT)
        elif det is Deterministic.FIXED_EFFECTS:
            aug_nobreak.append(UNIT_EFFECT)
        breaking.extend(spec.kfactors)
        nonbreaking.extend(spec.nbkfactors)
    else:
        if det is Deterministic.CONSTANT_BREAKS:
            breaking.append(CONSTANT)
        elif det is Deterministic.CONSTANT:
            nonbreaking.append(CONSTANT)
        elif det is Deterministic.FIXED_EFFECTS_BREAKS:
            aug_break.append(UNIT_EFFECT)
        elif det is Deterministic.FIXED_EFFECTS:
            aug_nobreak.append(UNIT_EFFECT)
        aug_break.extend(f"csa({v})" for v in spec.csa_break)
        aug_break.extend(spec.kfactors)
        aug_nobreak.extend(f"csa({v})" for v in spec.csa_nobreak)
        aug_nobreak.extend(spec.nbkfactors)
    if not breaking:
        if N > 1 and det in (Deterministic.FIXED_EFFECTS, Deterministic.FIXED_EFFECTS_BREAKS):
            raise SpecError("with fixed effects the model needs at least one breaking regressor")
        raise SpecError("the model has no breaking regressors; add break variables or a breaking constant")
    return Layout(tuple(breaking), tuple(nonbreaking), tuple(aug_break), tuple(aug_nobreak))


# --------------------------------------------------------------------------
# partitions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BreakPartition:
    """Break dates T_1 < ... < T_s; T_j is the last (1-based) period of regime j."""

    breaks: tuple
    T: int

    def __post_init__(self):
        b = tuple(int(x) for x in self.breaks)
        object.__setattr__(self, "breaks", b)
        if any(x2 <= x1 for x1, x2 in zip(b, b[1:])):
            raise SpecError(f"break indices must be strictly increasing: {b}")
        if b and (b[0] < 1 or b[-1] > self.T - 1):
            raise SpecError(f"break indices must lie in 1..{self.T - 1}: {b}")

    @property
    def s(self) -> int:
        return len(self.breaks)

    def bounds(self):
        """Regimes as 1-based inclusive (first, last) pairs."""
        edges = (0, *self.breaks, self.T)
        return [(edges[j] + 1, edges[j + 1]) for j in range(len(edges) - 1)]

    def lengths(self):
        edges = (0, *self.breaks, self.T)
        return [edges[j + 1] - edges[j] for j in range(len(edges) - 1)]

    def regime_of(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise IndexError(t)
        return 1 + sum(1 for b in self.breaks if t > b)

    def is_feasible(self, h: int) -> bool:
        return min(self.lengths()) >= h

    def check_feasible(self, eps: float) -> BreakPartition:
        h = min_segment_length(eps, self.T)
        if not self.is_feasible(h):
            raise SpecError(
                f"breaks {list(self.breaks)} violate trimming {eps}: every regime needs at least "
                f"{h} of {self.T} periods"
            )
        return self

    def insert(self, tau: int) -> BreakPartition:
        return BreakPartition(tuple(sorted((*self.breaks, tau))), self.T)

    def labels(self, data: PanelDataset):
        return [data.label(b) for b in self.breaks]


def regime_indicator(partition: BreakPartition, T: int | None = None) -> np.ndarray:
    """Regime number (1..s+1) of every period."""
    T = partition.T if T is None else T
    if T != partition.T:
        raise SpecError("partition length does not match T")
    out = np.empty(T, dtype=np.int64)
    for j, (a, b) in enumerate(partition.bounds(), start=1):
        out[a - 1 : b] = j
    return out


# --------------------------------------------------------------------------
# regression system
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    regime: int | None
    role: str  # "break" or "nobreak"


@dataclass(frozen=True)
class RegressionSystem:
    response: np.ndarray  # (N*T,), unit-major, augmentation partialled out
    design: np.ndarray  # (N*T, k)
    column_map: tuple
    layout: Layout
    partition: BreakPartition
    n_units: int
    n_times: int
    n_aug: int  # augmentation columns per unit
    # untransformed pieces used to recover nuisance fits
    raw_response: np.ndarray = field(repr=False)
    raw_design: np.ndarray = field(repr=False)
    aug: np.ndarray = field(repr=False)  # (N, T, n_aug)
    n_aug_nobreak: int = 0

    @property
    def n_rows(self) -> int:
        return self.design.shape[0]

    @property
    def q(self) -> int:
        return self.layout.q

    @property
    def p(self) -> int:
        return self.layout.p

    @property
    def s(self) -> int:
        return self.partition.s

    @property
    def dof_resid(self) -> int:
        return self.n_rows - self.design.shape[1] - self.n_units * self.n_aug

    def unit_of_row(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_units), self.n_times)

    def time_of_row(self) -> np.ndarray:
        return np.tile(np.arange(self.n_times), self.n_units)

    def breaking_columns(self, regime: int):
        return [k for k, c in enumerate(self.column_map) if c.role == "break" and c.regime == regime]

    def nonbreaking_columns(self):
        return [k for k, c in enumerate(self.column_map) if c.role == "nobreak"]


def _series(data: PanelDataset, name: str, csa: dict) -> np.ndarray:
    if name in (CONSTANT, UNIT_EFFECT):
        return np.ones((data.N, data.T))
    if name.startswith("csa(") and name.endswith(")"):
        base = name[4:-1]
        if base not in csa:
            csa[base] = data.column(base).mean(axis=0)
        return np.broadcast_to(csa[base], (data.N, data.T))
    return data.column(name)


def layout_arrays(data: PanelDataset, layout: Layout):
    """(breaking, nonbreaking, aug_break, aug_nobreak) as (N, T, k) arrays."""
    csa = {}

    def stack(names):
        if not names:
            return np.zeros((data.N, data.T, 0))
        return np.stack([_series(data, n, csa) for n in names], axis=-1)

    return (stack(layout.breaking), stack(layout.nonbreaking),
            stack(layout.aug_break), stack(layout.aug_nobreak))


def check_rank(design: np.ndarray, names, tol: float = 1e-10):
    """Raise :class:`RankDeficiencyError` naming collinear columns."""
    if design.shape[1] == 0:
        return
    norms = np.linalg.norm(design, axis=0)
    zero = [names[k] for k in np.flatnonzero(norms == 0)]
    if zero:
        raise RankDeficiencyError(f"design columns identically zero: {zero}", zero)
    scaled = design / norms
    _, sv, vt = np.linalg.svd(scaled, full_matrices=False)
    if sv[-1] < tol * sv[0]:
        null = vt[-1]
        involved = [names[k] for k in np.flatnonzero(np.abs(null) > 1e-6)]
        raise RankDeficiencyError(f"design is rank deficient; collinear columns: {involved}", involved)


def _partial_out(M: np.ndarray, Z: np.ndarray) -> np.ndarray:
    # residuals of each column of M on Z (least squares, per unit)
    if Z.shape[1] == 0:
        return M
    coef, *_ = np.linalg.lstsq(Z, M, rcond=None)
    return M - Z @ coef


def build_design(data: PanelDataset, spec: ModelSpec, partition: BreakPartition,
                 *, check: bool = True, response=None) -> RegressionSystem:
    """Stacked regression system for a candidate partition.

    Breaking columns are interacted with regime dummies (regime-major order),
    followed by the non-breaking columns. Unit-specific augmentation columns
    (fixed effects, cross-section averages, known factors in panels) are
    partialled out unit by unit, which is equivalent to including them.
    """
    layout = resolve_layout(spec, data.N)
    N, T = data.N, data.T
    if partition.T != T:
        raise SpecError(f"partition is for T={partition.T}, data has T={T}")
    B, X, Zb, Zn = layout_arrays(data, layout)
    y = data.column(spec.depvar) if response is None else np.asarray(response, dtype=float).reshape(N, T)
    reg = regime_indicator(partition)
    n_reg = partition.s + 1

    blocks, cmap = [], []
    for j in range(1, n_reg + 1):
        mask = (reg == j)[None, :, None]
        blocks.append(B * mask)
        cmap.extend(ColumnInfo(v, j, "break") for v in layout.breaking)
    blocks.append(X)
    cmap.extend(ColumnInfo(v, None, "nobreak") for v in layout.nonbreaking)
    raw_design = np.concatenate(blocks, axis=-1)  # (N, T, k)

    aug_parts = [Zn]
    for j in range(1, n_reg + 1):
        aug_parts.append(Zb * (reg == j)[None, :, None])
    aug = np.concatenate(aug_parts, axis=-1)
    n_aug = aug.shape[-1]
    if n_aug:
        if n_aug >= T:
            raise SpecError(
                f"{n_aug} unit-specific augmentation columns need more than the {T} periods available"
            )
        if Zb.shape[-1] and min(partition.lengths()) <= Zb.shape[-1]:
            raise SpecError("a regime is too short for its regime-specific augmentation columns")
        resp = np.empty((N, T))
        des = np.empty_like(raw_design)
        for i in range(N):
            both = np.column_stack([y[i], raw_design[i]])
            both = _partial_out(both, aug[i])
            resp[i] = both[:, 0]
            des[i] = both[:, 1:]
    else:
        resp, des = y, raw_design

    k = raw_design.shape[-1]
    design = des.reshape(N * T, k)
    names = [f"{c.name}@{c.regime}" if c.regime else c.name for c in cmap]
    if check:
        check_rank(design, names)
    return RegressionSystem(
        response=resp.reshape(N * T).copy(),
        design=design.copy(),
        column_map=tuple(cmap),
        layout=layout,
        partition=partition,
        n_units=N,
        n_times=T,
        n_aug=n_aug,
        raw_response=np.asarray(y, dtype=float).copy(),
        raw_design=raw_design,
        aug=aug,
        n_aug_nobreak=Zn.shape[-1],
    )


@dataclass
class TestOutcome:
    """Result of one hypothesis test.

    ``critical`` holds the (90%, 95%, 99%) critical values, or ``None`` when
    they are not tabulated for this configuration.
    """

    hypothesis: str
    statistic: float
    critical: tuple | None = None
    p_value: float | None = None
    attained_partition: BreakPartition | None = None
    df: tuple | None = None
    info: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    @property
    def reject(self) -> dict:
        if self.critical is None:
            return {}
        return {lvl: bool(self.statistic > c) for lvl, c in zip((0.90, 0.95, 0.99), self.critical)}

    def rejects_at(self, level: float) -> bool:
        if self.critical is None:
            raise ValueError(f"no critical values available for {self.hypothesis}")
        idx = {0.90: 0, 0.95: 1, 0.99: 2}[round(level, 2)]
        return bool(self.statistic > self.critical[idx])
