"""Estimation and testing of multiple structural breaks in time series and
large-N panels with cross-section dependence."""

from __future__ import annotations

__version__ = "0.1.0"

from ._accel import backend
from .breaktests import SequentialResult, double_max, f_next, sequential_count, sup_f
from .ci import BreakInterval, argmax_cdf, argmax_quantile, break_ci
from .core import (
    BreakPartition,
    DataError,
    Deterministic,
    ModelSpec,
    PanelDataset,
    RankDeficiencyError,
    SpecError,
    TestOutcome,
    build_design,
    max_breaks,
    min_segment_length,
)
from .critical_values import CriticalValueTable, default_table, simulate_critical_values
from .dpsearch import (
    BreakEstimates,
    ConvergenceError,
    estimate_breaks,
    grid_search_oracle,
    optimal_partition,
    segment_costs,
)
from .regress import chow_f, ols

__all__ = [
    "BreakEstimates", "BreakInterval", "BreakPartition", "ConvergenceError", "CriticalValueTable",
    "DataError", "Deterministic", "ModelSpec", "PanelDataset", "RankDeficiencyError",
    "SequentialResult", "SpecError", "TestOutcome", "argmax_cdf", "argmax_quantile", "backend",
    "break_ci", "build_design", "chow_f", "default_table", "double_max", "estimate_breaks",
    "f_next", "grid_search_oracle", "max_breaks", "min_segment_length", "ols",
    "optimal_partition", "segment_costs", "sequential_count", "simulate_critical_values", "sup_f",
]
