"""Command-line interface: CSV in, JSON or text report out.

Verbs
-----
auto          estimate the number of breaks sequentially, then date them
test          known breaks (--breakpoints) or hypothesis 1/2/3 with unknown dates
estimate      break dates and confidence intervals for --breaks N
indicator     regime number of every period (after estimate, via --state)
split         regime-wise copies of variables
scatter-data  per-regime (x, y) pairs for plotting
simulate-cv   simulate critical values for one table key
replay        re-run the configuration embedded in a JSON report
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend
from .breaktests import double_max, f_next, sequential_count, sup_f
from .ci import break_ci
from .core import (
    BreakPartition,
    DataError,
    Deterministic,
    ModelSpec,
    PanelDataset,
    SpecError,
    TestOutcome,
    max_breaks,
    regime_indicator,
)
from .critical_values import default_table, simulate_critical_values
from .dpsearch import estimate_breaks
from .regress import chow_f

log = logging.getLogger("strucbreak")

SCHEMA_VERSION = "1.0"
VERBS = ("auto", "test", "estimate", "indicator", "split", "scatter-data", "simulate-cv")


# --------------------------------------------------------------------------
# input
# --------------------------------------------------------------------------


def _is_int(s):
    try:
        int(s)
        return True
    except ValueError:
        return False


def load_csv(path, unit=None, time=None, columns=None) -> PanelDataset:
    """Read a balanced panel (or a single time series) from a CSV file.

    Without ``unit`` the file is one time series. Without ``time`` the
    rows are taken in file order. Units are sorted (numerically when they
    are integers). Integer time values are sorted numerically and must form
    a gap-free grid; other time values are kept as opaque labels in order of
    first appearance.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        rows = list(reader)
    for role, name in (("unit", unit), ("time", time)):
        if name is not None and name not in header:
            raise DataError(f"{path}: {role} column {name!r} not in header {header}")
    if columns is None:
        columns = [h for h in header if h not in (unit, time)]
    for c in columns:
        if c not in header:
            raise DataError(f"{path}: column {c!r} not in header {header}")

    # row numbers are 1-based file lines (header is line 1)
    units, times = [], []
    for r in rows:
        units.append(r[unit].strip() if unit else "1")
        times.append(r[time].strip() if time else None)
    if time is None:
        if unit is not None:
            raise DataError("a panel needs a time column")
        times = [str(k + 1) for k in range(len(rows))]
    numeric_time = all(_is_int(t) for t in times)
    unit_order = sorted(set(units), key=lambda u: (0, int(u), u) if _is_int(u) else (1, 0, u))
    if numeric_time:
        grid = sorted({int(t) for t in times})
        if any(b - a != 1 for a, b in zip(grid, grid[1:])):
            gaps = [a + 1 for a, b in zip(grid, grid[1:]) if b - a != 1]
            raise DataError(f"{path}: time grid has gaps (first missing period {gaps[0]})")
        keys = [str(g) for g in grid]
        time_index = np.asarray(grid, dtype=np.int64)
        pos = {str(g): k for k, g in enumerate(grid)}
        times = [str(int(t)) for t in times]
    else:
        keys = list(dict.fromkeys(times))
        time_index = np.arange(1, len(keys) + 1)
        pos = {t: k for k, t in enumerate(keys)}
    N, T = len(unit_order), len(keys)
    upos = {u: k for k, u in enumerate(unit_order)}
    data = {c: np.full((N, T), np.nan) for c in columns}
    seen = {}
    for line, (r, u, t) in enumerate(zip(rows, units, times), start=2):
        cell = (upos[u], pos[t])
        if cell in seen:
            raise DataError(f"{path}: duplicate observation for unit {u!r}, time {t!r} on lines {seen[cell]} and {line}")
        seen[cell] = line
        for c in columns:
            raw = (r.get(c) or "").strip()
            if raw == "":
                raise DataError(f"{path}: line {line}: missing value in column {c!r}")
            try:
                v = float(raw)
            except ValueError:
                raise DataError(f"{path}: line {line}: column {c!r} value {raw!r} is not numeric") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {line}: column {c!r} value {raw!r} is not finite")
            data[c][cell] = v
    if len(seen) != N * T:
        for u in unit_order:
            for t in keys:
                if (upos[u], pos[t]) not in seen:
                    raise DataError(f"{path}: unbalanced panel; no observation for unit {u!r}, time {t!r}")
    return PanelDataset(tuple(unit_order), time_index, data, tuple(keys))


def parse_breakpoints(values, mode, data: PanelDataset, trimming=None) -> BreakPartition:
    """Resolve break points given as 1-based indices or verbatim time labels."""
    if not values:
        raise SpecError("no break points given")
    if mode == "index":
        try:
            idx = [int(v) for v in values]
        except ValueError:
            raise SpecError(f"index mode expects integers, got {values}") from None
        for v in idx:
            if not 1 <= v <= data.T - 1:
                raise SpecError(f"break index {v} out of range 1..{data.T - 1}")
    elif mode == "label":
        labels = data.time_labels or tuple(str(int(t)) for t in data.time_index)
        lookup = {lab: k + 1 for k, lab in enumerate(labels)}
        idx = []
        for v in values:
            if str(v) not in lookup:
                raise SpecError(f"time label {v!r} is not in the estimation sample")
            idx.append(lookup[str(v)])
    else:
        raise SpecError(f"unknown break point mode {mode!r}")
    if any(b <= a for a, b in zip(idx, idx[1:])):
        raise SpecError(f"break points must be strictly increasing, got {values}")
    part = BreakPartition(tuple(idx), data.T)
    if trimming is not None:
        part.check_feasible(trimming)
    return part


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass
class RunConfig:
    verb: str
    input: str | None = None
    unit: str | None = None
    time: str | None = None
    depvar: str | None = None
    breakvars: list = field(default_factory=list)
    nobreakvars: list = field(default_factory=list)
    csa: list = field(default_factory=list)
    csanobreak: list = field(default_factory=list)
    csd: bool = False
    kfactors: list = field(default_factory=list)
    nbkfactors: list = field(default_factory=list)
    deterministic: str = "fe"
    trimming: float = 0.15
    vce: str = "ssr"
    breaks: list = field(default_factory=list)
    hypothesis: int | None = None
    breakpoints: list = field(default_factory=list)
    index: bool = False
    fmt: str | None = None
    wdmax: bool = False
    level: float = 0.95
    sequential: bool = False
    showindex: bool = False
    regime_specific_ci: bool = False
    seed: int = 0
    format: str = "text"
    out: str | None = None
    state: str | None = None
    variables: list = field(default_factory=list)
    kind: str = "supF"
    q: int = 1
    reps: int = 5000
    grid: int = 1000

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})

    def model_spec(self) -> ModelSpec:
        csa, csanobreak = list(self.csa), list(self.csanobreak)
        if self.csd:
            csa, csanobreak = list(self.breakvars), list(self.nobreakvars)
        return ModelSpec(
            depvar=self.depvar,
            break_vars=tuple(self.breakvars),
            nobreak_vars=tuple(self.nobreakvars),
            deterministic=Deterministic(self.deterministic),
            csa_break=tuple(csa),
            csa_nobreak=tuple(csanobreak),
            kfactors=tuple(self.kfactors),
            nbkfactors=tuple(self.nbkfactors),
            trimming=self.trimming,
            vce=self.vce,
        )

    def validate(self):
        """Reject option combinations before any computation."""
        if self.verb not in VERBS:
            raise SpecError(f"unknown verb {self.verb!r}")
        if self.verb == "simulate-cv":
            return
        if self.verb in ("auto", "test", "estimate") and not self.depvar:
            raise SpecError("a dependent variable is required")
        if self.csd and (self.csa or self.csanobreak):
            raise SpecError("csd cannot be combined with csa or csanobreak")
        if self.index and self.fmt:
            raise SpecError("breakpoints take either index or fmt, not both")
        if self.breakpoints and not (self.index or self.fmt):
            raise SpecError("break points need index (for a number list) or fmt (for time labels)")
        if len(self.breaks) > 2:
            raise SpecError("breaks takes one or two values")
        if any(b < 0 for b in self.breaks):
            raise SpecError("breaks must be non-negative")
        if self.verb == "test":
            if self.breakpoints and self.hypothesis is not None:
                raise SpecError("breakpoints (known dates) cannot be combined with hypothesis")
            if self.hypothesis not in (None, 1, 2, 3):
                raise SpecError("hypothesis must be 1, 2 or 3")
            if self.wdmax and self.hypothesis != 2:
                raise SpecError("wdmax applies to hypothesis 2 only")
            if self.sequential and self.hypothesis != 3:
                raise SpecError("sequential applies to hypothesis 3 only")
            if len(self.breaks) == 2 and self.hypothesis != 2:
                raise SpecError("two values in breaks are only allowed with hypothesis 2")
            if self.hypothesis in (1, 3) and not self.breaks and not self.sequential:
                raise SpecError(f"hypothesis {self.hypothesis} needs breaks")
            if self.breakpoints and self.breaks:
                raise SpecError("breaks cannot be combined with known break points")
            if len(self.breaks) == 2 and self.breaks[0] > self.breaks[1]:
                raise SpecError("breaks lower bound exceeds upper bound")
        elif self.verb in ("auto", "estimate"):
            if self.hypothesis is not None or self.wdmax or self.sequential:
                raise SpecError(f"{self.verb} takes no hypothesis, wdmax or sequential options")
            if self.breakpoints:
                raise SpecError(f"{self.verb} does not take break points")
            if self.verb == "estimate" and len(self.breaks) != 1:
                raise SpecError("estimate needs exactly one value in breaks")
            if self.verb == "auto" and len(self.breaks) > 1:
                raise SpecError("auto takes at most one value in breaks (the maximum)")
        else:
            if self.showindex:
                raise SpecError("showindex applies to estimate and auto only")
            if not self.state and not self.breakpoints:
                raise SpecError(f"{self.verb} needs a prior estimate (--state) or break points")
            if not self.state and not self.input:
                raise SpecError(f"{self.verb} with break points needs --input")
            if self.verb in ("split", "scatter-data") and not self.variables:
                raise SpecError(f"{self.verb} needs at least one variable")
        self.model_spec()


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------


def _outcome_dict(o: TestOutcome, data: PanelDataset | None = None):
    d = {
        "hypothesis": o.hypothesis,
        "statistic": o.statistic,
        "c90": o.critical[0] if o.critical else None,
        "c95": o.critical[1] if o.critical else None,
        "c99": o.critical[2] if o.critical else None,
        "reject": {f"{round(k * 100)}": v for k, v in o.reject.items()},
    }
    if o.p_value is not None:
        d["p_value"] = o.p_value
    if o.df is not None:
        d["df"] = list(o.df)
    if o.attained_partition is not None:
        d["breaks"] = list(o.attained_partition.breaks)
        if data is not None:
            d["break_labels"] = o.attained_partition.labels(data)
    d["info"] = _jsonable(o.info)
    return d


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _estimate_dict(est, cfg):
    cis = break_ci(est, cfg.level, regime_specific=cfg.regime_specific_ci) if est.partition.s else []
    return {
        "n_breaks": est.partition.s,
        "breaks": list(est.partition.breaks),
        "break_labels": est.partition.labels(est.data),
        "ci": [c.as_dict() for c in cis],
        "ci_level": cfg.level,
        "regimes": est.regime_table(),
        "nonbreaking": est.nonbreaking_table(),
        "ssr": est.ssr,
        "ssr_path": est.ssr_path,
        "iterations": est.iterations,
        "vce": est.fit.vce,
        "T": est.data.T,
        "N": est.data.N,
    }


def _load(cfg: RunConfig):
    spec = cfg.model_spec()
    cols = None
    wanted = set(spec.variables()) | set(cfg.variables)
    from .core import parse_lag

    cols = sorted({parse_lag(v)[1] for v in wanted})
    data = load_csv(cfg.input, cfg.unit, cfg.time, cols)
    return data.materialize(list(spec.variables()) + list(cfg.variables)), spec


def _level(cfg):
    lv = float(cfg.level)
    return lv / 100.0 if lv > 1 else lv


def run(cfg: RunConfig) -> dict:
    """Execute one configuration and return the JSON-ready report."""
    cfg.level = _level(cfg)
    if cfg.trimming > 1:
        cfg.trimming = cfg.trimming / 100.0
    cfg.validate()
    report = {
        "schema_version": SCHEMA_VERSION,
        "strucbreak_version": __version__,
        "verb": cfg.verb,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "backend": backend(),
    }
    if cfg.verb == "simulate-cv":
        res = simulate_critical_values(cfg.kind, cfg.q, (cfg.breaks or [1])[0], cfg.trimming,
                                       reps=cfg.reps, grid=cfg.grid, seed=cfg.seed)
        report["results"] = {"kind": cfg.kind, "q": cfg.q, "s": (cfg.breaks or [1])[0],
                             "trimming": cfg.trimming, **res}
        return report
    table = default_table()
    report["critical_value_table"] = {"source": table.source, "sha256": table.checksum}
    if cfg.verb in ("indicator", "split", "scatter-data"):
        report["results"] = _postestimation(cfg)
        return report
    data, spec = _load(cfg)
    report["sample"] = {"N": data.N, "T": data.T, "first": data.label(1), "last": data.label(data.T),
                        "mode": "time series" if data.is_time_series else "panel"}
    report["vce"] = spec.vce
    level = cfg.level
    if cfg.verb == "auto":
        s_max = cfg.breaks[0] if cfg.breaks else max_breaks(spec.trimming)
        seq = sequential_count(data, spec, s_max, level)
        est = estimate_breaks(data, spec, seq.n_breaks)
        report["results"] = {
            "sequential": _sequential_dict(seq, data),
            "estimate": _estimate_dict(est, cfg),
        }
    elif cfg.verb == "estimate":
        est = estimate_breaks(data, spec, cfg.breaks[0])
        report["results"] = {"estimate": _estimate_dict(est, cfg)}
    else:
        report["results"] = _run_test(cfg, data, spec)
    return report


def _sequential_dict(seq, data):
    return {
        "n_breaks": seq.n_breaks,
        "level": seq.level,
        "s_max": seq.s_max,
        "n_breaks_by_level": {f"{round(k * 100)}": v for k, v in seq.counts_by_level().items()},
        "steps": [_outcome_dict(o, data) for o in seq.steps],
    }


def _run_test(cfg, data, spec):
    if cfg.breakpoints:
        mode = "index" if cfg.index else "label"
        part = parse_breakpoints(cfg.breakpoints, mode, data, spec.trimming)
        o = chow_f(data, spec, part)
        return {"test": "known breaks", "outcome": _outcome_dict(o, data)}
    h = cfg.hypothesis
    if h is None or (h == 3 and cfg.sequential):
        s_max = cfg.breaks[0] if cfg.breaks else max_breaks(spec.trimming)
        seq = sequential_count(data, spec, s_max, cfg.level)
        return {"test": "sequential", "sequential": _sequential_dict(seq, data)}
    if h == 1:
        return {"test": "hypothesis 1", "outcome": _outcome_dict(sup_f(data, spec, cfg.breaks[0]), data)}
    if h == 2:
        if len(cfg.breaks) == 2:
            lo, hi = cfg.breaks
        elif cfg.breaks:
            lo, hi = 1, cfg.breaks[0]
        else:
            lo, hi = 1, max_breaks(spec.trimming)
        o = double_max(data, spec, hi, s_min=lo, weighted=cfg.wdmax, level=cfg.level)
        return {"test": "hypothesis 2", "outcome": _outcome_dict(o, data)}
    s_alt = cfg.breaks[0]
    if s_alt < 1:
        raise SpecError("hypothesis 3 needs at least 1 break under the alternative")
    return {"test": "hypothesis 3", "outcome": _outcome_dict(f_next(data, spec, s_alt - 1), data)}


# --------------------------------------------------------------------------
# postestimation
# --------------------------------------------------------------------------


def state_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + ".state.json")


def write_state(cfg: RunConfig, report: dict):
    est = report["results"]["estimate"]
    state = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(),
             "breaks": est["breaks"], "T": est["T"], "break_labels": est["break_labels"]}
    path = state_path(cfg.out)
    path.write_text(json.dumps(state, indent=2))
    return path


def _postestimation(cfg: RunConfig):
    if cfg.state:
        state = json.loads(Path(cfg.state).read_text())
        base = RunConfig.from_dict(state["config"])
        base.verb, base.variables = cfg.verb, cfg.variables
        data, spec = _load(base)
        if data.T != state["T"]:
            raise DataError("data no longer match the stored estimate")
        part = BreakPartition(tuple(state["breaks"]), data.T)
    else:
        data, spec = _load(cfg)
        mode = "index" if cfg.index else "label"
        part = parse_breakpoints(cfg.breakpoints, mode, data)
    if not cfg.out:
        raise SpecError(f"{cfg.verb} needs --out")
    return emit_postestimation(cfg.verb, data, spec, part, cfg.variables, cfg.out)


def emit_postestimation(verb, data: PanelDataset, spec: ModelSpec, partition: BreakPartition,
                        variables, out) -> dict:
    """Write indicator / split / scatter CSV files; return what was written."""
    reg = regime_indicator(partition)
    rows_ut = [(u, data.label(t + 1)) for u in data.unit_ids for t in range(data.T)]
    if verb == "indicator":
        name = variables[0] if variables else "regime"
        _write_csv(out, ["unit", "time", name],
                   [(u, t, int(reg[k % data.T])) for k, (u, t) in enumerate(rows_ut)])
        return {"file": str(out), "variable": name, "breaks": list(partition.breaks)}
    if verb == "split":
        cols, names = [], []
        for v in variables:
            x = data.column(v)
            for j in range(1, partition.s + 2):
                names.append(f"{v}_{j}")
                cols.append(np.where(reg[None, :] == j, x, 0.0).reshape(-1))
        body = [(u, t, *[float(c[k]) for c in cols]) for k, (u, t) in enumerate(rows_ut)]
        _write_csv(out, ["unit", "time", *names], body)
        return {"file": str(out), "varlist": names, "breaks": list(partition.breaks)}
    if verb == "scatter-data":
        outdir = Path(out)
        outdir.mkdir(parents=True, exist_ok=True)
        xname = variables[0]
        x, y = data.column(xname), data.column(spec.depvar)
        files = []
        for j in range(1, partition.s + 2):
            f = outdir / f"scatter_regime{j}.csv"
            body = [(u, t, float(x[k // data.T, k % data.T]), float(y[k // data.T, k % data.T]))
                    for k, (u, t) in enumerate(rows_ut) if reg[k % data.T] == j]
            _write_csv(f, ["unit", "time", xname, spec.depvar], body)
            files.append(str(f))
        return {"files": files, "x": xname, "y": spec.depvar, "breaks": list(partition.breaks)}
    raise SpecError(f"unknown postestimation verb {verb!r}")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------


def _fmt(x, width=10):
    if x is None:
        return " " * (width - 3) + "n/a"
    if isinstance(x, str):
        return x.rjust(width)
    return f"{x:{width}.3f}"


def _render_outcome(o, lines):
    lines.append(f"  {o['hypothesis']}")
    lines.append(f"    statistic {_fmt(o['statistic'])}   c90 {_fmt(o['c90'])}   c95 {_fmt(o['c95'])}   c99 {_fmt(o['c99'])}")
    if "p_value" in o:
        lines.append(f"    p-value   {o['p_value']:.4g}   df {o.get('df')}   (p with s numerator df: {o['info'].get('p_value_df_s', float('nan')):.4g})")
    if o.get("breaks"):
        lab = ", ".join(o.get("break_labels", map(str, o["breaks"])))
        lines.append(f"    breaks at {lab}  (index {o['breaks']})")


def render_text(report: dict) -> str:
    lines = [f"strucbreak {report['verb']}"]
    if "sample" in report:
        s = report["sample"]
        lines.append(f"  {s['mode']}: N={s['N']} T={s['T']} ({s['first']} .. {s['last']}), vce={report['vce']}")
    res = report["results"]
    if report["verb"] == "simulate-cv":
        lines.append(f"  {res['kind']} q={res['q']} s={res['s']} trimming={res['trimming']}")
        for lv in ("90", "95", "99"):
            lines.append(f"    c{lv} {res['c' + lv]:.3f}  (MC s.e. {res['se' + lv]:.3f})")
        return "\n".join(lines)
    if report["verb"] in ("indicator", "split", "scatter-data"):
        lines.append("  " + json.dumps(res))
        return "\n".join(lines)
    if "sequential" in res:
        seq = res["sequential"]
        lines.append(f"Sequential F(s+1|s) tests (decision level {seq['level']:.2f}):")
        for o in seq["steps"]:
            _render_outcome(o, lines)
        counts = seq["n_breaks_by_level"]
        lines.append(f"  estimated number of breaks: {seq['n_breaks']}  (90%: {counts['90']}, 95%: {counts['95']}, 99%: {counts['99']})")
    if "outcome" in res:
        lines.append(f"Test: {res['test']}")
        _render_outcome(res["outcome"], lines)
    if "estimate" in res:
        est = res["estimate"]
        showindex = report["config"].get("showindex")
        lines.append(f"Estimated break dates ({est['n_breaks']}), {round(est['ci_level'] * 100)}% confidence intervals:")
        for k, b in enumerate(est["breaks"]):
            ci = est["ci"][k]
            if showindex:
                lines.append(f"  {k + 1}: {b:>6}   [{ci['lower_index']}, {ci['upper_index']}]")
            else:
                lines.append(f"  {k + 1}: {est['break_labels'][k]:>8}   [{ci['lower_label']}, {ci['upper_label']}]")
        for r in est["regimes"]:
            coefs = ", ".join(f"{n}={c['coef']:.4g} ({c['se']:.3g})" for n, c in r["coefficients"].items())
            lines.append(f"  regime {r['regime']} {r['first_label']}..{r['last_label']}: {coefs}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _names(s):
    return [v for part in s for v in part.replace(",", " ").split() if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="strucbreak", description="Test for and date multiple structural breaks.")
    p.add_argument("--version", action="version", version=f"strucbreak {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    data_arg = argparse.ArgumentParser(add_help=False)
    data_arg.add_argument("input", help="CSV file with a header row")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--unit", help="cross-section identifier column (omit for a time series)")
    common.add_argument("--time", help="time column (integers or opaque labels)")
    common.add_argument("--depvar", help="dependent variable")
    common.add_argument("--breakvars", nargs="*", default=[], help="regressors whose coefficients break")
    common.add_argument("--nobreakvars", nargs="*", default=[], help="regressors without breaks")
    common.add_argument("--csa", nargs="*", default=[], help="cross-section averages entering with breaks")
    common.add_argument("--csanobreak", nargs="*", default=[], help="cross-section averages without breaks")
    common.add_argument("--csd", action="store_true", help="csa(breakvars) and csanobreak(nobreakvars)")
    common.add_argument("--kfactors", nargs="*", default=[], help="known factors with breaking loadings")
    common.add_argument("--nbkfactors", nargs="*", default=[], help="known factors without breaks")
    common.add_argument("--deterministic", choices=[d.value for d in Deterministic])
    common.add_argument("--breakconstant", action="store_true")
    common.add_argument("--noconstant", action="store_true")
    common.add_argument("--breakfixedeffects", action="store_true")
    common.add_argument("--nofixedeffects", action="store_true")
    common.add_argument("--trimming", type=float, default=0.15, help="0.05..0.25 (or 5..25 percent)")
    common.add_argument("--vce", choices=["ssr", "hc", "hac", "np"], default="ssr")
    common.add_argument("--level", type=float, default=95.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--out", help="report file (json) or output file/directory for postestimation")

    a = sub.add_parser("auto", parents=[data_arg, common], help="count and date breaks")
    a.add_argument("--breaks", type=int, nargs="*", default=[], help="maximum number of breaks")
    a.add_argument("--showindex", action="store_true")
    a.add_argument("--regime-specific-ci", action="store_true")

    t = sub.add_parser("test", parents=[data_arg, common], help="hypothesis tests")
    t.add_argument("--breakpoints", nargs="*", default=[])
    t.add_argument("--index", action="store_true")
    t.add_argument("--fmt")
    t.add_argument("--hypothesis", type=int, choices=[1, 2, 3])
    t.add_argument("--breaks", type=int, nargs="*", default=[])
    t.add_argument("--wdmax", action="store_true")
    t.add_argument("--sequential", action="store_true")

    e = sub.add_parser("estimate", parents=[data_arg, common], help="date a given number of breaks")
    e.add_argument("--breaks", type=int, nargs="*", default=[])
    e.add_argument("--showindex", action="store_true")
    e.add_argument("--regime-specific-ci", action="store_true")

    for verb, helptext in (("indicator", "regime indicator"), ("split", "regime-wise variables"),
                           ("scatter-data", "per-regime scatter data")):
        s = sub.add_parser(verb, parents=[common], help=helptext)
        s.add_argument("variables", nargs="*", default=[])
        s.add_argument("--input", help="CSV file (not needed with --state)")
        s.add_argument("--state", help="state file written next to an estimate report")
        s.add_argument("--breakpoints", nargs="*", default=[])
        s.add_argument("--index", action="store_true")
        s.add_argument("--fmt")

    c = sub.add_parser("simulate-cv", help="simulate critical values")
    c.add_argument("--kind", choices=["supF", "Dmax", "WDmax", "FnextGivenS"], default="supF")
    c.add_argument("--q", type=int, default=1)
    c.add_argument("--breaks", type=int, nargs="*", default=[1])
    c.add_argument("--trimming", type=float, default=0.15)
    c.add_argument("--reps", type=int, default=5000)
    c.add_argument("--grid", type=int, default=1000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--format", choices=["text", "json"], default="text")
    c.add_argument("--out")

    r = sub.add_parser("replay", help="re-run the configuration stored in a JSON report")
    r.add_argument("report")
    r.add_argument("--format", choices=["text", "json"], default="json")
    r.add_argument("--out")
    return p


def config_from_args(ns) -> RunConfig:
    verb = ns.verb
    if verb == "simulate-cv":
        return RunConfig(verb=verb, kind=ns.kind, q=ns.q, breaks=ns.breaks, trimming=ns.trimming,
                         reps=ns.reps, grid=ns.grid, seed=ns.seed, format=ns.format, out=ns.out)
    switches = dict(breakconstant=ns.breakconstant, noconstant=ns.noconstant,
                    breakfixedeffects=ns.breakfixedeffects, nofixedeffects=ns.nofixedeffects)
    if ns.deterministic:
        if any(switches.values()):
            raise SpecError("--deterministic cannot be combined with the constant/fixed-effect switches")
        det = ns.deterministic
    else:
        det = Deterministic.from_options(**switches).value
    return RunConfig(
        verb=verb, input=str(Path(ns.input).resolve()) if ns.input else None, unit=ns.unit, time=ns.time, depvar=ns.depvar,
        breakvars=_names(ns.breakvars), nobreakvars=_names(ns.nobreakvars), csa=_names(ns.csa),
        csanobreak=_names(ns.csanobreak), csd=ns.csd, kfactors=_names(ns.kfactors),
        nbkfactors=_names(ns.nbkfactors), deterministic=det, trimming=ns.trimming, vce=ns.vce,
        breaks=list(getattr(ns, "breaks", []) or []), hypothesis=getattr(ns, "hypothesis", None),
        breakpoints=_names(getattr(ns, "breakpoints", []) or []), index=getattr(ns, "index", False),
        fmt=getattr(ns, "fmt", None), wdmax=getattr(ns, "wdmax", False), level=ns.level,
        sequential=getattr(ns, "sequential", False), showindex=getattr(ns, "showindex", False),
        regime_specific_ci=getattr(ns, "regime_specific_ci", False), seed=ns.seed, format=ns.format,
        out=ns.out, state=getattr(ns, "state", None), variables=_names(getattr(ns, "variables", []) or []),
    )


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if ns.verb == "replay":
            stored = json.loads(Path(ns.report).read_text())
            cfg = RunConfig.from_dict(stored["config"])
            cfg.format, cfg.out = ns.format, ns.out
        else:
            cfg = config_from_args(ns)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            report = run(cfg)
    except (SpecError, DataError, OSError) as exc:
        print(f"strucbreak: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(_jsonable(report), indent=2) if cfg.format == "json" else render_text(report)
    if cfg.out and cfg.verb not in ("indicator", "split", "scatter-data"):
        Path(cfg.out).write_text(json.dumps(_jsonable(report), indent=2))
        if cfg.verb in ("auto", "estimate"):
            write_state(cfg, report)
    print(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
