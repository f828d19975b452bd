"""Declarative experiment runner: config parsing, check dispatch, CSV/JSON reports.

Config grammar (YAML subset)::

    output_dir: results          # optional, overridden by --out
    checks: [isotropy, theorems] # optional, default all groups
    tolerances: {plancherel_1d: 1.0e-6}
    experiments:
      - name: uniform-sym        # optional
        family: uniform-interval # or families: [id, {family: id, sigma: 2}, ...]
        d: 1                     # dimension for the family ids
        params: {sigma: 1.0}     # constructor parameters for `family`
        n_list: [4, 8, 16]
        mode: symmetric          # or general (default)
        C: 3.0
        c: 0.1
        grid: {L: 16.0, N: 4096} # absolute half-width and points per axis

A single experiment may also be written at top level without the
``experiments`` list.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import multiprocessing
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from . import bounds as B
from . import cf_analysis as CF
from .distributions import FAMILIES, DistributionSpec, build
from .errors import ConfigError, LabError
from .functionals import check_isotropic_bounds, functional_report
from .grid import DEFAULT_POINTS, GridSpec

__all__ = [
    "CHECK_GROUPS", "DEFAULT_TOLERANCES", "FamilyRef", "ExperimentConfig", "RunConfig",
    "CheckRow", "RunSummary", "parse_config", "load_config", "run", "emit_plot_data",
    "emit_cf_error_series", "fmt",
]

CHECK_GROUPS = ("isotropy", "separation", "subadditivity", "cf_norms", "cf_product",
                "theorems", "corollary", "rates")

DEFAULT_TOLERANCES = {
    "isotropy": 1e-9,
    "plancherel_1d": 1e-6,
    "plancherel_2d": 1e-5,
    "plancherel_3d": 1e-5,
    "lp_norm": 1e-8,
    "separation_eps": 0.05,     # in units of 1/sigma
    "separation_T": 40.0,       # in units of 1/sigma
    "cf_product_c": 0.125,
    "rate_slack": 0.25,
    "tail_tol": 1e-6,
    "beta3_cap": 3.0,
    "beta4_cap": 12.0,
    "exact_delta": 1e-7,        # Delta_n below this counts as exact normality
    "cmin_growth": 2.0,         # allowed C_min(n) / C_min(first n) across n_list
}

LP_ORDERS = (1, 2, 4, 8, 16)

_TOP_KEYS = {"experiments", "output_dir", "checks", "tolerances"}
_EXP_KEYS = {"name", "family", "families", "d", "params", "n_list", "mode", "C", "c", "grid"}
_GRID_KEYS = {"L", "N"}


# --------------------------------------------------------------------------
# YAML with line numbers
# --------------------------------------------------------------------------

class _LineDict(dict):
    line: int = 0
    key_lines: dict


class _LineList(list):
    line: int = 0


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _LineDict()
    out.line = node.start_mark.line + 1
    out.key_lines = {}
    for k_node, v_node in node.value:
        key = loader.construct_object(k_node, deep=True)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", k_node.start_mark.line + 1)
        out[key] = loader.construct_object(v_node, deep=True)
        out.key_lines[key] = k_node.start_mark.line + 1
    return out


def _construct_sequence(loader, node):
    out = _LineList(loader.construct_object(v, deep=True) for v in node.value)
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


def _line(obj, key=None) -> Optional[int]:
    if key is not None and isinstance(obj, _LineDict):
        return obj.key_lines.get(key, obj.line)
    return getattr(obj, "line", None)


# --------------------------------------------------------------------------
# config types
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FamilyRef:
    family_id: str
    params: tuple = ()

    def build(self) -> DistributionSpec:
        return build(self.family_id, **dict(self.params))

    @property
    def label(self) -> str:
        if not self.params:
            return self.family_id
        inner = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.family_id}({inner})"


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    families: tuple
    dim: int
    n_list: tuple
    mode: str = "general"
    C: float = B.DEFAULT_C
    c: float = B.DEFAULT_c
    grid_L: Optional[float] = None
    grid_N: Optional[int] = None

    def grid(self) -> Optional[GridSpec]:
        if self.grid_L is None and self.grid_N is None:
            return None
        specs = [f.build() for f in self.families]
        sigma = math.sqrt(sum(s.sigma2 for s in specs) / len(specs))
        L = self.grid_L if self.grid_L is not None else 12.0 * sigma * math.sqrt(self.dim)
        return GridSpec(self.dim, L, self.grid_N or DEFAULT_POINTS[self.dim])

    def experiment(self) -> B.Experiment:
        return B.Experiment([f.build() for f in self.families], list(self.n_list),
                            mode=self.mode, C=self.C, c=self.c, grid=self.grid(),
                            name=self.name)


@dataclass(frozen=True)
class RunConfig:
    experiments: tuple
    output_dir: str = "llt-lab-out"
    checks: frozenset = frozenset(CHECK_GROUPS)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def unique_families(self) -> list:
        seen = {}
        for e in self.experiments:
            for f in e.families:
                seen.setdefault(f, None)
        return list(seen)


def _number(value, what, line, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}", line)
    if integer and int(value) != value:
        raise ConfigError(f"{what} must be an integer, got {value!r}", line)
    return int(value) if integer else float(value)


def _family_ref(entry, dim_default, params_default, line) -> FamilyRef:
    if isinstance(entry, str):
        fid, params = entry, dict(params_default)
    elif isinstance(entry, dict):
        if "family" not in entry:
            raise ConfigError("family entry needs a 'family' key", _line(entry))
        params = {k: v for k, v in entry.items() if k != "family"}
        fid = entry["family"]
        line = _line(entry, "family")
    else:
        raise ConfigError(f"bad family entry {entry!r}", line)
    if fid not in FAMILIES:
        raise ConfigError(f"unknown family {fid!r}; known: {', '.join(sorted(FAMILIES))}", line)
    if dim_default is not None and "d" not in params and "dim" not in params:
        params["d"] = dim_default
    ref = FamilyRef(fid, tuple(sorted((str(k), v) for k, v in params.items())))
    try:
        ref.build()
    except LabError as exc:
        raise ConfigError(str(exc), line) from None
    except ValueError as exc:
        raise ConfigError(str(exc), line) from None
    return ref


def _parse_experiment(raw, index) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("experiment must be a mapping", _line(raw))
    for key in raw:
        if key not in _EXP_KEYS:
            raise ConfigError(f"unknown key {key!r}", _line(raw, key))
    if ("family" in raw) == ("families" in raw):
        raise ConfigError("give exactly one of 'family' or 'families'", _line(raw))
    dim = raw.get("d")
    if dim is not None:
        dim = _number(dim, "d", _line(raw, "d"), integer=True)
    params = raw.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("params must be a mapping", _line(raw, "params"))
    if "family" in raw:
        refs = [_family_ref(raw["family"], dim, params, _line(raw, "family"))]
    else:
        fams = raw["families"]
        if not isinstance(fams, list) or not fams:
            raise ConfigError("families must be a non-empty list", _line(raw, "families"))
        if params:
            raise ConfigError("params applies only to the single 'family' form",
                              _line(raw, "params"))
        refs = [_family_ref(f, dim, {}, _line(fams)) for f in fams]
    specs = [r.build() for r in refs]
    dims = {s.dim for s in specs}
    if len(dims) != 1:
        raise ConfigError("families must share a dimension", _line(raw))
    dim = dims.pop()

    if "n_list" not in raw:
        raise ConfigError("missing n_list", _line(raw))
    n_raw = raw["n_list"]
    if not isinstance(n_raw, list) or not n_raw:
        raise ConfigError("n_list must be a non-empty list", _line(raw, "n_list"))
    n_list = [_number(v, "n_list entry", _line(raw, "n_list"), integer=True) for v in n_raw]
    if any(v < 1 for v in n_list) or n_list != sorted(set(n_list)):
        raise ConfigError("n_list must be strictly increasing positive integers",
                          _line(raw, "n_list"))

    mode = raw.get("mode", "general")
    if mode not in ("general", "symmetric"):
        raise ConfigError(f"mode must be general or symmetric, got {mode!r}", _line(raw, "mode"))
    if mode == "symmetric":
        bad = [s.name for s in specs if not s.third_moments_vanish]
        if bad:
            raise ConfigError(f"symmetric mode needs vanishing third moments; {bad[0]} "
                              "has nonzero third moments", _line(raw, "mode"))
    C = _number(raw.get("C", B.DEFAULT_C), "C", _line(raw, "C"))
    c = _number(raw.get("c", B.DEFAULT_c), "c", _line(raw, "c"))
    if C <= 0 or c <= 0:
        raise ConfigError("constants must be positive", _line(raw, "C" if C <= 0 else "c"))

    grid_L = grid_N = None
    if raw.get("grid") is not None:
        g = raw["grid"]
        if not isinstance(g, dict):
            raise ConfigError("grid must be a mapping", _line(raw, "grid"))
        for key in g:
            if key not in _GRID_KEYS:
                raise ConfigError(f"unknown key {key!r}", _line(g, key))
        if "N" in g:
            grid_N = _number(g["N"], "N", _line(g, "N"), integer=True)
            if grid_N < 64 or grid_N & (grid_N - 1):
                raise ConfigError(f"N must be a power of two >= 64, got {grid_N}", _line(g, "N"))
        if "L" in g:
            grid_L = _number(g["L"], "L", _line(g, "L"))
            if grid_L <= 0:
                raise ConfigError("L must be positive", _line(g, "L"))
    name = raw.get("name") or "+".join(r.label for r in refs)
    name = str(name)
    cfg = ExperimentConfig(name, tuple(refs), dim, tuple(n_list), mode, C, c, grid_L, grid_N)
    try:
        cfg.grid()
    except LabError as exc:
        raise ConfigError(str(exc), _line(raw, "grid")) from None
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; errors carry the offending line."""
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(f"malformed config: {exc.problem}",
                          None if mark is None else mark.line + 1) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", 1)
    if "experiments" in raw:
        for key in raw:
            if key not in _TOP_KEYS:
                raise ConfigError(f"unknown key {key!r}", _line(raw, key))
        exps_raw = raw["experiments"]
        if not isinstance(exps_raw, list) or not exps_raw:
            raise ConfigError("experiments must be a non-empty list", _line(raw, "experiments"))
    else:
        exp_part = _LineDict()
        exp_part.line, exp_part.key_lines = raw.line, {}
        for key, value in raw.items():
            if key in _TOP_KEYS:
                continue
            if key not in _EXP_KEYS:
                raise ConfigError(f"unknown key {key!r}", _line(raw, key))
            exp_part[key] = value
            exp_part.key_lines[key] = _line(raw, key)
        exps_raw = [exp_part]
    experiments = tuple(_parse_experiment(e, i) for i, e in enumerate(exps_raw))
    names = [e.name for e in experiments]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique", _line(raw))

    checks = raw.get("checks", list(CHECK_GROUPS))
    if isinstance(checks, str):
        checks = [c.strip() for c in checks.split(",") if c.strip()]
    for ch in checks:
        if ch not in CHECK_GROUPS:
            raise ConfigError(f"unknown check group {ch!r}", _line(raw, "checks"))
    tol = dict(DEFAULT_TOLERANCES)
    for key, value in (raw.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}", _line(raw["tolerances"], key))
        tol[key] = _number(value, key, _line(raw["tolerances"], key))
    out = raw.get("output_dir", "llt-lab-out")
    return RunConfig(experiments, str(out), frozenset(checks), tol)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


# --------------------------------------------------------------------------
# formatting
# --------------------------------------------------------------------------

def fmt(value) -> str:
    """Fixed textual form: 12 significant digits in scientific notation."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.11e}"
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row.get(h)) for h in header])
    path.write_text(buf.getvalue())


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("_")


# --------------------------------------------------------------------------
# checks
# --------------------------------------------------------------------------

@dataclass
class CheckRow:
    check: str
    family: str
    n: Optional[int]
    observed: Optional[float]
    required: Optional[float]
    passed: bool
    detail: str = ""

    def as_record(self) -> dict:
        return {"check": self.check, "family": self.family, "n": self.n,
                "observed": self.observed, "required": self.required,
                "passed": self.passed, "detail": self.detail}


@dataclass
class TaskResult:
    checks: list = field(default_factory=list)
    bounds: list = field(default_factory=list)
    functionals: list = field(default_factory=list)
    separation: list = field(default_factory=list)
    plots: dict = field(default_factory=dict)     # file name -> (header, rows)
    extra: dict = field(default_factory=dict)
    seconds: float = 0.0
    stage: str = ""


def _isotropy_task(cfg: RunConfig, ref: FamilyRef) -> TaskResult:
    res = TaskResult(stage="isotropy")
    dist = ref.build()
    tol = cfg.tolerances["isotropy"]
    try:
        m = check_isotropic_bounds(dist)
    except LabError as exc:
        res.checks.append(CheckRow("isotropy", dist.name, None, None, -tol, False, str(exc)))
        return res
    for label, margin in (("interval", m.interval), ("ball", m.ball), ("entropy", m.entropy)):
        if margin is None:
            continue
        res.checks.append(CheckRow(f"isotropy:{label}", dist.name, None, margin, -tol,
                                   margin >= -tol, "margin of M^{2/d} sigma^2 over the floor"))
    return res


def _separation_task(cfg: RunConfig, ref: FamilyRef) -> TaskResult:
    res = TaskResult(stage="separation")
    dist = ref.build()
    eps = cfg.tolerances["separation_eps"] / dist.sigma
    T = cfg.tolerances["separation_T"] / dist.sigma
    try:
        rep = CF.separation_scan(dist, eps, T)
    except LabError as exc:
        res.checks.append(CheckRow("separation", dist.name, None, None, 0.0, False, str(exc)))
        return res
    res.separation.append(rep.as_record())
    res.extra["c_empirical"] = rep.c_empirical
    res.checks.append(CheckRow("separation:c_empirical", dist.name, None, rep.c_empirical, 0.0,
                               rep.c_empirical > 0, "; ".join(rep.warnings)))
    res.checks.append(CheckRow("separation:certificate", dist.name, None,
                               rep.certificate_margin, 0.0, rep.certified is True,
                               "Lipschitz certificate beyond the scan window"))
    if rep.floor_margin is not None:
        res.checks.append(CheckRow("separation:floor", dist.name, None, rep.floor_margin, 0.0,
                                   rep.floor_margin >= 0, "proof floor for sigma t >= 1/4"))
    return res


def _cf_norms_task(cfg: RunConfig, ref: FamilyRef) -> TaskResult:
    res = TaskResult(stage="cf_norms")
    dist = ref.build()
    d = dist.dim
    tol = cfg.tolerances[f"plancherel_{d}d"]
    try:
        reports = [CF.lp_norm_cf(dist, m, tol=cfg.tolerances["lp_norm"]) for m in LP_ORDERS]
        sq = CF.density_square_integral(dist)
    except LabError as exc:
        res.checks.append(CheckRow("cf_norms", dist.name, None, None, None, False, str(exc)))
        return res
    err = abs(reports[0].value - sq)
    res.checks.append(CheckRow("cf_norms:plancherel", dist.name, None, err, tol, err <= tol,
                               "|(2pi)^-d int |f|^2 - int p^2|"))
    for r in reports:
        res.checks.append(CheckRow(f"cf_norms:lp_m{r.m}", dist.name, None, r.ratio,
                                   1.0 + cfg.tolerances["lp_norm"] / r.bound, r.holds,
                                   "ratio to the (e/2m)^{d/2} M envelope"))
    return res


def _subadditivity_task(cfg: RunConfig, refs: tuple) -> TaskResult:
    res = TaskResult(stage="subadditivity")
    dists = [r.build() for r in refs]
    label = " * ".join(x.name for x in dists)
    try:
        rec = B.subadditivity_check(dists)
    except LabError as exc:
        res.checks.append(CheckRow("subadditivity", label, len(dists), None, None, False, str(exc)))
        return res
    res.checks.append(CheckRow("subadditivity:harmonic", label, len(dists), rec.harmonic_lhs,
                               rec.harmonic_rhs, rec.harmonic_ok, rec.method))
    res.checks.append(CheckRow("subadditivity:geometric", label, len(dists), rec.M_sum,
                               rec.geometric_rhs, rec.geometric_ok, rec.method))
    if rec.harmonic_rhs_half is not None:
        res.checks.append(CheckRow("subadditivity:half", label, len(dists), rec.harmonic_lhs,
                                   rec.harmonic_rhs_half, bool(rec.half_ok), rec.method))
    return res


def _experiment_task(cfg: RunConfig, ecfg: ExperimentConfig) -> TaskResult:
    res = TaskResult(stage="experiment")
    exp = ecfg.experiment()
    name = ecfg.name
    want = cfg.checks
    report = None
    if want & {"theorems", "rates", "corollary"}:
        report = B.verify_bound(exp, tail_tol=cfg.tolerances["tail_tol"])
        for rec in report.records:
            row = {"family": name, "d": exp.dim, "mode": exp.mode}
            row.update(rec.as_record())
            res.bounds.append(row)
        res.extra["C_min"] = report.C_min
        if report.rate is not None:
            res.extra["rate"] = report.rate.as_record()
        res.plots[f"{_slug(name)}_rate.csv"] = _rate_series(report)
        fun = report.functionals
    else:
        fun = {n: functional_report(exp.families, n).as_record() for n in exp.n_list}
    for n in exp.n_list:
        row = {"family": name, "d": exp.dim, "n": n}
        row.update({k: v for k, v in fun[n].items() if k not in ("n", "dim")})
        res.functionals.append(row)

    if "theorems" in want:
        # The bound's content is a constant uniform in n: C_min(n) may not grow
        # across n_list.  Feasibility at the configured C is reported in bounds.csv.
        growth = cfg.tolerances["cmin_growth"]
        base = next((r.C_min for r in report.records if r.C_min is not None), None)
        for rec in report.records:
            if rec.error is not None:
                res.checks.append(CheckRow("theorems", name, rec.n, None, None, False, rec.error))
            elif rec.C_min == 0.0 or rec.delta_n <= cfg.tolerances["exact_delta"]:
                res.checks.append(CheckRow("theorems", name, rec.n, rec.C_min, None, True,
                                           "exact normality"))
            else:
                limit = growth * base
                res.checks.append(CheckRow(
                    "theorems", name, rec.n, rec.C_min, limit, rec.C_min <= limit,
                    f"C_min uniform in n ({exp.mode}); ratio at C={fmt(exp.C)} is "
                    f"{fmt(rec.ratio)}"))

    if "rates" in want and report is not None:
        res.checks.append(_rate_row(cfg, exp, report))

    if "corollary" in want:
        fams = exp.families
        if all(f.log_concave for f in fams) and all(abs(f.sigma2 - 1) < 1e-9 for f in fams):
            cor = B.corollary12_check(exp, caps=(cfg.tolerances["beta3_cap"],
                                                 cfg.tolerances["beta4_cap"]), report=report)
            res.checks.append(CheckRow("corollary:beta3", name, None, cor.beta3, cor.caps[0],
                                       cor.beta3 <= cor.caps[0], ""))
            res.checks.append(CheckRow("corollary:beta4", name, None, cor.beta4, cor.caps[1],
                                       cor.beta4 <= cor.caps[1], ""))
            res.extra["C_d_sqrt"] = cor.C_d_sqrt
            if cor.C_d_n is not None:
                res.extra["C_d_n"] = cor.C_d_n

    if "cf_product" in want:
        c = cfg.tolerances["cf_product_c"]
        for n in exp.n_list:
            pr = B.cf_product_error_check(exp, n, c=c)
            res.checks.append(CheckRow("cf_product", name, n, pr.C_min, None,
                                       bool(math.isfinite(pr.C_min)),
                                       f"C_min at c={fmt(c)} on |t| <= {fmt(pr.interval_end)}"))
            if pr.small_interval_C_min is not None:
                res.checks.append(CheckRow("cf_product:small_t", name, n, pr.small_interval_C_min,
                                           None, bool(math.isfinite(pr.small_interval_C_min)),
                                           "|t| <= 1 with L_3 > 1"))
            res.plots[f"{_slug(name)}_cf_error_n{n}.csv"] = _cf_series(pr)
    return res


def _rate_row(cfg, exp: B.Experiment, report: B.BoundReport) -> CheckRow:
    ok = [r for r in report.records if r.delta_n is not None]
    if not ok:
        return CheckRow("rates", exp.name, None, None, None, False, "no Delta_n available")
    if max(r.delta_n for r in ok) <= cfg.tolerances["exact_delta"]:
        return CheckRow("rates", exp.name, None, max(r.delta_n for r in ok),
                        cfg.tolerances["exact_delta"], True, "exact normality")
    if report.rate is None:
        return CheckRow("rates", exp.name, None, None, None, False, "fewer than two n")
    expected = -1.0 if all(f.third_moments_vanish for f in exp.families) else -0.5
    slack = cfg.tolerances["rate_slack"]
    slope = report.rate.slope
    return CheckRow("rates", exp.name, None, slope, expected, abs(slope - expected) <= slack,
                    f"slope {fmt(slope)} +- {fmt(report.rate.stderr)}; expected "
                    f"{fmt(expected)} within {fmt(slack)}")


def _rate_series(report: B.BoundReport):
    rows = [{"log_n": math.log(r.n), "log_delta_n": math.log(r.delta_n)}
            for r in report.records if r.delta_n is not None and r.delta_n > 0]
    return ["log_n", "log_delta_n"], rows


def _cf_series(pr: B.CFProductRecord):
    keep = pr.t <= pr.interval_end * (1 + 1e-12)
    rows = [{"t": float(t), "abs_cf_error": float(e)} for t, e in zip(pr.t[keep], pr.error[keep])]
    return ["t", "abs_cf_error"], rows


def emit_plot_data(report: B.BoundReport, path) -> Path:
    """Write the (log n, log Delta_n) series of a bound report."""
    header, rows = _rate_series(report)
    if not rows:
        raise LabError("report has no Delta_n values to plot")
    path = Path(path)
    _write_csv(path, header, rows)
    return path


def emit_cf_error_series(record: B.CFProductRecord, path) -> Path:
    """Write t against |f_n(t) - exp(-t^2/2)| up to the interval endpoint."""
    header, rows = _cf_series(record)
    if not rows:
        raise LabError("empty CF error series")
    path = Path(path)
    _write_csv(path, header, rows)
    return path


# --------------------------------------------------------------------------
# orchestration
# --------------------------------------------------------------------------

def _tasks(cfg: RunConfig) -> list:
    tasks = []
    fams = cfg.unique_families()
    if "isotropy" in cfg.checks:
        tasks += [("isotropy", f) for f in fams]
    if "separation" in cfg.checks:
        tasks += [("separation", f) for f in fams]
    if "cf_norms" in cfg.checks:
        tasks += [("cf_norms", f) for f in fams]
    if "subadditivity" in cfg.checks:
        by_dim: dict = {}
        for f in fams:
            by_dim.setdefault(f.build().dim, []).append(f)
        for dim in sorted(by_dim):
            for k in (2, 3):
                tasks += [("subadditivity", combo) for combo in
                          itertools.combinations_with_replacement(by_dim[dim], k)]
    tasks += [("experiment", e) for e in cfg.experiments]
    return tasks


_HANDLERS = {
    "isotropy": _isotropy_task, "separation": _separation_task, "cf_norms": _cf_norms_task,
    "subadditivity": _subadditivity_task, "experiment": _experiment_task,
}

_POOL_CONFIG: Optional[RunConfig] = None


def _execute(cfg: RunConfig, task) -> TaskResult:
    kind, payload = task
    t0 = time.perf_counter()
    try:
        res = _HANDLERS[kind](cfg, payload)
    except LabError as exc:
        label = payload.name if kind == "experiment" else str(payload)
        res = TaskResult(stage=kind)
        res.checks.append(CheckRow(kind, label, None, None, None, False, str(exc)))
    res.stage = kind
    res.seconds = time.perf_counter() - t0
    return res


def _pool_execute(task) -> TaskResult:
    return _execute(_POOL_CONFIG, task)


def _pool_init(cfg):
    global _POOL_CONFIG
    _POOL_CONFIG = cfg


@dataclass
class RunSummary:
    counts: dict
    passed: int
    failed: int
    global_C_min: Optional[float]
    c_feasible: Optional[float]
    stage_seconds: dict
    failures: list
    rates: dict
    output_dir: str

    @property
    def total(self) -> int:
        return self.passed + self.failed

    @property
    def exit_code(self) -> int:
        return 0 if self.failed == 0 else 1

    def as_record(self) -> dict:
        return {
            "passed": self.passed, "failed": self.failed, "total": self.total,
            "exit_code": self.exit_code, "counts": self.counts,
            "global_C_min": self.global_C_min, "c_feasible": self.c_feasible,
            "rates": self.rates, "failures": self.failures,
            "stage_seconds": self.stage_seconds,
        }


BOUNDS_COLUMNS = ["family", "d", "n", "mode", "delta_n", "rhs_11", "rhs_12", "rhs_71", "rhs_72",
                  "ratio", "feasible", "C_min", "C_min_71", "error"]
FUNCTIONAL_COLUMNS = ["family", "d", "n", "M", "sigma", "beta3", "beta4", "isotropic_const",
                      "L3", "L4", "theta_star3", "theta_star4"]
SEPARATION_COLUMNS = ["family", "d", "eps", "delta_f", "c_empirical", "t_critical", "certified"]
CHECK_COLUMNS = ["check", "family", "n", "observed", "required", "passed", "detail"]


def run(cfg: RunConfig, out_dir=None, jobs: int = 1, log=None) -> RunSummary:
    """Execute the enabled checks and write every report file under ``out_dir``."""
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    (out / "plots").mkdir(exist_ok=True)
    tasks = _tasks(cfg)
    if jobs > 1 and len(tasks) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(jobs, initializer=_pool_init, initargs=(cfg,)) as pool:
            results = pool.map(_pool_execute, tasks, chunksize=1)
    else:
        results = []
        for task in tasks:
            results.append(_execute(cfg, task))
            if log is not None:
                r = results[-1]
                bad = sum(not c.passed for c in r.checks)
                log(f"{r.stage:<14s} {_task_label(task):<60.60s} {r.seconds:7.2f}s"
                    + (f"  {bad} failed" if bad else ""))

    checks, bounds_rows, fun_rows, sep_rows = [], [], [], []
    plots: dict = {}
    stage_seconds: dict = {}
    rates, c_emp, cmins = {}, [], []
    for task, r in zip(tasks, results):
        checks += r.checks
        bounds_rows += r.bounds
        fun_rows += r.functionals
        sep_rows += r.separation
        plots.update(r.plots)
        stage_seconds[r.stage] = stage_seconds.get(r.stage, 0.0) + r.seconds
        if "c_empirical" in r.extra:
            c_emp.append(r.extra["c_empirical"])
        if r.extra.get("C_min") is not None:
            cmins.append(r.extra["C_min"])
        if task[0] == "experiment":
            rates[task[1].name] = r.extra.get("rate")

    _write_csv(out / "bounds.csv", BOUNDS_COLUMNS, bounds_rows)
    _write_csv(out / "functionals.csv", FUNCTIONAL_COLUMNS, fun_rows)
    _write_csv(out / "separation.csv", SEPARATION_COLUMNS, sep_rows)
    _write_csv(out / "checks.csv", CHECK_COLUMNS, [c.as_record() for c in checks])
    for name in sorted(plots):
        header, rows = plots[name]
        _write_csv(out / "plots" / name, header, rows)

    counts: dict = {}
    for c in checks:
        group = c.check.split(":")[0]
        slot = counts.setdefault(group, {"pass": 0, "fail": 0})
        slot["pass" if c.passed else "fail"] += 1
    failures = [{"family": c.family, "n": c.n, "check": c.check, "observed": c.observed,
                 "required": c.required, "detail": c.detail} for c in checks if not c.passed]
    summary = RunSummary(
        counts=counts, passed=sum(c.passed for c in checks),
        failed=sum(not c.passed for c in checks),
        global_C_min=max(cmins) if cmins else None,
        c_feasible=min(c_emp) if c_emp else None,
        stage_seconds={k: round(v, 3) for k, v in sorted(stage_seconds.items())},
        failures=failures, rates=rates, output_dir=str(out),
    )
    (out / "summary.json").write_text(json.dumps(_jsonable(summary.as_record()), indent=2,
                                                 sort_keys=True) + "\n")
    return summary


def _task_label(task) -> str:
    kind, payload = task
    if kind == "experiment":
        return payload.name
    if kind == "subadditivity":
        return " * ".join(f.label for f in payload)
    return payload.label


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
