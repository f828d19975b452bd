"""End-to-end checks of the local-limit bounds.

Subadditivity of the maximum of density under convolution, the normal
approximation of the CF product on its natural interval, the refined and
simplified bounds on Delta_n = sup |p_n - phi|, their rates in n, and the
log-concave corollary.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from ._quadrature import unit_directions
from .distributions import DistributionSpec
from .errors import (LabError, ModeMismatchError, ParameterError, PreconditionError,
                     WindowError)
from .functionals import FunctionalReport, beta_p_sup, functional_report, max_density
from .grid import (GridSpec, cycle_summands, invert_to_density, max_of_convolution_1d,
                   product_cf, sum_cf, sup_distance)

__all__ = [
    "Experiment", "NRecord", "BoundReport", "SubadditivityRecord", "CFProductRecord",
    "subadditivity_check", "cf_product_error_check", "theorem11_rhs", "theorem12_rhs",
    "theorem71_rhs", "verify_bound", "rate_fit", "corollary12_check", "chain_check",
    "DEFAULT_C", "DEFAULT_c",
]

DEFAULT_C = 3.0
DEFAULT_c = 0.1

Mode = Literal["general", "symmetric"]


@dataclass
class Experiment:
    families: Sequence[DistributionSpec]
    n_list: Sequence[int]
    mode: Mode = "general"
    C: float = DEFAULT_C
    c: float = DEFAULT_c
    grid: Optional[GridSpec] = None
    name: str = ""

    def __post_init__(self):
        if not self.families:
            raise ParameterError("experiment needs at least one family")
        dims = {f.dim for f in self.families}
        if len(dims) != 1:
            raise ParameterError("families must share a dimension")
        self.n_list = [int(n) for n in self.n_list]
        if not self.n_list:
            raise ParameterError("n_list is empty")
        if any(n < 1 for n in self.n_list) or self.n_list != sorted(set(self.n_list)):
            raise ParameterError("n_list must be strictly increasing positive integers")
        if self.mode not in ("general", "symmetric"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mode == "symmetric" and not all(f.third_moments_vanish for f in self.families):
            raise ModeMismatchError("symmetric mode needs vanishing third moments")
        if self.C <= 0 or self.c <= 0:
            raise ParameterError("constants C and c must be positive")
        if self.grid is not None and self.grid.dim != self.dim:
            raise ParameterError("grid dimension differs from the families'")
        if not self.name:
            self.name = "+".join(f.name for f in self.families)

    @property
    def dim(self) -> int:
        return self.families[0].dim


# --------------------------------------------------------------------------
# right-hand sides
# --------------------------------------------------------------------------

def theorem11_rhs(report: FunctionalReport, n: int, d: int, C: float) -> float:
    """(C sigma)^d M^2 beta_3 / sqrt(n)."""
    return (C * report.sigma) ** d * report.M ** 2 * report.beta3 / math.sqrt(n)


def theorem12_rhs(report: FunctionalReport, n: int, d: int, C: float,
                  third_moments_vanish: bool) -> float:
    """(C sigma)^{2d} M^3 beta_4 / n; only valid when all third moments vanish."""
    if not third_moments_vanish:
        raise ModeMismatchError("the n^-1 bound needs vanishing third moments")
    return (C * report.sigma) ** (2 * d) * report.M ** 3 * report.beta4 / n


def _exponent_71(per_k, beta: float, d: int, c: float, mode: Mode) -> float:
    total = 0.0
    for m_k, s_k in per_k:
        cap = s_k ** 2 / beta ** 2 if mode == "general" else s_k ** 2 / beta
        total += min(cap, 1.0) / (m_k ** 2 * s_k ** (2 * d))
    return c ** d * total


def theorem71_rhs(per_k: Sequence[tuple], beta: float, n: int, d: int, C: float, c: float,
                  mode: Mode = "general") -> float:
    """Refined bound with per-summand (M_k, sigma_k).

    ``per_k`` holds n pairs; ``beta`` is beta_3 (general) or beta_4 (symmetric).
    """
    if len(per_k) != n:
        raise ParameterError(f"expected {n} (M_k, sigma_k) pairs, got {len(per_k)}")
    first = beta / math.sqrt(n) if mode == "general" else beta / n
    geo = math.exp(sum(math.log(m) for m, _ in per_k) / n)
    return C ** d * (first + geo * math.exp(-_exponent_71(per_k, beta, d, c, mode)))


def _bracket_71(per_k, beta, n, d, c, mode):
    # theorem71_rhs / C^d
    return theorem71_rhs(per_k, beta, n, d, 1.0, c, mode)


# --------------------------------------------------------------------------
# subadditivity of M under convolution
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SubadditivityRecord:
    families: tuple
    dim: int
    M_k: tuple
    M_sum: float
    harmonic_lhs: float          # M(S)^{-2/d}
    harmonic_rhs: float          # (1/e) sum M_k^{-2/d}
    harmonic_rhs_half: Optional[float]   # (1/2) sum M_k^{-2} (d = 1)
    geometric_rhs: float         # (prod M_k)^{1/m}
    method: str

    @property
    def harmonic_ok(self) -> bool:
        return self.harmonic_lhs >= self.harmonic_rhs * (1 - 1e-9)

    @property
    def half_ok(self) -> Optional[bool]:
        if self.harmonic_rhs_half is None:
            return None
        return self.harmonic_lhs >= self.harmonic_rhs_half * (1 - 1e-6)

    @property
    def geometric_ok(self) -> bool:
        return self.M_sum <= self.geometric_rhs * (1 + 1e-8)

    @property
    def ok(self) -> bool:
        return self.harmonic_ok and self.geometric_ok and self.half_ok is not False


def _max_of_sum_grid(dists: Sequence[DistributionSpec]) -> float:
    d = dists[0].dim
    s = math.sqrt(sum(x.sigma2 for x in dists))
    points = {1: 1 << 15, 2: 512, 3: 128}[d]
    spec = GridSpec(d, 12.0 * s * math.sqrt(d), points)
    cf = sum_cf(list(dists), spec)
    dens = invert_to_density(cf, strict=False)
    return float(dens.max_refined()[0])


def subadditivity_check(dists: Sequence[DistributionSpec]) -> SubadditivityRecord:
    """M(X_1 + ... + X_m) against its harmonic- and geometric-mean bounds."""
    m = len(dists)
    if m < 2:
        raise ParameterError("need at least two summands")
    d = dists[0].dim
    if any(x.dim != d for x in dists):
        raise ParameterError("summands must share a dimension")
    Ms = [max_density(x) for x in dists]
    if not all(math.isfinite(v) for v in Ms):
        raise PreconditionError("all summands need a bounded density")
    if all(x.log_cf is not None for x in dists):
        # Gaussian summands: the sum is Gaussian with the summed covariance
        M_sum = (2.0 * math.pi * sum(x.sigma2 for x in dists)) ** (-d / 2.0)
        method = "closed-form"
    elif d == 1 and m == 2:
        # locate the grid maximum, then refine with adaptive quadrature
        a, b = dists
        spec = GridSpec(1, 12.0 * math.sqrt(a.sigma2 + b.sigma2), 1 << 14)
        dens = invert_to_density(sum_cf([a, b], spec), strict=False)
        loc = float(dens.max_refined()[1][0])
        M_sum, _ = max_of_convolution_1d(a, b, loc, bracket=8 * spec.step)
        method = "quadrature"
    else:
        M_sum = _max_of_sum_grid(dists)
        method = "grid"
    inv = [v ** (-2.0 / d) for v in Ms]
    return SubadditivityRecord(
        families=tuple(x.name for x in dists), dim=d, M_k=tuple(Ms), M_sum=float(M_sum),
        harmonic_lhs=float(M_sum ** (-2.0 / d)), harmonic_rhs=float(sum(inv) / math.e),
        harmonic_rhs_half=float(0.5 * sum(inv)) if d == 1 else None,
        geometric_rhs=float(math.exp(sum(math.log(v) for v in Ms) / m)), method=method,
    )


# --------------------------------------------------------------------------
# CF product vs the normal CF
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CFProductRecord:
    n: int
    mode: str
    c: float
    beta: float
    interval_end: float
    C_min: float
    t: np.ndarray = field(repr=False)
    error: np.ndarray = field(repr=False)      # max over probe directions
    small_interval_C_min: Optional[float] = None   # |t| <= 1, only when L_3 > 1


def _directional_fn(dists: Sequence[DistributionSpec], n: int, theta: np.ndarray,
                    t: np.ndarray) -> np.ndarray:
    summands = cycle_summands(dists, n)
    pts = (t / math.sqrt(n))[:, None] * theta[None, :]
    counts: dict = {}
    for s in summands:
        counts[id(s)] = (s, counts.get(id(s), (s, 0))[1] + 1)
    if all(s.log_cf is not None for s, _ in counts.values()):
        return np.exp(sum(k * s.log_cf(pts) for s, k in counts.values())).astype(complex)
    out = np.ones(len(t), dtype=complex)
    for s, k in counts.values():
        out *= s.charfn(pts) ** k
    return out


def cf_product_error_check(exp: Experiment, n: int, c: float = 0.125, n_points: int = 512,
                           n_directions: int = 16) -> CFProductRecord:
    """Smallest C with |f_n(t) - exp(-t^2/2)| <= C L |t|^k exp(-c t^2) on the interval.

    General mode: L = beta_3 / sqrt(n), k = 3, |t| <= sqrt(n) / beta_3.
    Symmetric mode: L = beta_4 / n, k = 4, |t| <= sqrt(n / beta_4).
    In d >= 2 the one-dimensional statement is applied to <theta, X_k>
    along probe directions, with the directional sup of beta.
    """
    d = exp.dim
    if exp.mode == "general":
        beta = beta_p_sup(exp.families, n, 3).value
        end, power, L = math.sqrt(n) / beta, 3, beta / math.sqrt(n)
    else:
        beta = beta_p_sup(exp.families, n, 4).value
        end, power, L = math.sqrt(n / beta), 4, beta / n
    t = end * np.arange(1, n_points + 1) / n_points
    dirs = unit_directions(d, n_directions) if d > 1 else np.array([[1.0]])
    err = np.zeros_like(t)
    for th in dirs:
        e = np.abs(_directional_fn(exp.families, n, th, t) - np.exp(-0.5 * t * t))
        err = np.maximum(err, e)
    env = L * t ** power * np.exp(-c * t * t)
    c_min = float((err / env).max())
    small = None
    L3 = beta_p_sup(exp.families, n, 3).value / math.sqrt(n)
    if L3 > 1.0:
        ts = np.arange(1, n_points + 1) / n_points
        es = np.zeros_like(ts)
        for th in dirs:
            es = np.maximum(es, np.abs(_directional_fn(exp.families, n, th, ts)
                                       - np.exp(-0.5 * ts * ts)))
        small = float((es / (L * ts ** power * np.exp(-c * ts * ts))).max())
    return CFProductRecord(n=n, mode=exp.mode, c=float(c), beta=float(beta),
                           interval_end=float(end), C_min=c_min, t=t, error=err,
                           small_interval_C_min=small)


# --------------------------------------------------------------------------
# Delta_n and the main bounds
# --------------------------------------------------------------------------

@dataclass
class NRecord:
    n: int
    delta_n: Optional[float]
    rhs_11: Optional[float] = None
    rhs_12: Optional[float] = None
    rhs_71: Optional[float] = None
    rhs_72: Optional[float] = None
    ratio: Optional[float] = None
    feasible: Optional[bool] = None
    C_min: Optional[float] = None
    C_min_71: Optional[float] = None
    location: Optional[tuple] = None
    error: Optional[str] = None

    def as_record(self) -> dict:
        return asdict(self)


@dataclass
class RateFit:
    slope: float
    stderr: float
    intercept: float
    dropped: tuple

    def as_record(self) -> dict:
        return asdict(self)


@dataclass
class BoundReport:
    experiment: str
    dim: int
    mode: str
    C: float
    c: float
    records: list
    C_min: Optional[float]
    rate: Optional[RateFit]
    functionals: dict

    @property
    def rate_slope(self) -> Optional[float]:
        return None if self.rate is None else self.rate.slope

    @property
    def failures(self) -> list:
        return [r for r in self.records if r.error is not None or r.feasible is False]


def rate_fit(n: Sequence[int], delta: Sequence[float], drop_n: int = 4) -> RateFit:
    """Least-squares slope of log delta against log n, with its standard error.

    The point at ``drop_n`` is treated as a pre-asymptotic transient and
    dropped when its residual against the fit of the other points exceeds
    three times that fit's RMS residual.
    """
    n = np.asarray(n, dtype=float)
    y = np.log(np.maximum(np.asarray(delta, dtype=float), 1e-300))
    x = np.log(n)
    if len(n) < 2:
        raise ParameterError("rate fit needs at least two points")
    keep = np.ones(len(n), dtype=bool)
    dropped = ()
    others = n != drop_n
    if (~others).any() and others.sum() >= 3:
        coef = np.polyfit(x[others], y[others], 1)
        resid = y[others] - np.polyval(coef, x[others])
        rms = math.sqrt(float(np.mean(resid ** 2)))
        r0 = float(y[~others][0] - np.polyval(coef, x[~others][0]))
        if abs(r0) > 3.0 * rms:
            keep = others
            dropped = (drop_n,)
    xs, ys = x[keep], y[keep]
    coef, cov = _polyfit_cov(xs, ys)
    return RateFit(float(coef[0]), float(math.sqrt(cov)), float(coef[1]), dropped)


def _polyfit_cov(x, y):
    coef = np.polyfit(x, y, 1)
    k = len(x)
    if k <= 2:
        return coef, 0.0
    resid = y - np.polyval(coef, x)
    s2 = float(resid @ resid) / (k - 2)
    sxx = float(((x - x.mean()) ** 2).sum())
    return coef, s2 / sxx


def _normal_density(var: float, d: int):
    def q(x):
        return (2.0 * math.pi * var) ** (-d / 2.0) * np.exp(-0.5 * np.sum(x * x, axis=-1) / var)
    return q


def _per_k(exp: Experiment, n: int):
    return [(max_density(s), s.sigma) for s in cycle_summands(exp.families, n)]


def verify_bound(exp: Experiment, tail_tol: float = 1e-6) -> BoundReport:
    """Delta_n on the grid and every applicable right-hand side, for each n.

    The comparison normal has the average covariance of the summands
    (the standard normal for unit-variance laws).  A window failure at
    one n becomes a failure record for that n only.
    """
    d = exp.dim
    sym_ok = all(f.third_moments_vanish for f in exp.families)
    records = []
    fun = {}
    for n in exp.n_list:
        rep = functional_report(exp.families, n)
        fun[n] = rep
        summands = cycle_summands(exp.families, n)
        var = sum(s.sigma2 for s in summands) / n
        spec = exp.grid or GridSpec.default(d, math.sqrt(var))
        rec = NRecord(n=n, delta_n=None)
        try:
            dens = invert_to_density(product_cf(exp.families, n, spec), tail_tol=tail_tol)
            sd = sup_distance(dens, _normal_density(var, d))
        except (WindowError, LabError) as e:
            rec.error = str(e)
            records.append(rec)
            continue
        delta = float(sd.value)
        rec.delta_n = delta
        rec.location = tuple(float(v) for v in sd.location)
        per_k = _per_k(exp, n)
        rec.rhs_11 = theorem11_rhs(rep, n, d, exp.C)
        rec.rhs_71 = theorem71_rhs(per_k, rep.beta3, n, d, exp.C, exp.c, "general")
        if sym_ok:
            rec.rhs_12 = theorem12_rhs(rep, n, d, exp.C, True)
            rec.rhs_72 = theorem71_rhs(per_k, rep.beta4, n, d, exp.C, exp.c, "symmetric")
        if exp.mode == "symmetric":
            rec.ratio = delta / rec.rhs_12
            unit = rep.sigma ** (2 * d) * rep.M ** 3 * rep.beta4 / n
            rec.C_min = (delta / unit) ** (1.0 / (2 * d))
            rec.C_min_71 = (delta / _bracket_71(per_k, rep.beta4, n, d, exp.c,
                                                "symmetric")) ** (1.0 / d)
        else:
            rec.ratio = delta / rec.rhs_11
            unit = rep.sigma ** d * rep.M ** 2 * rep.beta3 / math.sqrt(n)
            rec.C_min = (delta / unit) ** (1.0 / d)
            rec.C_min_71 = (delta / _bracket_71(per_k, rep.beta3, n, d, exp.c,
                                                "general")) ** (1.0 / d)
        rec.feasible = bool(rec.ratio <= 1.0)
        records.append(rec)
    ok = [r for r in records if r.delta_n is not None]
    c_min = max((r.C_min for r in ok), default=None)
    rate = None
    if len(ok) >= 2:
        rate = rate_fit([r.n for r in ok], [r.delta_n for r in ok])
    return BoundReport(exp.name, d, exp.mode, exp.C, exp.c, records, c_min, rate,
                       {n: r.as_record() for n, r in fun.items()})


# --------------------------------------------------------------------------
# log-concave corollary
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CorollaryRecord:
    beta3: float
    beta4: float
    caps: tuple
    caps_ok: bool
    C_d_sqrt: float                 # max_n Delta_n sqrt(n)
    C_d_sqrt_prefix: float          # same over n <= prefix_max
    C_d_n: Optional[float]          # max_n Delta_n n, symmetric laws only
    C_d_n_prefix: Optional[float]
    prefix_max: int

    @property
    def stability(self) -> Optional[float]:
        """Relative change of the n^-1 constant when the n list is extended."""
        if self.C_d_n is None or not self.C_d_n_prefix:
            return None
        return abs(self.C_d_n / self.C_d_n_prefix - 1.0)


def corollary12_check(exp: Experiment, caps: tuple = (3.0, 12.0),
                      prefix_max: int = 32, report: Optional[BoundReport] = None
                      ) -> CorollaryRecord:
    """beta caps and the minimal constants C_d for log-concave unit-variance laws."""
    if not all(f.log_concave for f in exp.families):
        raise PreconditionError("corollary needs log-concave families")
    if not all(math.isclose(f.sigma2, 1.0, rel_tol=1e-9) for f in exp.families):
        raise PreconditionError("corollary needs sigma = 1")
    if report is None:
        report = verify_bound(exp)
    b3 = max(beta_p_sup([f], 1, 3).value for f in exp.families)
    b4 = max(beta_p_sup([f], 1, 4).value for f in exp.families)
    ok = [r for r in report.records if r.delta_n is not None]
    if not ok:
        raise PreconditionError("no n produced a density")
    sq = [r.delta_n * math.sqrt(r.n) for r in ok]
    sq_pre = [v for v, r in zip(sq, ok) if r.n <= prefix_max]
    sym = all(f.third_moments_vanish for f in exp.families)
    lin = [r.delta_n * r.n for r in ok] if sym else None
    lin_pre = [v for v, r in zip(lin, ok) if r.n <= prefix_max] if sym else None
    return CorollaryRecord(
        beta3=b3, beta4=b4, caps=tuple(caps), caps_ok=b3 <= caps[0] and b4 <= caps[1],
        C_d_sqrt=max(sq), C_d_sqrt_prefix=max(sq_pre) if sq_pre else math.nan,
        C_d_n=max(lin) if lin else None,
        C_d_n_prefix=max(lin_pre) if lin_pre else None, prefix_max=prefix_max,
    )


# --------------------------------------------------------------------------
# the simplification chain from the refined bound to the simple one
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainPoint:
    d: int
    M: float
    sigma: float
    beta: float
    n: int
    mode: str
    second: float        # second summand of the refined bound, homogeneous summands
    simplified: float    # C^d M exp(-c^d n / (M^2 sigma^{2d} beta^k))
    majorant: float      # after e^{-x} < x^{-1/2} (general) or x^{-1} (symmetric)

    @property
    def ok(self) -> bool:
        return self.second <= self.simplified * (1 + 1e-9) and self.simplified < self.majorant


def fixture_grid() -> list:
    """Homogeneous (d, M, sigma, beta, n) points with M^{2/d} sigma^2 >= 1/(2 pi e)."""
    pts = []
    for d, sigma, q, beta, n in itertools.product(
            (1, 2, 3), (1.0, 1.5, 2.0), (0.06, 0.0833333333333, 0.2, 1.0),
            (1.0, 1.3, 2.4, 5.0), (1, 2, 4, 16, 64, 256, 1024)):
        # q = M^{2/d} sigma^2 sits above the isotropic floor 1/(2 pi e) = 0.0585
        M = (q / sigma ** 2) ** (d / 2.0)
        pts.append((d, M, sigma, beta, n))
    return pts


def chain_check(points=None, C: float = DEFAULT_C, c: float = DEFAULT_c) -> list:
    """Evaluate both modes of the simplification at every fixture point.

    The majorant keeps the factor c^{-d/2} (c^{-d} in symmetric mode) that
    the majorization produces; it is absorbed into the absolute constant
    of the simple bound.
    """
    out = []
    for d, M, sigma, beta, n in (points or fixture_grid()):
        for mode in ("general", "symmetric"):
            b = beta if mode == "general" else beta ** 2   # beta_4 >= beta_3^2
            per_k = [(M, sigma)] * n
            second = C ** d * M * math.exp(-_exponent_71(per_k, b, d, c, mode))
            k = 2 if mode == "general" else 1
            x = c ** d * n / (M * M * sigma ** (2 * d) * b ** k)
            simplified = C ** d * M * math.exp(-x)
            if mode == "general":
                majorant = C ** d * M * M * sigma ** d * b / (c ** (d / 2.0) * math.sqrt(n))
            else:
                majorant = C ** d * M ** 3 * sigma ** (2 * d) * b / (c ** d * n)
            out.append(ChainPoint(d, M, sigma, b, n, mode, second, simplified, majorant))
    return out
