"""Characteristic-function analytics.

Separation of |f| from 1, the truncated law X_r, symmetrization, L^{2m}
norms of f and tail integrals of |f|^n.  The absolute constants that the
underlying inequalities leave open are estimated empirically here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import special

from ._quadrature import (ball_rule, charfn_from_rule, fibonacci_sphere, gauss_legendre_panels,
                          sphere_area, unit_directions)
from .distributions import DistributionSpec, ball_volume
from .errors import (DegenerateTruncationError, ParameterError, UnboundedDensityError,
                     WindowError)
from .functionals import max_density, projected_density
from .grid import convolution_density_1d

__all__ = [
    "SeparationReport", "TruncatedSpec", "CFIntegral", "LpNormReport", "TailReport",
    "symmetrize", "separation_scan", "truncate", "truncation_relation_check",
    "cf_power_integral", "density_square_integral", "lp_norm_cf", "tail_integral_cf",
    "c_feasible",
]

PROOF_FLOOR = 1.0 / 3456.0


# --------------------------------------------------------------------------
# |f| along rays and on sets of points
# --------------------------------------------------------------------------

def _modulus(dist: DistributionSpec, t: np.ndarray) -> np.ndarray:
    """|f(t)| for points t of shape (..., d)."""
    if dist.radial_profile is not None:
        return np.abs(dist.radial_profile(np.linalg.norm(t, axis=-1)))
    return np.abs(dist.charfn(t))


def _is_radial(dist: DistributionSpec) -> bool:
    return dist.dim == 1 or dist.radial_profile is not None


def _ray_modulus(dist: DistributionSpec) -> Callable[[np.ndarray], np.ndarray]:
    if dist.radial_profile is not None:
        return lambda rho: np.abs(dist.radial_profile(rho))
    return lambda rho: np.abs(dist.charfn(np.asarray(rho)[:, None]))


# --------------------------------------------------------------------------
# integrals of |f|^power
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CFIntegral:
    """Integral of |f|^power over eps <= |t| (<= window when not extrapolated)."""
    value: float
    tail: float         # extrapolated contribution beyond the window
    window: float
    converged: bool


def _panel_width(dist: DistributionSpec) -> float:
    # |f| oscillates on the scale pi / (distance between density jumps);
    # smooth parts only need a few sigma
    reach = 6.0 * dist.sigma
    if dist.support_radius is not None:
        reach = max(reach, 2.0 * dist.support_radius)
    if dist.breakpoints:
        reach = max(reach, max(dist.breakpoints) - min(dist.breakpoints))
    return math.pi / (4.0 * reach)


def _ray_integral(g: Callable[[np.ndarray], np.ndarray], d: int, eps: float, width: float,
                  t0: float, t_cap: float, tol: float, extrapolate: bool = True) -> CFIntegral:
    """S_{d-1} * int_eps^inf rho^{d-1} g(rho) drho with dyadic blocks.

    The tail beyond the last block is extrapolated from the ratio of the
    last two dyadic block integrals (a power law A rho^-alpha gives a
    geometric series).  Oscillation averages out over a dyadic block.
    """
    area = sphere_area(d) if d > 1 else 2.0

    def block(a, b):
        if b <= a:
            return 0.0
        x, w = gauss_legendre_panels([a, b], max_width=width)
        return float(area * (w * x ** (d - 1)) @ g(x))

    total = block(eps, min(t0, t_cap))
    hi = min(t0, t_cap)
    if not extrapolate:
        return CFIntegral(total, 0.0, hi, True)
    prev = None
    tail = math.inf
    while True:
        j = block(hi, 2.0 * hi)
        total += j
        hi *= 2.0
        if prev is not None and prev > 0:
            q = j / prev
            tail = j * q / (1.0 - q) if q < 1.0 else math.inf
        elif j == 0.0:
            tail = 0.0
        if tail <= tol or hi >= t_cap:
            break
        prev = j
    if not math.isfinite(tail):
        raise WindowError(f"|f|^p tail not integrable or not decaying by |t| = {hi:.4g}; "
                          "widen the window")
    return CFIntegral(total + tail, tail, hi, tail <= tol)


def _disk_integral(dist: DistributionSpec, power: float, radius: float) -> float:
    if radius <= 0:
        return 0.0
    x, w = ball_rule(dist.dim, radius, n_radial=64, n_angular=64)
    return float(w @ _modulus(dist, x) ** power)


def _box_integral_2d(dist: DistributionSpec, power: float, half: float, width: float) -> float:
    # Hermitian symmetry: integrate t1 >= 0 and double
    a1, w1 = gauss_legendre_panels([0.0, half], max_width=width, order=8)
    a2, w2 = gauss_legendre_panels([-half, half], max_width=width, order=8)
    if dist.tensor_cf is not None:
        vals = np.abs(dist.tensor_cf([a1, a2])) ** power
    else:
        pts = np.stack(np.meshgrid(a1, a2, indexing="ij"), axis=-1)
        vals = _modulus(dist, pts) ** power
    return float(2.0 * w1 @ vals @ w2)


def cf_power_integral(dist: DistributionSpec, power: float, eps: float = 0.0,
                      window: Optional[float] = None, tol: float = 1e-10) -> CFIntegral:
    """int_{|t| >= eps} |f(t)|^power dt.

    With ``window`` the integral is restricted to eps <= |t| <= window and
    nothing is extrapolated.  Otherwise the window grows dyadically until
    the extrapolated tail is below ``tol``.  Rotation-invariant laws reduce
    to one radial integral; products of one-dimensional laws factorize; the
    remaining two-dimensional laws use a tensor Gauss-Legendre box.
    """
    if power <= 0:
        raise ParameterError("power must be positive")
    d = dist.dim
    s = dist.sigma
    if _is_radial(dist):
        g = _ray_modulus(dist)
        return _ray_integral(lambda x: g(x) ** power, d, eps, _panel_width(dist),
                             t0=window if window is not None else 32.0 / s,
                             t_cap=window if window is not None else 2.0 ** 13 / s,
                             tol=tol, extrapolate=window is None)
    if dist.factors and window is None:
        value, tail, hi, conv = 1.0, 0.0, math.inf, True
        for f in dist.factors:
            part = cf_power_integral(f, power, tol=tol)
            value *= part.value
            tail = max(tail, part.tail)
            hi = min(hi, part.window)
            conv = conv and part.converged
        return CFIntegral(value - _disk_integral(dist, power, eps), tail, hi, conv)
    if d != 2:
        raise ParameterError(f"no CF integrator for {dist.family_id} in dimension {d}")
    width = 0.5 / s
    if window is not None:
        # disk of radius `window` through a polar rule
        x, w = ball_rule(2, window, n_radial=16 * max(1, int(window / width)), n_angular=256)
        inside = float(w @ _modulus(dist, x) ** power)
        return CFIntegral(inside - _disk_integral(dist, power, eps), 0.0, window, True)
    # boxes of half-width T = 16, 32, 64, 128 (/sigma); the excess beyond the
    # box is fitted by (A log T + B) / T, the decay of indicator-type laws
    # with thin unbounded support (a logarithmic ridge along one axis)
    halves = np.array([16.0, 32.0, 64.0, 128.0]) / s
    boxes = np.array([_box_integral_2d(dist, power, h, width) for h in halves])
    t = halves[-3:]
    design = np.stack([np.ones(3), -np.log(t) / t, -1.0 / t], axis=1)
    limit = float(np.linalg.solve(design, boxes[-3:])[0])
    tail = limit - float(boxes[-1])
    half = float(halves[-1])
    if not math.isfinite(tail):
        raise WindowError(f"|f|^p tail not decaying by |t| = {half:.4g}; widen the window")
    value = limit - _disk_integral(dist, power, eps)
    return CFIntegral(value, tail, half, tail <= tol)


def density_square_integral(dist: DistributionSpec) -> float:
    """int p^2 dx from the law's quadrature rule (sum w p(x))."""
    if dist.factors:
        return float(np.prod([density_square_integral(f) for f in dist.factors]))
    nodes, w = dist.quadrature()
    return float(w @ dist.density(nodes))


@dataclass(frozen=True)
class LpNormReport:
    m: int
    value: float        # (2 pi)^-d int |f|^{2m}
    bound: float        # (e / 2m)^{d/2} M
    tail: float
    holds: bool

    @property
    def ratio(self) -> float:
        return self.value / self.bound


def lp_norm_cf(dist: DistributionSpec, m: int, tol: float = 1e-8) -> LpNormReport:
    if int(m) != m or m < 1:
        raise ParameterError("m must be a positive integer")
    M = max_density(dist)
    if not math.isfinite(M):
        raise UnboundedDensityError(f"{dist.family_id}: unbounded density")
    d = dist.dim
    res = cf_power_integral(dist, 2 * m, tol=1e-10)
    value = res.value / (2.0 * math.pi) ** d
    bound = (math.e / (2.0 * m)) ** (d / 2.0) * M
    return LpNormReport(int(m), value, bound, res.tail, value <= bound + tol)


@dataclass(frozen=True)
class TailReport:
    eps: float
    n: int
    value: float
    envelope: float     # (8 pi^2 e / n)^{d/2} M exp(-c^d n min(s^2 e^2, 1) / (M^2 s^{2d}))
    c: float


def tail_integral_cf(dist: DistributionSpec, eps: float, n: int,
                     c: Optional[float] = None) -> TailReport:
    """int_{|t| >= eps} |f|^n dt, paired with the exponential envelope at constant c.

    ``c`` defaults to the law's empirical separation constant.
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if eps < 0:
        raise ParameterError("eps must be non-negative")
    d = dist.dim
    M = max_density(dist)
    s2 = dist.sigma2
    if c is None:
        c = separation_scan(dist, eps=0.05 / dist.sigma, T_max=40.0 / dist.sigma).c_empirical
    value = cf_power_integral(dist, n, eps=eps).value
    expo = c ** d * n * min(s2 * eps * eps, 1.0) / (M * M * s2 ** d)
    env = (8.0 * math.pi ** 2 * math.e / n) ** (d / 2.0) * M * math.exp(-expo)
    return TailReport(float(eps), int(n), value, env, float(c))


# --------------------------------------------------------------------------
# symmetrization
# --------------------------------------------------------------------------

def symmetrize(dist: DistributionSpec) -> DistributionSpec:
    """Law of X - X' with X' an independent copy; its CF is |f|^2."""
    d = dist.dim
    base_nodes, base_w = dist.quadrature(0 if d > 1 else 1)

    if d == 1:
        mirror = _negated(dist)

        def density(x):
            flat = x[..., 0].ravel()
            out = np.array([convolution_density_1d(dist, mirror, float(v)) for v in flat])
            return out.reshape(x.shape[:-1])
    else:
        def density(x):
            # w(x) = E p(x + X')
            flat = x.reshape(-1, d)
            out = np.empty(flat.shape[0])
            for i in range(0, flat.shape[0], 256):
                pts = flat[i:i + 256, None, :] + base_nodes[None, :, :]
                out[i:i + 256] = dist.density(pts) @ base_w
            return out.reshape(x.shape[:-1])

    def cf(t):
        return (np.abs(dist.charfn(t)) ** 2).astype(complex)

    def rule(level):
        nodes, w = dist.quadrature(0)
        if len(nodes) > 4096:
            raise ParameterError(f"difference rule for {dist.family_id} would have "
                                 f"{len(nodes) ** 2} nodes")
        diff = (nodes[:, None, :] - nodes[None, :, :]).reshape(-1, d)
        return diff, np.outer(w, w).ravel()

    prof = dist.radial_profile
    return DistributionSpec(
        family_id=f"symmetrized-{dist.family_id}", dim=d, density=density, cf=cf,
        sigma2=2.0 * dist.sigma2, symmetric=True, third_moments_vanish=True,
        log_concave=dist.log_concave,
        support_radius=None if dist.support_radius is None else 2.0 * dist.support_radius,
        max_density_closed_form=density_square_integral(dist),
        params={**dist.params}, bounded_projections=dist.bounded_projections,
        radial_profile=None if prof is None else (lambda s: np.abs(prof(s)) ** 2),
        breakpoints=tuple(sorted({*dist.breakpoints, *(-b for b in dist.breakpoints)})),
        _rule_factory=rule,
    )


def _negated(dist: DistributionSpec) -> DistributionSpec:
    if dist.symmetric:
        return dist

    def density(x):
        return dist.density(-x)

    def rule(level):
        nodes, w = dist.quadrature(level)
        return -nodes, w

    cf = None if dist.cf is None else (lambda t: np.conj(dist.cf(t)))
    return DistributionSpec(
        family_id=dist.family_id, dim=dist.dim, density=density, cf=cf, sigma2=dist.sigma2,
        symmetric=False, third_moments_vanish=dist.third_moments_vanish,
        log_concave=dist.log_concave, support_radius=dist.support_radius,
        max_density_closed_form=dist.max_density_closed_form,
        breakpoints=tuple(-b for b in dist.breakpoints), _rule_factory=rule,
    )


# --------------------------------------------------------------------------
# separation from 1
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparationReport:
    family: str
    dim: int
    eps: float
    delta_f: float
    window: float
    c_empirical: float
    t_critical: tuple
    c_small_t: float            # same ratio restricted to the innermost scanned radius
    certified: Optional[bool]   # None when no certificate could be attempted
    certificate_margin: float
    floor_margin: Optional[float]   # d = 1 only: proof-derived floor, must be >= 0
    warnings: tuple = field(default_factory=tuple)

    def as_record(self) -> dict:
        return {
            "family": self.family, "d": self.dim, "eps": self.eps, "delta_f": self.delta_f,
            "c_empirical": self.c_empirical,
            "t_critical": float(np.linalg.norm(self.t_critical)),
            "certified": self.certified,
        }


def _scan_points(d: int, eps: float, hi: float, resolution: int):
    if d == 1:
        rho = np.linspace(eps, hi, 8192 * resolution)
        return rho[:, None, None], rho[:, None]
    rho = np.linspace(eps, hi, 256 * resolution)
    if d == 2:
        phi = math.pi * np.arange(64 * resolution) / (64 * resolution)
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    else:
        dirs = fibonacci_sphere(256 * resolution)
    pts = rho[:, None, None] * dirs[None, :, :]
    return pts, np.broadcast_to(rho[:, None], pts.shape[:-1])


def _scan_modulus(dist: DistributionSpec, pts: np.ndarray, rho: np.ndarray) -> np.ndarray:
    if dist.dim == 1:
        return _ray_modulus(dist)(pts[:, 0, 0])[:, None]
    if dist.radial_profile is not None:
        return np.broadcast_to(np.abs(dist.radial_profile(rho[:, :1])), rho.shape)
    return np.abs(dist.charfn(pts))


def separation_scan(dist: DistributionSpec, eps: float, T_max: float,
                    resolution: int = 1) -> SeparationReport:
    """Scan |f| over eps <= |t| <= T_max.

    c_empirical is the largest c with
    |f(t)| <= 1 - c^d min(sigma^2 |t|^2, 1) / (M^2 sigma^{2d})
    on the scanned set.  The window is certified when the Plancherel mass
    of |f|^2 outside it is too small to hold a ball on which |f| would stay
    above delta_f / 2 (|f| is Lipschitz with constant E|X| <= sigma sqrt(d)).
    """
    if eps <= 0:
        raise ParameterError("eps must be positive")
    if T_max <= eps:
        raise ParameterError("T_max must exceed eps")
    M = max_density(dist)
    if not math.isfinite(M):
        raise UnboundedDensityError(f"{dist.family_id}: unbounded density")
    d = dist.dim
    s2 = dist.sigma2
    pts, rho = _scan_points(d, eps, T_max, resolution)
    a = _scan_modulus(dist, pts, rho)
    ratio = (1.0 - a) * M * M * s2 ** d / np.minimum(s2 * rho * rho, 1.0)
    i = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
    c_raw = float(ratio[i])
    t_crit = tuple(float(v) for v in pts[i])
    c_small = float(ratio[0].min())
    delta = float(a.max())
    warnings = []
    edge = rho >= T_max - 0.05 * (T_max - eps)
    if float(a[edge].max()) > 0.5 * delta:
        warnings.append("window too small: |f| near T_max exceeds half of delta_f")
    if c_raw <= 0:
        warnings.append("|f| reaches 1 on the scanned set")

    # certificate for |t| > T_max
    lip = math.sqrt(d * s2)
    certified: Optional[bool] = None
    margin = math.nan
    try:
        pts2, rho2 = _scan_points(d, T_max, T_max + delta / (2.0 * lip), 1)
        delta = max(delta, float(_scan_modulus(dist, pts2, rho2).max()))
        margin = _certificate_margin(dist, T_max, delta, lip, M)
        certified = bool(margin > 0)
    except (ParameterError, WindowError):
        warnings.append("no certificate beyond the window")

    floor = None
    if d == 1:
        # proof-derived floors: t = s / (2 pi); sigma t >= 1/4 gives 1/3456,
        # sigma t <= 1/4 gives t^2 / (24 M^2)
        r = rho[:, 0]
        t = r / (2.0 * math.pi)
        far = math.sqrt(s2) * t >= 0.25
        gaps = 1.0 - a[:, 0]
        m_far = (gaps[far] * M * M * s2 - PROOF_FLOOR).min() if far.any() else math.inf
        near = ~far
        m_near = ((gaps[near] - t[near] ** 2 / (24.0 * M * M)) * M * M * s2).min() \
            if near.any() else math.inf
        floor = float(min(m_far, m_near))

    return SeparationReport(
        family=dist.name, dim=d, eps=float(eps), delta_f=float(delta), window=float(T_max),
        c_empirical=max(c_raw, 0.0) ** (1.0 / d), t_critical=t_crit,
        c_small_t=max(c_small, 0.0) ** (1.0 / d), certified=certified,
        certificate_margin=float(margin), floor_margin=floor, warnings=tuple(warnings),
    )


def _window_integral(dist: DistributionSpec, power: float, T: float) -> float:
    """Integral of |f|^power over a set contained in {|t| <= T}."""
    if _is_radial(dist) or dist.dim != 2:
        return cf_power_integral(dist, power, window=T).value
    # inscribed box, evaluated on a tensor grid
    return _box_integral_2d(dist, power, T / math.sqrt(2.0), 0.5 / dist.sigma)


def _certificate_margin(dist: DistributionSpec, T: float, delta: float, lip: float,
                        M: float, orders: Sequence[int] = (1, 2, 4)) -> float:
    """Relative margin (> 0 means certified) that |f| < delta for |t| > T + rho.

    If |f(t0)| >= delta then |f| >= delta / 2 on the ball of radius
    rho = delta / (2 lip) around t0, which carries at least
    (delta / 2)^{2m} vol(B_rho) of the |f|^{2m} mass.  The mass outside
    the window is the total minus the windowed integral; for m = 1 the
    total is (2 pi)^d int p^2 exactly.
    """
    d = dist.dim
    rad = delta / (2.0 * lip)
    best = -math.inf
    for m in orders:
        if m == 1:
            total = (2.0 * math.pi) ** d * min(density_square_integral(dist),
                                               (math.e / 2.0) ** (d / 2.0) * M)
        else:
            total = cf_power_integral(dist, 2 * m).value
        outside = max(total - _window_integral(dist, 2 * m, T), 0.0)
        need = (delta / 2.0) ** (2 * m) * ball_volume(d) * rad ** d
        best = max(best, (need - outside) / need)
        if best > 0:
            break
    return best


def c_feasible(reports: Sequence[SeparationReport]) -> float:
    """Smallest empirical separation constant across a suite."""
    if not reports:
        raise ParameterError("no separation reports")
    return min(r.c_empirical for r in reports)


# --------------------------------------------------------------------------
# truncation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncatedSpec:
    base: DistributionSpec
    r: float
    b_r: float
    variance_bound_ok: bool
    marginal_M_bound: float
    directions: np.ndarray
    variances: np.ndarray
    marginal_maxima: np.ndarray
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)     # normalized to total mass 1

    @property
    def marginal_bound_ok(self) -> bool:
        return bool(np.all(self.marginal_maxima <= self.marginal_M_bound * (1 + 1e-9)))

    def density(self, x) -> np.ndarray:
        x = self.base._points(x)
        inside = np.linalg.norm(x, axis=-1) < self.r
        return np.where(inside, self.base.density(x), 0.0) / self.b_r

    def charfn(self, t) -> np.ndarray:
        t = self.base._points(t)
        if self.base.radial_profile is not None and self.base.dim > 1:
            rho = np.linalg.norm(t, axis=-1)
            return _radial_truncated_cf(self.base, self.r, self.b_r, rho.ravel()).reshape(rho.shape)
        if self.base._truncated_cf is not None:
            return self.base._truncated_cf(self.r, t) / self.b_r
        return charfn_from_rule(self.nodes, self.weights, t)


def _radial_truncated_cf(dist: DistributionSpec, r: float, b_r: float,
                         s: np.ndarray) -> np.ndarray:
    # rotation-invariant law restricted to |x| < r: a one-dimensional integral
    # of the radial density against the spherical average of exp(i <t, x>)
    d = dist.dim
    top = r if dist.support_radius is None else min(r, dist.support_radius)
    rho, w = gauss_legendre_panels([0.0, top], max_width=top / 32)
    radial = dist.density(np.stack([rho] + [np.zeros_like(rho)] * (d - 1), axis=-1))
    weight = sphere_area(d) * w * rho ** (d - 1) * radial / b_r
    z = np.outer(s, rho)
    if d == 2:
        kernel = special.j0(z)
    else:
        kernel = np.sinc(z / np.pi)
    return (kernel @ weight).astype(complex)


def truncate(dist: DistributionSpec, r: Optional[float] = None,
             n_directions: int = 16) -> TruncatedSpec:
    """Restriction of the law to |x| < r, renormalized.

    The default radius sigma sqrt(2d) is only offered for d >= 2.
    """
    d = dist.dim
    if r is None:
        if d == 1:
            raise ParameterError("d = 1 truncation needs an explicit radius")
        r = dist.sigma * math.sqrt(2.0 * d)
    if r <= 0:
        raise ParameterError("radius must be positive")
    nodes, w = dist.truncated_quadrature(r)
    b_r = float(w.sum())
    if b_r < 0.1:
        raise DegenerateTruncationError(f"P(|X| < {r:.4g}) = {b_r:.3g} < 0.1")
    w = w / b_r
    M = max_density(dist)
    dirs = unit_directions(d, n_directions)
    proj = nodes @ dirs.T
    mean = w @ proj
    variances = w @ proj ** 2 - mean ** 2
    u = np.linspace(-r, r, 401)
    maxima = np.array([projected_density(dist, th, u, r=r).max() for th in dirs])
    bound = 2.0 * ball_volume(d - 1) * r ** (d - 1) * M if d > 1 else 2.0 * M
    return TruncatedSpec(
        base=dist, r=float(r), b_r=b_r,
        variance_bound_ok=bool(np.all(variances <= 4.0 * dist.sigma2 * (1 + 1e-12))),
        marginal_M_bound=float(bound), directions=dirs, variances=variances,
        marginal_maxima=maxima, nodes=nodes, weights=w,
    )


def truncation_relation_check(trunc: TruncatedSpec, s_max: float = 40.0, n_radii: int = 400,
                              n_directions: int = 16) -> float:
    """min over a scan grid of (1 - |g|^2) - (1 - |g_r|^2) / 2 (should be >= 0)."""
    d = trunc.base.dim
    s = np.linspace(0.05, s_max, n_radii) / trunc.base.sigma
    pts = s[:, None, None] * unit_directions(d, n_directions)[None, :, :]
    g = np.abs(trunc.base.charfn(pts)) ** 2
    gr = np.abs(trunc.charfn(pts)) ** 2
    return float(((1.0 - g) - 0.5 * (1.0 - gr)).min())
