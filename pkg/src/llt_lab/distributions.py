"""Catalog of isotropic test laws with closed-form densities and CFs.

Every constructor returns an immutable :class:`DistributionSpec` with mean
zero and covariance ``sigma2 * I_d``.  Besides the density and (when known)
the characteristic function, each spec carries a quadrature rule adapted to
the law: a weighted point set ``(nodes, weights)`` with ``sum(weights) == 1``
that integrates piecewise smooth functions against the law to near machine
precision.  Moments, projected moments and CFs of laws without a closed
form are all computed from that rule.

Points are arrays of shape ``(..., d)``.  For ``d == 1`` the convenience
methods :meth:`DistributionSpec.pdf` and :meth:`DistributionSpec.charfn`
also accept plain coordinate arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import optimize, special

from ._quadrature import ball_rule, charfn_from_rule, gauss_legendre_panels
from .errors import ParameterError, UnsupportedDimensionError

SUPPORTED_DIMS = (1, 2, 3)

Rule = tuple  # (nodes (K, d), weights (K,))


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    family_id: str
    dim: int
    density: Callable[[np.ndarray], np.ndarray]
    sigma2: float
    symmetric: bool
    third_moments_vanish: bool
    log_concave: bool
    cf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    support_radius: Optional[float] = None
    max_density_closed_form: Optional[float] = None
    params: dict = field(default_factory=dict)
    # False when some one-dimensional projection <theta, X> has an unbounded density.
    bounded_projections: bool = True
    # cf(t) == radial_profile(|t|) for rotationally invariant laws.
    radial_profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    log_cf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # E|<theta, X>|^p, the same for every unit theta (rotation-invariant laws only).
    abs_moment: Optional[Callable[[float], float]] = None
    # Jump/kink locations of a 1-d density (used by adaptive convolution).
    breakpoints: tuple = ()
    factors: tuple = ()
    # cf on the tensor grid axes[0] x ... x axes[d-1] (faster than pointwise cf)
    tensor_cf: Optional[Callable[[Sequence[np.ndarray]], np.ndarray]] = field(default=None, repr=False)
    _rule_factory: Optional[Callable[[int], Rule]] = field(default=None, repr=False)
    _truncated_rule: Optional[Callable[[float], Rule]] = field(default=None, repr=False)
    # unnormalized CF of the restriction to |x| < r: (r, t) -> E exp(i<t,X>) 1{|X| < r}
    _truncated_cf: Optional[Callable[[float, np.ndarray], np.ndarray]] = field(default=None,
                                                                              repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.symmetric and not self.third_moments_vanish:
            raise ParameterError("symmetric laws must have vanishing third moments")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def has_cf(self) -> bool:
        return self.cf is not None

    @property
    def name(self) -> str:
        if not self.params:
            return self.family_id
        args = ",".join(f"{k}={v:g}" if isinstance(v, (int, float)) else f"{k}={v}"
                        for k, v in sorted(self.params.items()))
        return f"{self.family_id}({args})"

    def _points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise ParameterError(f"expected points with last axis {self.dim}, got shape {x.shape}")
        return x

    def pdf(self, x) -> np.ndarray:
        return self.density(self._points(x))

    def charfn(self, t) -> np.ndarray:
        """Characteristic function; falls back to the quadrature rule."""
        t = self._points(t)
        if self.cf is not None:
            return self.cf(t)
        nodes, weights = self.quadrature()
        return charfn_from_rule(nodes, weights, t)

    def quadrature(self, level: int = 1) -> Rule:
        """Weighted node set representing the law (level 0 is a coarse rule)."""
        if level not in self._cache:
            if self._rule_factory is None:
                raise ParameterError(f"{self.family_id} has no quadrature rule")
            nodes, weights = self._rule_factory(level)
            keep = weights != 0
            self._cache[level] = (np.ascontiguousarray(nodes[keep]), weights[keep])
        return self._cache[level]

    def truncated_quadrature(self, r: float) -> Rule:
        """Rule for the (unnormalized) restriction of the law to |x| < r."""
        if self._truncated_rule is not None:
            return self._truncated_rule(r)
        radial_breaks = () if self.support_radius is None else (self.support_radius,)
        nodes, w = ball_rule(self.dim, r, n_radial=128, n_angular=192 if self.dim == 2 else 64,
                             radial_breaks=radial_breaks)
        if self.dim == 1:
            nodes, w = gauss_legendre_panels(
                [-r, *[b for b in self.breakpoints if -r < b < r], 0.0, r], max_width=r / 64)
            nodes = nodes[:, None]
        return nodes, w * self.density(nodes)


def _check_sigma(sigma):
    if not np.isfinite(sigma) or sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    return float(sigma)


def _check_dim(dim):
    if int(dim) != dim or dim not in SUPPORTED_DIMS:
        raise UnsupportedDimensionError(f"dimension {dim} not in {SUPPORTED_DIMS}")
    return int(dim)


def _sinc(u):
    # sin(u)/u with the removable singularity handled by numpy
    return np.sinc(u / np.pi)


def _ball_profile(d: int, radius: float):
    """Radial CF profile of the uniform law on a d-ball: E exp(i s X_1)."""
    nu = d / 2.0
    const = special.gamma(nu + 1.0)

    def profile(s):
        u = radius * np.abs(np.asarray(s, dtype=float))
        out = np.empty_like(u)
        small = u < 0.05
        us = u[small]
        out[small] = 1.0 - us ** 2 / (2 * (d + 2)) + us ** 4 / (8 * (d + 2) * (d + 4))
        ub = u[~small]
        if d == 1:
            out[~small] = np.sin(ub) / ub
        elif d == 3:
            out[~small] = 3.0 * (np.sin(ub) - ub * np.cos(ub)) / ub ** 3
        else:
            out[~small] = const * (2.0 / ub) ** nu * special.jv(nu, ub)
        return out

    return profile


def _ball_abs_moment(d: int, radius: float):
    def moment(p):
        return float(radius ** p * special.gamma((p + 1) / 2) * special.gamma(d / 2 + 1)
                     / (math.sqrt(math.pi) * special.gamma((d + p) / 2 + 1)))
    return moment


def ball_volume(d: int) -> float:
    """Volume of the unit Euclidean ball in R^d."""
    if d < 1:
        raise ParameterError("dimension must be >= 1")
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


# --------------------------------------------------------------------------
# families
# --------------------------------------------------------------------------

def make_uniform_interval(sigma: float = 1.0) -> DistributionSpec:
    """Uniform law on [-a, a] with a = sigma * sqrt(3)."""
    sigma = _check_sigma(sigma)
    a = sigma * math.sqrt(3.0)
    height = 1.0 / (2.0 * a)

    def density(x):
        return np.where(np.abs(x[..., 0]) <= a, height, 0.0)

    def cf(t):
        return _sinc(a * t[..., 0]).astype(complex)

    def rule(level):
        nodes, w = gauss_legendre_panels([-a, 0.0, a], max_width=a / (64 if level else 8))
        return nodes[:, None], w * height

    return DistributionSpec(
        family_id="uniform-interval", dim=1, density=density, cf=cf, sigma2=sigma ** 2,
        symmetric=True, third_moments_vanish=True, log_concave=True, support_radius=a,
        max_density_closed_form=height, params={"sigma": sigma},
        radial_profile=lambda s: _sinc(a * np.asarray(s, dtype=float)),
        abs_moment=lambda p: a ** p / (p + 1.0),
        breakpoints=(-a, a), _rule_factory=rule,
    )


def make_uniform_ball(dim: int = 2, sigma: float = 1.0) -> DistributionSpec:
    """Uniform law on the centered ball with per-coordinate variance sigma^2.

    The radius solves E X_1^2 = r^2 / (d + 2) = sigma^2.
    """
    dim = _check_dim(dim)
    sigma = _check_sigma(sigma)
    r = sigma * math.sqrt(dim + 2.0)
    if dim == 1:
        base = make_uniform_interval(sigma)
        return DistributionSpec(**{**_fields(base), "family_id": "uniform-ball",
                                   "params": {"dim": 1, "sigma": sigma}, "_cache": {}})
    height = 1.0 / (ball_volume(dim) * r ** dim)
    profile = _ball_profile(dim, r)

    def density(x):
        return np.where(np.sum(x * x, axis=-1) <= r * r, height, 0.0)

    def cf(t):
        return profile(np.linalg.norm(t, axis=-1)).astype(complex)

    def rule(level):
        nodes, w = ball_rule(dim, r, n_radial=64 if level else 32,
                             n_angular=(128 if dim == 2 else 48) if level else 32)
        return nodes, w * height

    return DistributionSpec(
        family_id="uniform-ball", dim=dim, density=density, cf=cf, sigma2=sigma ** 2,
        symmetric=True, third_moments_vanish=True, log_concave=True, support_radius=r,
        max_density_closed_form=height, params={"dim": dim, "sigma": sigma},
        radial_profile=profile, abs_moment=_ball_abs_moment(dim, r), _rule_factory=rule,
    )


def make_gaussian(dim: int = 1, sigma: float = 1.0) -> DistributionSpec:
    """Isotropic normal law N(0, sigma^2 I_d)."""
    dim = _check_dim(dim)
    sigma = _check_sigma(sigma)
    s2 = sigma ** 2
    norm = (2.0 * math.pi * s2) ** (-dim / 2)

    def density(x):
        return norm * np.exp(-0.5 * np.sum(x * x, axis=-1) / s2)

    def log_cf(t):
        return -0.5 * s2 * np.sum(np.asarray(t, dtype=float) ** 2, axis=-1)

    def cf(t):
        return np.exp(log_cf(t)).astype(complex)

    def rule(level):
        if dim == 1:
            nodes, w = gauss_legendre_panels([-14 * sigma, 0.0, 14 * sigma],
                                             max_width=sigma / (4 if level else 1))
            nodes = nodes[:, None]
        else:
            nodes, w = ball_rule(dim, 12 * sigma, n_radial=128 if level else 48,
                                 n_angular=64 if level else 24)
        return nodes, w * density(nodes)

    return DistributionSpec(
        family_id="gaussian", dim=dim, density=density, cf=cf, log_cf=log_cf, sigma2=s2,
        symmetric=True, third_moments_vanish=True, log_concave=True,
        max_density_closed_form=norm, params={"dim": dim, "sigma": sigma},
        radial_profile=lambda s: np.exp(-0.5 * s2 * np.asarray(s, dtype=float) ** 2),
        abs_moment=lambda p: float(sigma ** p * 2 ** (p / 2) * special.gamma((p + 1) / 2)
                                   / math.sqrt(math.pi)),
        _rule_factory=rule,
    )


def _centered_exponential(sigma):
    lo = -sigma

    def density(x):
        u = x[..., 0]
        return np.where(u >= lo, np.exp(-(np.maximum(u, lo) / sigma + 1.0)) / sigma, 0.0)

    def cf(t):
        s = sigma * t[..., 0]
        return np.exp(-1j * s) / (1.0 - 1j * s)

    def rule(level):
        nodes, w = gauss_legendre_panels([lo, 0.0, 50 * sigma],
                                         max_width=sigma / (4 if level else 1))
        nodes = nodes[:, None]
        return nodes, w * density(nodes)

    return DistributionSpec(
        family_id="centered-exponential", dim=1, density=density, cf=cf, sigma2=sigma ** 2,
        symmetric=False, third_moments_vanish=False, log_concave=True,
        max_density_closed_form=1.0 / sigma, params={"sigma": sigma},
        breakpoints=(lo,), _rule_factory=rule,
    )


def _skewed_triangle(sigma):
    # Y with density 2(1 - y) on [0, 1]: mean 1/3, variance 1/18.
    s = sigma * math.sqrt(18.0)
    lo, hi = -s / 3.0, 2.0 * s / 3.0
    peak = 2.0 / s

    def density(x):
        y = x[..., 0] / s + 1.0 / 3.0
        return np.where((y >= 0.0) & (y <= 1.0), 2.0 * (1.0 - y) / s, 0.0)

    def cf(t):
        # E exp(i u Y) = 2 (exp(iu) - 1 - iu) / (iu)^2, series near u = 0
        u = s * t[..., 0]
        out = np.empty(u.shape, dtype=complex)
        small = np.abs(u) < 0.05
        us = 1j * u[small]
        out[small] = 1.0 + us / 3.0 + us ** 2 / 12.0 + us ** 3 / 60.0 + us ** 4 / 360.0
        ub = 1j * u[~small]
        out[~small] = 2.0 * (np.exp(ub) - 1.0 - ub) / ub ** 2
        return out * np.exp(-1j * u / 3.0)

    def rule(level):
        nodes, w = gauss_legendre_panels([lo, 0.0, hi], max_width=(hi - lo) / (256 if level else 32))
        nodes = nodes[:, None]
        return nodes, w * density(nodes)

    return DistributionSpec(
        family_id="skewed-triangle", dim=1, density=density, cf=cf, sigma2=sigma ** 2,
        symmetric=False, third_moments_vanish=False, log_concave=True,
        support_radius=hi, max_density_closed_form=peak, params={"sigma": sigma},
        breakpoints=(lo, hi), _rule_factory=rule,
    )


ASYMMETRIC_KINDS = {"centered-exponential": _centered_exponential,
                    "skewed-triangle": _skewed_triangle}


def make_asymmetric_family(kind: str, sigma: float = 1.0) -> DistributionSpec:
    """Mean-zero law with non-vanishing third moment.

    ``centered-exponential`` is sigma * (E - 1) with E standard exponential;
    ``skewed-triangle`` is the standardized law with density 2(1 - y) on [0, 1].
    """
    sigma = _check_sigma(sigma)
    try:
        return ASYMMETRIC_KINDS[kind](sigma)
    except KeyError:
        raise ParameterError(f"unknown asymmetric kind {kind!r}; expected one of "
                             f"{sorted(ASYMMETRIC_KINDS)}") from None


# -- the unbounded-marginal example ----------------------------------------

def _strip_rule(c, n_panels=400, order=12, x2_cut=None):
    """Rule for the uniform law (c/4) 1{|x1| <= exp(-c|x2|)}.

    Outer Gauss-Legendre in x2 >= 0 (mirrored), inner Gauss-Legendre over
    the exact x1 section, so the density jump never falls inside a panel.
    """
    x2_cut = 40.0 / c if x2_cut is None else x2_cut
    u, wu = gauss_legendre_panels([0.0, x2_cut], max_width=x2_cut / n_panels, order=order)
    half = np.exp(-c * u)
    g, gw = np.polynomial.legendre.leggauss(order)
    x1 = half[:, None] * g[None, :]
    w = (wu * half)[:, None] * gw[None, :] * (c / 4.0)
    x2 = np.broadcast_to(u[:, None], x1.shape)
    nodes = np.stack([x1.ravel(), x2.ravel()], axis=-1)
    nodes = np.concatenate([nodes, nodes * np.array([1.0, -1.0])])
    return nodes, np.concatenate([w.ravel(), w.ravel()])


def _strip_second_moments(c):
    nodes, w = _strip_rule(c, n_panels=200)
    return float(w @ nodes[:, 0] ** 2), float(w @ nodes[:, 1] ** 2)


def isotropy_constant_unbounded_example() -> float:
    """Value of c making the strip law isotropic, by root finding."""
    return optimize.brentq(lambda c: np.subtract(*_strip_second_moments(c)), 0.5, 50.0,
                           xtol=1e-14, rtol=1e-14)


def make_unbounded_marginal_example(c: Optional[float] = None) -> DistributionSpec:
    """Uniform law on {|x1| <= exp(-c|x2|)} in R^2 with density (c/4) 1_R.

    The joint density is bounded but the marginal of X1, (1/2) log(1/|x1|),
    is not.  ``c`` defaults to the numerically calibrated isotropy value.
    """
    c_iso = isotropy_constant_unbounded_example()
    if c is None:
        c = c_iso
    elif not math.isclose(c, c_iso, rel_tol=1e-6):
        raise ParameterError(f"c={c} does not make the law isotropic (expected {c_iso:.12g})")
    c = float(c)
    height = c / 4.0
    m1, m2 = _strip_second_moments(c)
    sigma2 = 0.5 * (m1 + m2)
    # outer rule for the semi-analytic CF: integrate x1 exactly
    u, wu = gauss_legendre_panels([0.0, 40.0 / c], max_width=40.0 / c / 600, order=12)
    half = np.exp(-c * u)

    def density(x):
        return np.where(np.abs(x[..., 0]) <= np.exp(-c * np.abs(x[..., 1])), height, 0.0)

    def cf(t, chunk=512):
        t = np.asarray(t, dtype=float)
        shape = t.shape[:-1]
        tf = t.reshape(-1, 2)
        out = np.empty(tf.shape[0])
        for s in range(0, tf.shape[0], chunk):
            t1 = tf[s:s + chunk, 0:1]
            t2 = tf[s:s + chunk, 1:2]
            arg = t1 * half[None, :]
            # integral over the x1 section: 2 sin(t1 h) / t1 = 2 h sinc(t1 h)
            inner = 2.0 * half[None, :] * np.sinc(arg / np.pi)
            out[s:s + chunk] = 2.0 * height * (inner * np.cos(t2 * u[None, :])) @ wu
        return out.reshape(shape).astype(complex)

    def tensor_cf(axes):
        t1, t2 = (np.asarray(a, dtype=float) for a in axes)
        inner = 2.0 * half[None, :] * np.sinc(np.outer(t1, half) / np.pi)
        return (2.0 * height * (inner * wu) @ np.cos(np.outer(t2, u)).T).astype(complex)

    def rule(level):
        return _strip_rule(c, n_panels=400 if level else 60)

    def sections(r):
        # x2 in (-r, r); x1 section half-width min(exp(-c|x2|), sqrt(r^2 - x2^2))
        def gap(y):
            return math.exp(-c * y) - math.sqrt(max(r * r - y * y, 0.0))

        ys = np.linspace(0.0, r, 2001)
        g = np.array([gap(y) for y in ys])
        flips = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
        breaks = [0.0, *[optimize.brentq(gap, ys[i], ys[i + 1]) for i in flips], r]
        uu, ww = gauss_legendre_panels(breaks, max_width=r / 100, order=16)
        hw = np.minimum(np.exp(-c * uu), np.sqrt(np.maximum(r * r - uu * uu, 0.0)))
        return uu, ww, hw

    def truncated_cf(r, t, chunk=512):
        uu, ww, hw = sections(r)
        t = np.asarray(t, dtype=float)
        tf = t.reshape(-1, 2)
        out = np.empty(tf.shape[0])
        for s in range(0, tf.shape[0], chunk):
            t1 = tf[s:s + chunk, 0:1]
            t2 = tf[s:s + chunk, 1:2]
            inner = 2.0 * hw[None, :] * np.sinc(t1 * hw[None, :] / np.pi)
            out[s:s + chunk] = 2.0 * height * (inner * np.cos(t2 * uu[None, :])) @ ww
        return out.reshape(t.shape[:-1]).astype(complex)

    def truncated_rule(r):
        uu, ww, hw = sections(r)
        g, gw = np.polynomial.legendre.leggauss(16)
        x1 = hw[:, None] * g[None, :]
        w = (ww * hw)[:, None] * gw[None, :] * height
        x2 = np.broadcast_to(uu[:, None], x1.shape)
        nodes = np.stack([x1.ravel(), x2.ravel()], axis=-1)
        nodes = np.concatenate([nodes, nodes * np.array([1.0, -1.0])])
        return nodes, np.concatenate([w.ravel(), w.ravel()])

    return DistributionSpec(
        family_id="unbounded-marginal", dim=2, density=density, cf=cf, sigma2=sigma2,
        symmetric=True, third_moments_vanish=True, log_concave=False,
        max_density_closed_form=height, params={"c": c}, bounded_projections=False,
        tensor_cf=tensor_cf, _rule_factory=rule, _truncated_rule=truncated_rule,
        _truncated_cf=truncated_cf,
    )


# -- derived laws -----------------------------------------------------------

def make_product(*factors: DistributionSpec) -> DistributionSpec:
    """Law of (X_1, ..., X_k) with independent one-dimensional coordinates.

    All factors must share the same variance so that the product stays
    isotropic.
    """
    if not 2 <= len(factors) <= 3:
        raise UnsupportedDimensionError("product needs 2 or 3 one-dimensional factors")
    if any(f.dim != 1 for f in factors):
        raise ParameterError("product factors must be one-dimensional")
    s2 = factors[0].sigma2
    if any(not math.isclose(f.sigma2, s2, rel_tol=1e-12) for f in factors):
        raise ParameterError("product factors must share sigma2 to keep isotropy")
    dim = len(factors)

    def density(x):
        out = np.ones(x.shape[:-1])
        for i, f in enumerate(factors):
            out = out * f.density(x[..., i:i + 1])
        return out

    def cf(t):
        out = np.ones(t.shape[:-1], dtype=complex)
        for i, f in enumerate(factors):
            out = out * f.charfn(t[..., i:i + 1])
        return out

    def tensor_cf(axes):
        out = np.ones((), dtype=complex)
        for f, ax in zip(factors, axes):
            out = np.multiply.outer(out, f.charfn(np.asarray(ax, dtype=float)))
        return out

    def rule(level):
        rules = [f.quadrature(0) for f in factors]
        grids = np.meshgrid(*[r[0][:, 0] for r in rules], indexing="ij")
        wgrid = np.ones_like(grids[0])
        for i, r in enumerate(rules):
            shape = [1] * dim
            shape[i] = -1
            wgrid = wgrid * r[1].reshape(shape)
        return np.stack([g.ravel() for g in grids], axis=-1), wgrid.ravel()

    def truncated_rule(r):
        # iterated Gauss-Legendre: x1 panels, then the chord |x2| < sqrt(r^2 - x1^2),
        # both split at the factors' density jumps
        f1, f2 = factors
        x1, w1 = gauss_legendre_panels(
            [-r, *[b for b in f1.breakpoints if -r < b < r], 0.0, r], max_width=r / 4)
        chords = np.sqrt(np.maximum(r * r - x1 * x1, 0.0))
        pts, wts = [], []
        for a, wa, h in zip(x1, w1, chords):
            y, wy = gauss_legendre_panels(
                [-h, *[b for b in f2.breakpoints if -h < b < h], h], max_width=max(h, 1e-12) / 2)
            pts.append(np.stack([np.full_like(y, a), y], axis=-1))
            wts.append(wa * wy)
        nodes = np.concatenate(pts)
        return nodes, np.concatenate(wts) * density(nodes)

    m = [f.max_density_closed_form for f in factors]
    return DistributionSpec(
        family_id="product", dim=dim, density=density, cf=cf, sigma2=s2,
        symmetric=all(f.symmetric for f in factors),
        third_moments_vanish=all(f.third_moments_vanish for f in factors),
        log_concave=all(f.log_concave for f in factors),
        max_density_closed_form=None if None in m else float(np.prod(m)),
        params={"factors": "x".join(f.name for f in factors)},
        factors=tuple(factors), tensor_cf=tensor_cf, _rule_factory=rule,
        _truncated_rule=truncated_rule if dim == 2 else None,
    )


def rescaled(dist: DistributionSpec, lam: float) -> DistributionSpec:
    """Law of X / lam."""
    if lam <= 0:
        raise ParameterError("scale must be positive")
    d = dist.dim

    def density(x):
        return lam ** d * dist.density(x * lam)

    cf = None if dist.cf is None else (lambda t: dist.cf(np.asarray(t) / lam))
    tcf = dist.tensor_cf
    tensor_cf = None if tcf is None else (lambda axes: tcf([np.asarray(a) / lam for a in axes]))

    def rule(level):
        nodes, w = dist.quadrature(level)
        return nodes / lam, w

    prof = dist.radial_profile
    return DistributionSpec(
        family_id=dist.family_id, dim=d, density=density, cf=cf, sigma2=dist.sigma2 / lam ** 2,
        symmetric=dist.symmetric, third_moments_vanish=dist.third_moments_vanish,
        log_concave=dist.log_concave,
        support_radius=None if dist.support_radius is None else dist.support_radius / lam,
        max_density_closed_form=(None if dist.max_density_closed_form is None
                                 else dist.max_density_closed_form * lam ** d),
        params={**dist.params, "scale": 1.0 / lam},
        bounded_projections=dist.bounded_projections,
        radial_profile=None if prof is None else (lambda s: prof(np.asarray(s) / lam)),
        abs_moment=None if dist.abs_moment is None else (lambda p: dist.abs_moment(p) / lam ** p),
        breakpoints=tuple(b / lam for b in dist.breakpoints), tensor_cf=tensor_cf,
        _rule_factory=rule,
    )


def _fields(spec: DistributionSpec) -> dict:
    return {f: getattr(spec, f) for f in spec.__dataclass_fields__}


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

def _product_from_ids(left="uniform-interval", right="centered-exponential", sigma=1.0):
    return make_product(build(left, sigma=sigma), build(right, sigma=sigma))


FAMILIES: dict[str, Callable[..., DistributionSpec]] = {
    "uniform-interval": make_uniform_interval,
    "uniform-ball": make_uniform_ball,
    "gaussian": make_gaussian,
    "centered-exponential": lambda sigma=1.0: make_asymmetric_family("centered-exponential", sigma),
    "skewed-triangle": lambda sigma=1.0: make_asymmetric_family("skewed-triangle", sigma),
    "unbounded-marginal": make_unbounded_marginal_example,
    "product": _product_from_ids,
}

FAMILY_DESCRIPTIONS = {
    "uniform-interval": "uniform on [-a, a], a = sigma*sqrt(3); equality case of M^2 sigma^2 >= 1/12",
    "uniform-ball": "uniform on a centered d-ball (d = 1..3); equality case of the isotropic bound",
    "gaussian": "isotropic normal, the fixed point of the normalized sums",
    "centered-exponential": "sigma*(E - 1), E ~ Exp(1); asymmetric, log-concave",
    "skewed-triangle": "standardized right-triangle law; asymmetric, log-concave",
    "unbounded-marginal": "uniform on {|x1| <= exp(-c|x2|)}; bounded 2-d density, unbounded marginal",
    "product": "independent 1-d coordinates (params: left, right, sigma)",
}


def build(family_id: str, **params) -> DistributionSpec:
    """Construct a catalog law from its string id and parameter map."""
    try:
        ctor = FAMILIES[family_id]
    except KeyError:
        raise ParameterError(f"unknown family {family_id!r}") from None
    if "d" in params:
        params["dim"] = params.pop("d")
    if family_id in ("uniform-interval", "centered-exponential", "skewed-triangle",
                     "unbounded-marginal", "product"):
        expected = 2 if family_id in ("unbounded-marginal", "product") else 1
        dim = params.pop("dim", expected)
        if dim != expected:
            raise UnsupportedDimensionError(f"{family_id} exists only in dimension {expected}")
    try:
        return ctor(**params)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {family_id}: {exc}") from None


def default_catalog() -> list[DistributionSpec]:
    """The standard suite: every family at unit variance in its natural dimensions."""
    return [
        make_uniform_interval(1.0),
        make_uniform_ball(2, 1.0),
        make_uniform_ball(3, 1.0),
        make_gaussian(1, 1.0),
        make_gaussian(2, 1.0),
        make_gaussian(3, 1.0),
        make_asymmetric_family("centered-exponential", 1.0),
        make_asymmetric_family("skewed-triangle", 1.0),
        make_unbounded_marginal_example(),
        make_product(make_uniform_interval(1.0), make_asymmetric_family("centered-exponential", 1.0)),
    ]
