"""Scalar functionals of laws and of normalized sums.

Maximum of density, directional and supremal Lyapunov ratios, Lyapunov
coefficients, ball volumes and the lower bounds on the isotropic constant.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from ._quadrature import ball_rule, fibonacci_sphere
from .distributions import DistributionSpec, ball_volume
from .errors import ParameterError, UnboundedDensityError, UnsupportedOrderError
from .grid import GridSpec, _refine_extremum
from .grid import cycle_summands

__all__ = [
    "FunctionalReport", "BetaSup", "ball_volume", "max_density", "projected_density",
    "projected_moment", "beta_p_directional", "beta_p_sup", "lyapunov_L",
    "check_isotropic_bounds", "functional_report",
]

SPHERE_LATTICE = 512


@dataclass(frozen=True)
class FunctionalReport:
    M: float
    sigma: float
    beta3: float
    beta4: float
    isotropic_const: float
    L3: float
    L4: float
    theta_star3: tuple
    theta_star4: tuple
    n: int = 1
    dim: int = 1

    def as_record(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BetaSup:
    value: float
    theta: np.ndarray
    lattice_value: float

    def __iter__(self):
        yield self.value
        yield self.theta


def _unit(theta, d) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (d,):
        raise ParameterError(f"direction must have shape ({d},)")
    nrm = np.linalg.norm(theta)
    if nrm == 0:
        raise ParameterError("direction must be non-zero")
    return theta / nrm


def max_density(dist: DistributionSpec, direction=None, grid_points: int = 0) -> float:
    """ess sup of the density of X, or of <theta, X> when ``direction`` is given."""
    if direction is not None and dist.dim > 1:
        if not dist.bounded_projections:
            raise UnboundedDensityError(
                f"{dist.family_id}: one-dimensional projections have unbounded densities")
        theta = _unit(direction, dist.dim)
        u = np.linspace(-_extent(dist), _extent(dist), 2049)
        q = projected_density(dist, theta, u)
        return float(q.max())
    if dist.max_density_closed_form is not None and not grid_points:
        return float(dist.max_density_closed_form)
    spec = GridSpec(dist.dim, _extent(dist), grid_points or {1: 8192, 2: 512, 3: 128}[dist.dim])
    values = dist.density(spec.x_points())
    return float(_refine_extremum(values, spec)[0])


def _extent(dist: DistributionSpec) -> float:
    if dist.support_radius is not None:
        return 1.05 * dist.support_radius
    nodes, _ = dist.quadrature(0)
    return float(np.abs(nodes).max())


def _orthonormal_complement(theta: np.ndarray) -> np.ndarray:
    d = theta.size
    q, _ = np.linalg.qr(np.column_stack([theta, np.eye(d)]))
    return q[:, 1:d]


def _section_rule(k: int, n_nodes: int):
    # rule on the unit ball of the k-dimensional section
    if k == 1:
        return ball_rule(1, 1.0, n_radial=n_nodes)
    return ball_rule(k, 1.0, n_radial=max(16, n_nodes // 8), n_angular=64)


def projected_density(dist: DistributionSpec, theta, u, r: Optional[float] = None,
                      n_nodes: int = 512) -> np.ndarray:
    """Density of <theta, X> (or of <theta, X_r>, X restricted to |x| < r) at points u.

    Integrates the density over the hyperplane sections; the section
    integral uses Gauss-Legendre panels, so sections cut by a density jump
    are resolved only to about the panel spacing.
    """
    d = dist.dim
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if d == 1:
        q = dist.pdf(u * float(np.sign(np.asarray(theta).ravel()[0])))
        if r is not None:
            nodes, w = dist.truncated_quadrature(r)
            q = np.where(np.abs(u) < r, q, 0.0) / w.sum()
        return q
    theta = _unit(theta, d)
    basis = _orthonormal_complement(theta)
    reach = _extent(dist) if r is None else r
    b_r = 1.0
    if r is not None:
        b_r = float(dist.truncated_quadrature(r)[1].sum())
    if dist.support_radius is not None:
        reach = min(reach, dist.support_radius)
    y, w = _section_rule(d - 1, n_nodes)
    y = y @ basis.T
    rad = np.sqrt(np.maximum(reach * reach - u * u, 0.0))
    out = np.zeros_like(u)
    step = max(1, (1 << 21) // len(w))
    for s in range(0, len(u), step):
        rs = rad[s:s + step]
        pts = u[s:s + step, None, None] * theta + rs[:, None, None] * y[None, :, :]
        out[s:s + step] = rs ** (d - 1) * (dist.density(pts) @ w)
    return out / b_r


def projected_moment(dist: DistributionSpec, theta, p: float) -> float:
    """E |<theta, X>|^p."""
    if dist.abs_moment is not None:
        return dist.abs_moment(p)
    theta = _unit(theta, dist.dim)
    nodes, w = dist.quadrature()
    return float(w @ np.abs(nodes @ theta) ** p)


def _check_order(p):
    if p not in (3, 4):
        raise UnsupportedOrderError(f"only p in {{3, 4}} supported, got {p}")


def _mixture(dists: Sequence[DistributionSpec], n: int):
    summands = cycle_summands(dists, n)
    counts = Counter(id(d) for d in summands)
    unique = {id(d): d for d in summands}
    dims = {d.dim for d in unique.values()}
    if len(dims) != 1:
        raise ParameterError("summands must share a dimension")
    return [(unique[k], c / n) for k, c in counts.items()], dims.pop()


def _directional_many(mix, thetas: np.ndarray, p: float, chunk: int = 64) -> np.ndarray:
    total = np.zeros(len(thetas))
    for dist, frac in mix:
        if dist.abs_moment is not None:
            total += frac * dist.abs_moment(p)
            continue
        nodes, w = dist.quadrature()
        for s in range(0, len(thetas), chunk):
            proj = np.abs(nodes @ thetas[s:s + chunk].T) ** p
            total[s:s + chunk] += frac * (w @ proj)
    return total


def beta_p_directional(dists: Sequence[DistributionSpec], n: int, theta, p: int) -> float:
    """(1/n) sum_k E |<theta, X_k>|^p, cycling ``dists`` to n summands."""
    _check_order(p)
    mix, d = _mixture(dists, n)
    return float(_directional_many(mix, _unit(theta, d)[None, :], p)[0])


def _angles_to_unit(a):
    return np.array([math.sin(a[0]) * math.cos(a[1]), math.sin(a[0]) * math.sin(a[1]),
                     math.cos(a[0])])


def beta_p_sup(dists: Sequence[DistributionSpec], n: int, p: int,
               lattice: int = SPHERE_LATTICE) -> BetaSup:
    """sup over unit theta of the averaged projected p-th absolute moment.

    Exact in d = 1; in d = 2, 3 a lattice scan followed by local ascent.
    The sup is of the average, not the average of per-summand sups.
    """
    _check_order(p)
    mix, d = _mixture(dists, n)
    if d == 1:
        thetas = np.array([[1.0], [-1.0]])
        vals = _directional_many(mix, thetas, p)
        i = int(np.argmax(vals))
        return BetaSup(float(vals[i]), thetas[i], float(vals[i]))
    if all(dist.abs_moment is not None for dist, _ in mix):
        theta = np.eye(d)[0]
        v = float(_directional_many(mix, theta[None, :], p)[0])
        return BetaSup(v, theta, v)
    if d == 2:
        phi = 2.0 * math.pi * np.arange(lattice) / lattice
        thetas = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    else:
        thetas = fibonacci_sphere(lattice)
    vals = _directional_many(mix, thetas, p)
    i = int(np.argmax(vals))
    lattice_value = float(vals[i])
    if d == 2:
        step = 2.0 * math.pi / lattice
        f = lambda a: -_directional_many(mix, np.array([[math.cos(a), math.sin(a)]]), p)[0]
        res = optimize.minimize_scalar(f, bounds=(phi[i] - step, phi[i] + step),
                                       method="bounded", options={"xatol": 1e-10})
        theta = np.array([math.cos(res.x), math.sin(res.x)])
        best = -res.fun
    else:
        t0 = thetas[i]
        a0 = np.array([math.acos(np.clip(t0[2], -1, 1)), math.atan2(t0[1], t0[0])])
        f = lambda a: -_directional_many(mix, _angles_to_unit(a)[None, :], p)[0]
        res = optimize.minimize(f, a0, method="Nelder-Mead",
                                options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 2000})
        theta = _angles_to_unit(res.x)
        best = -res.fun
    if best < lattice_value:
        return BetaSup(lattice_value, thetas[i], lattice_value)
    return BetaSup(float(best), theta, lattice_value)


def lyapunov_L(dists: Sequence[DistributionSpec], n: int, p: int) -> float:
    """L_p = n^{-(p-2)/2} beta_p."""
    return n ** (-(p - 2) / 2.0) * beta_p_sup(dists, n, p).value


@dataclass(frozen=True)
class IsotropicMargins:
    interval: Optional[float]   # M^2 sigma^2 - 1/12 (d = 1 only)
    ball: float                 # M^{2/d} sigma^2 - omega_d^{-2/d}/(d + 2)
    entropy: float              # M^{2/d} sigma^2 - 1/(2 pi e)

    def worst(self) -> float:
        vals = [self.ball, self.entropy] + ([self.interval] if self.interval is not None else [])
        return min(vals)


def check_isotropic_bounds(dist: DistributionSpec) -> IsotropicMargins:
    """Margins of the three lower bounds on M^{2/d} sigma^2; all should be >= -1e-9."""
    d = dist.dim
    m = max_density(dist)
    if not math.isfinite(m):
        raise UnboundedDensityError(f"{dist.family_id}: unbounded density")
    q = m ** (2.0 / d) * dist.sigma2
    interval = q - 1.0 / 12.0 if d == 1 else None
    ball = q - ball_volume(d) ** (-2.0 / d) / (d + 2.0)
    entropy = q - 1.0 / (2.0 * math.pi * math.e)
    return IsotropicMargins(interval, ball, entropy)


def functional_report(dists: Sequence[DistributionSpec], n: int) -> FunctionalReport:
    mix, d = _mixture(dists, n)
    M = max(max_density(dist) for dist, _ in mix)
    sigma = max(dist.sigma for dist, _ in mix)
    b3 = beta_p_sup(dists, n, 3)
    b4 = beta_p_sup(dists, n, 4)
    return FunctionalReport(
        M=M, sigma=sigma, beta3=b3.value, beta4=b4.value,
        isotropic_const=M ** (1.0 / d) * sigma,
        L3=b3.value / math.sqrt(n), L4=b4.value / n,
        theta_star3=tuple(float(v) for v in b3.theta),
        theta_star4=tuple(float(v) for v in b4.theta), n=n, dim=d,
    )
