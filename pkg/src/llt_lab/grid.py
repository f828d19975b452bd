"""Uniform grids for densities and characteristic functions.

Spatial nodes are ``x_k = -L + k h`` with ``h = 2L/N``; frequency nodes are
``t_j = (j - N/2) * pi/L``, so the two grids are an exact FFT pair and the
continuous transforms reduce to a single FFT with +-1 sign modulations.
The density of ``Z_n = (X_1 + ... + X_n)/sqrt(n)`` is obtained from the
product of the per-summand CFs and one inversion.
"""

from __future__ import annotations

import io
import math
import os
import struct
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from ._quadrature import charfn_from_rule, sphere_area
from .distributions import DistributionSpec
from .errors import InsufficientWindowError, ParameterError, WindowError

MAX_GRID_BYTES_ENV = "LLT_LAB_MAX_GRID_BYTES"
DEFAULT_POINTS = {1: 4096, 2: 512, 3: 128}
DEFAULT_HALF_WIDTH_SIGMAS = 12.0


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        n = self.points_per_axis
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"grid dimension {self.dim} not supported")
        if n < 64 or n & (n - 1):
            raise ParameterError(f"points_per_axis must be a power of two >= 64, got {n}")
        if not self.half_width > 0:
            raise ParameterError("half_width must be positive")
        cap = os.environ.get(MAX_GRID_BYTES_ENV)
        if cap is not None and 16 * n ** self.dim > float(cap):
            raise ParameterError(f"grid of {n}^{self.dim} complex values exceeds "
                                 f"{MAX_GRID_BYTES_ENV}={cap}")

    @classmethod
    def default(cls, dim: int, sigma: float = 1.0, points: Optional[int] = None) -> "GridSpec":
        return cls(dim, DEFAULT_HALF_WIDTH_SIGMAS * sigma * math.sqrt(dim),
                   points or DEFAULT_POINTS[dim])

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def freq_step(self) -> float:
        return math.pi / self.half_width

    @property
    def t_max(self) -> float:
        return math.pi * self.points_per_axis / (2.0 * self.half_width)

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    def x_axis(self) -> np.ndarray:
        return -self.half_width + self.step * np.arange(self.points_per_axis)

    def t_axis(self) -> np.ndarray:
        n = self.points_per_axis
        return (np.arange(n) - n // 2) * self.freq_step

    def _mesh(self, axis) -> np.ndarray:
        if self.dim == 1:
            return axis[:, None]
        return np.stack(np.meshgrid(*([axis] * self.dim), indexing="ij"), axis=-1)

    def x_points(self) -> np.ndarray:
        return self._mesh(self.x_axis())

    def t_points(self) -> np.ndarray:
        return self._mesh(self.t_axis())

    def _signs(self, offset: int) -> np.ndarray:
        j = np.arange(self.points_per_axis) - offset
        s = np.where(j % 2 == 0, 1.0, -1.0)
        out = s
        for _ in range(self.dim - 1):
            out = np.multiply.outer(out, s)
        return out


@dataclass(frozen=True, eq=False)
class DensityGrid:
    spec: GridSpec
    values: np.ndarray
    mass_defect: float = field(default=float("nan"))

    def clamped(self) -> np.ndarray:
        """Values with negative ringing set to zero (reporting only)."""
        return np.maximum(self.values, 0.0)

    def mass(self) -> float:
        return float(self.values.sum() * self.spec.step ** self.spec.dim)

    def max_refined(self) -> tuple[float, np.ndarray]:
        """Maximum with three-point parabolic refinement; returns (value, location)."""
        return _refine_extremum(self.values, self.spec)

    def to_csv(self, path_or_buf=None) -> Optional[str]:
        return _grid_csv(self.spec, self.spec.x_axis(), self.values, "x", path_or_buf)


@dataclass(frozen=True, eq=False)
class CharFnGrid:
    spec: GridSpec
    values: np.ndarray
    source: Literal["analytic", "transformed"] = "analytic"

    def to_csv(self, path_or_buf=None) -> Optional[str]:
        return _grid_csv(self.spec, self.spec.t_axis(), self.values, "t", path_or_buf)

    def hermitian_defect(self) -> float:
        """max |f(-t) - conj f(t)| over the symmetric part of the grid."""
        v = self.values[(slice(1, None),) * self.spec.dim]
        flipped = v[(slice(None, None, -1),) * self.spec.dim]
        return float(np.max(np.abs(flipped - np.conj(v))))

    def value_at_zero(self) -> complex:
        return complex(self.values[(self.spec.points_per_axis // 2,) * self.spec.dim])


# --------------------------------------------------------------------------
# transforms
# --------------------------------------------------------------------------

def _transform_rule(dist: DistributionSpec, spec: GridSpec, scale: float) -> np.ndarray:
    """sum_k w_k exp(i scale <t, x_k>) on the full frequency grid."""
    nodes, w = dist.quadrature()
    t = spec.t_axis() * scale
    if spec.dim == 1:
        return charfn_from_rule(nodes, w, t[:, None])
    e = [np.exp(1j * np.outer(t, nodes[:, i])) for i in range(spec.dim)]
    if spec.dim == 2:
        return (e[0] * w) @ e[1].T
    out = np.empty(spec.shape, dtype=complex)
    for a in range(spec.points_per_axis):
        out[a] = (e[1] * (e[0][a] * w)) @ e[2].T
    return out


def density_to_cf(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """FFT of sampled density values with continuous-Fourier phase and scale."""
    n = spec.points_per_axis
    fx = np.fft.ifftn(values * spec._signs(0)) * n ** spec.dim
    return spec.step ** spec.dim * spec._signs(n // 2) * fx


def cf_on_grid(dist: DistributionSpec, spec: GridSpec, scale: float = 1.0,
               method: Optional[Literal["analytic", "quadrature", "fft"]] = None,
               required_window: Optional[float] = None) -> CharFnGrid:
    """Sample v(scale * t) on the frequency grid of ``spec``.

    ``method=None`` uses the closed form when the law has one and the
    quadrature-rule transform otherwise.  ``"fft"`` samples the density on
    the spatial grid and transforms it (Gibbs-prone for discontinuous laws).
    """
    if dist.dim != spec.dim:
        raise ParameterError(f"law has dimension {dist.dim}, grid {spec.dim}")
    if required_window is not None and spec.t_max < required_window:
        raise WindowError(f"grid reaches |t| <= {spec.t_max:.4g}, need {required_window:.4g}")
    if method is None:
        method = "analytic" if dist.cf is not None else "quadrature"
    if method == "analytic":
        if dist.cf is None:
            raise ParameterError(f"{dist.family_id} has no closed-form CF")
        if dist.tensor_cf is not None and spec.dim > 1:
            t = spec.t_axis() * scale
            return CharFnGrid(spec, dist.tensor_cf([t] * spec.dim), "analytic")
        return CharFnGrid(spec, dist.cf(spec.t_points() * scale), "analytic")
    if method == "quadrature":
        return CharFnGrid(spec, _transform_rule(dist, spec, scale), "transformed")
    if method == "fft":
        if scale != 1.0:
            raise ParameterError("fft branch samples the unscaled density")
        values = dist.density(spec.x_points())
        return CharFnGrid(spec, density_to_cf(values, spec), "transformed")
    raise ParameterError(f"unknown method {method!r}")


def cycle_summands(dists: Sequence[DistributionSpec], n: int) -> list[DistributionSpec]:
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not dists:
        raise ParameterError("need at least one summand")
    return [dists[k % len(dists)] for k in range(n)]


def sum_cf(dists: Sequence[DistributionSpec], spec: GridSpec, scale: float = 1.0) -> CharFnGrid:
    """CF of scale * (X_1 + ... + X_m) on the grid (independent summands)."""
    dims = {d.dim for d in dists}
    if dims != {spec.dim}:
        raise ParameterError(f"dimension mismatch: summands {sorted(dims)}, grid {spec.dim}")
    counts = Counter(id(d) for d in dists)
    unique = {id(d): d for d in dists}
    source = "analytic"
    if all(d.log_cf is not None for d in unique.values()):
        t = spec.t_points() * scale
        logv = sum(counts[k] * unique[k].log_cf(t) for k in counts)
        return CharFnGrid(spec, np.exp(logv).astype(complex), source)
    out = np.ones(spec.shape, dtype=complex)
    for k, m in counts.items():
        g = cf_on_grid(unique[k], spec, scale=scale)
        if g.source != "analytic":
            source = "transformed"
        out *= g.values ** m
    return CharFnGrid(spec, out, source)


def product_cf(dists: Sequence[DistributionSpec], n: int, spec: GridSpec) -> CharFnGrid:
    """CF of Z_n: product of v_k(t/sqrt(n)), cycling ``dists`` to length n."""
    return sum_cf(cycle_summands(dists, n), spec, scale=1.0 / math.sqrt(n))


def cf_tail_estimate(values: np.ndarray, spec: GridSpec, power: float = 1.0,
                     n_bins: int = 32) -> float:
    """Estimate of the integral of |f|^power over |t| beyond the inscribed window.

    Shell means of |f|^power over [T/2, T] are fitted by A rho^-alpha and the
    fit is integrated to infinity.  Returns ``inf`` when the fitted decay is
    not integrable (alpha <= d).
    """
    d = spec.dim
    tmax = spec.t_max
    rho = np.linalg.norm(spec.t_points(), axis=-1)
    a = np.abs(values) ** power
    edges = np.linspace(0.5 * tmax, tmax, n_bins + 1)
    idx = np.digitize(rho.ravel(), edges) - 1
    ok = (idx >= 0) & (idx < n_bins)
    sums = np.bincount(idx[ok], weights=a.ravel()[ok], minlength=n_bins)
    cnt = np.bincount(idx[ok], minlength=n_bins)
    means = sums / np.maximum(cnt, 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    peak = float(a.max()) if a.size else 0.0
    if means[-1] <= 1e-30 * max(peak, 1e-300):
        return float(sphere_area(d) * means[-1] * tmax ** d)
    pos = means > 0
    slope, intercept = np.polyfit(np.log(centers[pos]), np.log(means[pos]), 1)
    alpha = -slope
    if alpha <= d + 1e-3:
        return math.inf
    amp = math.exp(intercept)
    return float(sphere_area(d) * amp * tmax ** (d - alpha) / (alpha - d))


def invert_to_density(cf: CharFnGrid, tail_tol: float = 1e-6, strict: bool = True) -> DensityGrid:
    """Fourier inversion p(x) = (2 pi)^-d int exp(-i<t,x>) f(t) dt on the grid.

    The estimated tail of |f| beyond the window bounds the pointwise error
    by tail / (2 pi)^d; with ``strict`` an estimate above ``tail_tol``
    raises :class:`InsufficientWindowError`.
    """
    spec = cf.spec
    if strict:
        tail = cf_tail_estimate(cf.values, spec) / (2.0 * math.pi) ** spec.dim
        if not tail <= tail_tol:
            raise InsufficientWindowError(
                f"estimated CF tail beyond |t| = {spec.t_max:.4g} is {tail:.3g} > {tail_tol:.3g}; "
                "widen the frequency window (more points or smaller half-width)",
                tail=tail, tolerance=tail_tol)
    n = spec.points_per_axis
    raw = np.fft.fftn(cf.values * spec._signs(n // 2))
    p = (spec.freq_step / (2.0 * math.pi)) ** spec.dim * spec._signs(0) * raw
    values = p.real
    mass = values.sum() * spec.step ** spec.dim
    return DensityGrid(spec, values, abs(1.0 - mass))


def density_of_normalized_sum(dists: Sequence[DistributionSpec], n: int, spec: GridSpec,
                              tail_tol: float = 1e-6) -> DensityGrid:
    return invert_to_density(product_cf(dists, n, spec), tail_tol=tail_tol)


# --------------------------------------------------------------------------
# sup distance and refinement
# --------------------------------------------------------------------------

def _refine_extremum(values: np.ndarray, spec: GridSpec) -> tuple[float, np.ndarray]:
    idx = np.unravel_index(int(np.argmax(values)), values.shape)
    g0 = float(values[idx])
    x = spec.x_axis()
    loc = np.array([x[i] for i in idx])
    gain = 0.0
    for axis in range(values.ndim):
        i = idx[axis]
        if i == 0 or i == values.shape[axis] - 1:
            continue
        lo = list(idx)
        hi = list(idx)
        lo[axis] -= 1
        hi[axis] += 1
        gm, gp = float(values[tuple(lo)]), float(values[tuple(hi)])
        curv = gm - 2.0 * g0 + gp
        if curv >= 0:
            continue
        # a jump or kink next to the maximum shows up as inconsistent curvature
        # at the neighbouring nodes; the parabola would overshoot there
        if 2 <= i <= values.shape[axis] - 3:
            lo[axis] -= 1
            hi[axis] += 1
            cm = float(values[tuple(lo)]) - 2.0 * gm + g0
            cp = g0 - 2.0 * gp + float(values[tuple(hi)])
            curvs = np.abs([cm, curv, cp])
            if cm >= 0 or cp >= 0 or curvs.max() > 4.0 * curvs.min():
                continue
        delta = 0.5 * (gm - gp) / curv
        if abs(delta) > 0.5:
            continue
        gain += -0.125 * (gm - gp) ** 2 / curv
        loc[axis] += delta * spec.step
    return g0 + gain, loc


@dataclass(frozen=True)
class SupDistance:
    value: float
    grid_value: float
    location: np.ndarray

    def __float__(self):
        return self.value


def sup_distance(p: DensityGrid, q_analytic: Callable[[np.ndarray], np.ndarray]) -> SupDistance:
    """sup_x |p(x) - q(x)| on the grid, refined by a parabolic fit at the argmax."""
    diff = p.values - q_analytic(p.spec.x_points())
    idx = np.unravel_index(int(np.argmax(np.abs(diff))), diff.shape)
    sign = 1.0 if diff[idx] >= 0 else -1.0
    value, loc = _refine_extremum(sign * diff, p.spec)
    return SupDistance(max(value, 0.0), float(abs(diff[idx])), loc)


def std_normal_density(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return np.exp(-0.5 * np.sum(x * x, axis=-1)) / (2.0 * math.pi) ** (d / 2)


# --------------------------------------------------------------------------
# precise two-summand convolution in dimension one
# --------------------------------------------------------------------------

def _support_1d(dist: DistributionSpec) -> tuple[float, float]:
    # quadrature nodes never sit on a support edge; the jumps do
    nodes, _ = dist.quadrature()
    edges = [float(nodes[:, 0].min()), float(nodes[:, 0].max()), *dist.breakpoints]
    return min(edges), max(edges)


def convolution_density_1d(a: DistributionSpec, b: DistributionSpec, x: float) -> float:
    """(p_a * p_b)(x) by adaptive quadrature with the jumps as breakpoints."""
    lo, hi = _support_1d(b)
    lo_a, hi_a = _support_1d(a)
    lo, hi = max(lo, x - hi_a), min(hi, x - lo_a)
    if hi <= lo:
        return 0.0
    pts = [p for p in (*b.breakpoints, *(x - q for q in a.breakpoints), 0.0) if lo < p < hi]

    def integrand(y):
        return float(a.pdf(x - y)) * float(b.pdf(y))

    val, _ = integrate.quad(integrand, lo, hi, points=pts or None, limit=400,
                            epsabs=1e-14, epsrel=1e-13)
    return val


def max_of_convolution_1d(a: DistributionSpec, b: DistributionSpec, guess: float,
                          bracket: float) -> tuple[float, float]:
    """Refine the maximum of p_a * p_b around ``guess``; returns (value, location)."""
    res = optimize.minimize_scalar(lambda x: -convolution_density_1d(a, b, x),
                                   bounds=(guess - bracket, guess + bracket), method="bounded",
                                   options={"xatol": 1e-10})
    best = max((convolution_density_1d(a, b, guess), guess), (-res.fun, res.x))
    return float(best[0]), float(best[1])


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

_MAGIC = b"LLTG"
_DTYPES = {np.dtype("float64"): b"f8", np.dtype("complex128"): b"c16"}


def _header(spec: GridSpec, dtype: np.dtype) -> bytes:
    code = _DTYPES[np.dtype(dtype)].ljust(4, b" ")
    return _MAGIC + struct.pack("<iid", spec.dim, spec.points_per_axis, spec.half_width) + code


def save_binary(grid, path) -> None:
    """Flat little-endian layout: magic, dim, N, L, dtype code, row-major values."""
    arr = np.ascontiguousarray(grid.values)
    with open(path, "wb") as fh:
        fh.write(_header(grid.spec, arr.dtype))
        fh.write(arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes(order="C"))


def load_binary(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ParameterError("not a grid file")
    dim, n, half = struct.unpack("<iid", blob[4:20])
    code = blob[20:24].strip()
    dtype = {v: k for k, v in _DTYPES.items()}[code]
    spec = GridSpec(dim, half, n)
    values = np.frombuffer(blob[24:], dtype=dtype.newbyteorder("<")).reshape(spec.shape).copy()
    if dtype.kind == "c":
        return CharFnGrid(spec, values, "transformed")
    mass = values.sum() * spec.step ** dim
    return DensityGrid(spec, values, abs(1.0 - mass))


def _grid_csv(spec: GridSpec, axis: np.ndarray, values: np.ndarray, prefix: str, path_or_buf):
    cols = [f"{prefix}{i + 1}" for i in range(spec.dim)] if spec.dim > 1 else [prefix]
    mesh = spec._mesh(axis).reshape(-1, spec.dim)
    flat = values.reshape(-1)
    buf = io.StringIO()
    if np.iscomplexobj(values):
        buf.write(",".join(cols + ["re", "im"]) + "\n")
        for pt, v in zip(mesh, flat):
            buf.write(",".join(f"{c:.12e}" for c in (*pt, v.real, v.imag)) + "\n")
    else:
        buf.write(",".join(cols + ["density"]) + "\n")
        for pt, v in zip(mesh, flat):
            buf.write(",".join(f"{c:.12e}" for c in (*pt, v)) + "\n")
    text = buf.getvalue()
    if path_or_buf is None:
        return text
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w") as fh:
            fh.write(text)
    return None
