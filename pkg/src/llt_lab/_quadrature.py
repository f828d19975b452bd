"""Low-level quadrature rules shared by the catalog and the analysis modules."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2) / math.exp(gammaln(d / 2))


def gauss_legendre_panels(breaks, max_width: float, order: int = 16):
    """Composite Gauss-Legendre rule on [breaks[0], breaks[-1]].

    Every interval between consecutive breakpoints is split into panels no
    wider than ``max_width``; jumps and kinks of the integrand should be
    passed as breakpoints so that each panel sees a smooth function.
    """
    breaks = np.unique(np.asarray(breaks, dtype=float))
    g, gw = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        m = max(1, int(math.ceil((b - a) / max_width)))
        edges = np.linspace(a, b, m + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * g[None, :]).ravel())
        weights.append((half[:, None] * gw[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def fibonacci_sphere(n: int) -> np.ndarray:
    """Quasi-uniform unit vectors on S^2 (golden spiral), shape (n, 3)."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)


def unit_directions(d: int, n: int) -> np.ndarray:
    """Deterministic probe directions on the unit sphere of R^d, shape (n, d).

    d = 1 returns the two directions +1/-1 regardless of ``n``; d = 2 uses
    equally spaced angles on the half circle (enough for even functionals)
    doubled to the full circle; d = 3 uses the Fibonacci spiral.
    """
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        phi = 2.0 * math.pi * np.arange(n) / n
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    if d == 3:
        return fibonacci_sphere(n)
    raise ValueError(f"unsupported dimension {d}")


def ball_rule(d: int, radius: float, n_radial: int = 64, n_angular: int = 128,
              radial_breaks=()):
    """Product rule on the centered ball of given radius (Lebesgue measure).

    Returns nodes (K, d) and weights (K,) such that sum w g(x) approximates
    the integral of g over the ball.  Radial nodes are Gauss-Legendre with
    extra breakpoints allowed (e.g. a support edge inside the ball).
    """
    breaks = [0.0, *[b for b in radial_breaks if 0.0 < b < radius], radius]
    rho, wr = gauss_legendre_panels(breaks, max_width=radius / max(1, n_radial // 16), order=16)
    if d == 1:
        x = np.concatenate([-rho[::-1], rho])
        w = np.concatenate([wr[::-1], wr])
        return x[:, None], w
    if d == 2:
        phi = 2.0 * math.pi * np.arange(n_angular) / n_angular
        wphi = 2.0 * math.pi / n_angular
        R, P = np.meshgrid(rho, phi, indexing="ij")
        W = (wr * rho)[:, None] * wphi * np.ones_like(P)
        x = np.stack([R * np.cos(P), R * np.sin(P)], axis=-1).reshape(-1, 2)
        return x, W.ravel()
    if d == 3:
        n_pol = max(8, n_angular // 2)
        mu, wmu = np.polynomial.legendre.leggauss(n_pol)
        phi = 2.0 * math.pi * np.arange(n_angular) / n_angular
        wphi = 2.0 * math.pi / n_angular
        R, MU, P = np.meshgrid(rho, mu, phi, indexing="ij")
        s = np.sqrt(1.0 - MU * MU)
        x = np.stack([R * s * np.cos(P), R * s * np.sin(P), R * MU], axis=-1).reshape(-1, 3)
        W = (wr * rho ** 2)[:, None, None] * wmu[None, :, None] * wphi
        W = np.broadcast_to(W, R.shape)
        return x, W.ravel().copy()
    raise ValueError(f"unsupported dimension {d}")


def charfn_from_rule(nodes: np.ndarray, weights: np.ndarray, t: np.ndarray,
                     chunk: int = 0) -> np.ndarray:
    """Evaluate sum_k w_k exp(i <t, x_k>) for an array of frequencies.

    ``t`` has shape (..., d); the result has shape (...).  Frequencies are
    processed in chunks of about 2^22 phase entries.
    """
    if chunk <= 0:
        chunk = max(1, (1 << 22) // max(1, len(nodes)))
    t = np.asarray(t, dtype=float)
    shape = t.shape[:-1]
    tf = t.reshape(-1, t.shape[-1])
    out = np.empty(tf.shape[0], dtype=complex)
    for s in range(0, tf.shape[0], chunk):
        ph = tf[s:s + chunk] @ nodes.T
        out[s:s + chunk] = np.exp(1j * ph) @ weights
    return out.reshape(shape)
