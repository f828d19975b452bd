import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llt_lab import distributions as D
from llt_lab.errors import ParameterError, UnsupportedDimensionError
from llt_lab.fixtures import fixture

sigmas = st.floats(min_value=0.2, max_value=5.0)


def _moments(spec):
    nodes, w = spec.quadrature(1)
    mass = w.sum()
    mean = w @ nodes
    cov = (nodes * w[:, None]).T @ nodes
    return mass, mean, cov


def test_catalog_moments(catalog):
    for spec in catalog.values():
        mass, mean, cov = _moments(spec)
        tol = 1e-8 if spec.dim == 1 else 1e-6
        assert abs(mass - 1) < tol, spec.name
        assert np.all(np.abs(mean) < 1e-8), spec.name
        off = cov - np.diag(np.diag(cov))
        assert np.all(np.abs(off) < 1e-6), spec.name
        assert np.allclose(np.diag(cov), spec.sigma2, atol=1e-6), spec.name


def test_closed_form_cf_matches_quadrature(catalog):
    for spec in catalog.values():
        if spec.cf is None:
            continue
        nodes, w = spec.quadrature(1)
        d = spec.dim
        ts = np.stack([np.linspace(-3, 3, 25) * (k + 1) / d for k in range(d)], axis=-1)
        quad = np.exp(1j * ts @ nodes.T) @ w
        assert np.max(np.abs(quad - spec.charfn(ts))) < 1e-6, spec.name


def test_symmetric_laws_are_even(catalog):
    rng_pts = np.linspace(-2.5, 2.5, 41)
    for spec in catalog.values():
        if not spec.symmetric:
            continue
        x = np.stack([rng_pts * (k + 0.7) for k in range(spec.dim)], axis=-1) / spec.dim
        assert np.allclose(spec.pdf(x), spec.pdf(-x)), spec.name


def test_uniform_interval_values(uniform):
    assert uniform.max_density_closed_form == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-15)
    assert uniform.max_density_closed_form ** 2 * uniform.sigma2 == pytest.approx(1 / 12, abs=1e-15)
    assert float(uniform.charfn([[1.0]])[0].real) == pytest.approx(
        math.sin(math.sqrt(3)) / math.sqrt(3), abs=1e-15)


def test_ball_radius_matches_oracle(disk):
    assert disk.support_radius == pytest.approx(fixture("ball2_radius"), abs=1e-9)
    omega = math.pi
    q = disk.max_density_closed_form * disk.sigma2
    assert q == pytest.approx(omega ** -1 / 4, abs=1e-10)


def test_ball_dim1_reduces_to_interval(uniform):
    b = D.make_uniform_ball(1, 1.0)
    assert b.max_density_closed_form == pytest.approx(uniform.max_density_closed_form)
    t = np.linspace(-5, 5, 11)[:, None]
    assert np.allclose(b.charfn(t), uniform.charfn(t))


def test_gaussian_peak(gauss1):
    assert gauss1.max_density_closed_form == pytest.approx(1 / math.sqrt(2 * math.pi))
    assert D.make_gaussian(3).max_density_closed_form ** (2 / 3) == pytest.approx(1 / (2 * math.pi))


def test_asymmetric_families(exponential, triangle):
    assert not exponential.third_moments_vanish and not triangle.third_moments_vanish
    assert exponential.max_density_closed_form == 1.0
    assert float(exponential.pdf([-1.0 + 1e-12])) == pytest.approx(1.0)
    nodes, w = triangle.quadrature(1)
    third = float(w @ nodes[:, 0] ** 3)
    assert abs(third) > 1e-3
    assert third == pytest.approx(fixture("third_moment_triangle"), abs=1e-9)


def test_strip_law(strip):
    assert strip.params["c"] == pytest.approx(fixture("strip_isotropy_c"), abs=1e-8)
    assert strip.params["c"] == pytest.approx(3 * math.sqrt(2), abs=1e-10)
    _, _, cov = _moments(strip)
    assert abs(cov[0, 1]) < 1e-8
    assert not strip.bounded_projections
    # marginal of X1 is (1/2) log(1/|x1|): value 1 at exp(-2)
    c = strip.params["c"]
    x1 = math.exp(-2.0)
    assert (c / 4) * 2 * math.log(1 / x1) / c == pytest.approx(1.0)


def test_strip_rejects_non_isotropic_c():
    with pytest.raises(ParameterError):
        D.make_unbounded_marginal_example(3.0)


def test_validation_errors():
    with pytest.raises(ParameterError):
        D.make_uniform_interval(0.0)
    with pytest.raises(ParameterError):
        D.make_gaussian(1, -1.0)
    with pytest.raises(UnsupportedDimensionError):
        D.make_uniform_ball(4)
    with pytest.raises(ParameterError):
        D.make_asymmetric_family("lognormal")
    with pytest.raises(ParameterError):
        D.build("cauchy")
    with pytest.raises(UnsupportedDimensionError):
        D.build("centered-exponential", d=2)


def test_build_by_id():
    b = D.build("uniform-ball", d=3, sigma=2.0)
    assert b.dim == 3 and b.sigma2 == pytest.approx(4.0)
    p = D.build("product", left="uniform-interval", right="centered-exponential")
    assert p.dim == 2 and not p.third_moments_vanish


@given(sigma=sigmas)
def test_uniform_scale_invariance(sigma):
    u = D.make_uniform_interval(sigma)
    assert u.max_density_closed_form ** 2 * u.sigma2 == pytest.approx(1 / 12, rel=1e-12)


@given(sigma=sigmas, t=st.floats(min_value=-20, max_value=20))
def test_rescaled_cf(sigma, t):
    base = D.make_asymmetric_family("skewed-triangle", 1.0)
    scaled = D.rescaled(base, sigma)      # law of X / sigma
    assert scaled.sigma2 == pytest.approx(sigma ** -2)
    assert complex(scaled.charfn([[t]])[0]) == pytest.approx(
        complex(base.charfn([[t / sigma]])[0]), abs=1e-12)
    assert scaled.max_density_closed_form == pytest.approx(sigma * base.max_density_closed_form)


@given(sigma=sigmas, d=st.integers(1, 3))
def test_ball_isotropic_constant(sigma, d):
    b = D.make_uniform_ball(d, sigma)
    q = b.max_density_closed_form ** (2 / d) * b.sigma2
    assert q == pytest.approx(D.ball_volume(d) ** (-2 / d) / (d + 2), rel=1e-12)


@given(t=st.floats(min_value=-60, max_value=60))
def test_cf_modulus_at_most_one(t):
    for spec in (D.make_uniform_interval(1.0), D.make_asymmetric_family("centered-exponential"),
                 D.make_asymmetric_family("skewed-triangle")):
        assert abs(complex(spec.charfn([[t]])[0])) <= 1 + 1e-12
