import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llt_lab import distributions as D
from llt_lab import functionals as F
from llt_lab.errors import UnboundedDensityError, UnsupportedOrderError
from llt_lab.fixtures import fixture


def test_max_density_closed_forms(uniform):
    assert F.max_density(uniform) == pytest.approx(1 / (2 * math.sqrt(3)), abs=1e-15)
    assert F.max_density(D.make_gaussian(2)) == pytest.approx(1 / (2 * math.pi), abs=1e-15)


def test_max_density_grid_agrees(triangle, exponential):
    for spec in (triangle, D.make_gaussian(1)):
        assert F.max_density(spec, grid_points=8192) == pytest.approx(
            F.max_density(spec), rel=1e-3)


def test_strip_projection_unbounded(strip):
    assert math.isfinite(F.max_density(strip))
    with pytest.raises(UnboundedDensityError):
        F.max_density(strip, direction=[1.0, 0.0])


def test_projected_density_of_disk(disk):
    r = disk.support_radius
    u = np.linspace(-1.9, 1.9, 9)
    q = F.projected_density(disk, [1.0, 1.0], u)
    expected = 2 * np.sqrt(r * r - u * u) / (math.pi * r * r)
    assert np.max(np.abs(q - expected)) < 1e-6


def test_beta_values():
    u = D.make_uniform_interval(1.0)
    g = D.make_gaussian(1)
    assert F.beta_p_sup([u], 1, 3).value == pytest.approx(fixture("beta3_uniform"), abs=1e-9)
    assert F.beta_p_sup([g], 1, 3).value == pytest.approx(fixture("beta3_gaussian"), abs=1e-9)
    for d in (1, 2, 3):
        g = D.make_gaussian(d)
        theta = np.ones(d) / math.sqrt(d)
        assert F.beta_p_directional([g], 1, theta, 4) == pytest.approx(3.0, abs=1e-8)


def test_beta_rotation_invariance(disk):
    vals = [F.beta_p_directional([disk], 1, [math.cos(a), math.sin(a)], 3)
            for a in np.linspace(0, math.pi, 7)]
    assert max(vals) - min(vals) < 1e-8
    assert F.beta_p_sup([disk], 1, 3).value == pytest.approx(vals[0], abs=1e-6)


def test_beta_product_dense_scan(product):
    res = F.beta_p_sup([product], 1, 3)
    assert res.value == pytest.approx(fixture("product_beta3_sup"), abs=1e-5)
    assert res.value >= res.lattice_value
    assert np.linalg.norm(res.theta) == pytest.approx(1.0)


def test_beta_sup_of_average_not_average_of_sups(uniform, exponential):
    mixed = F.beta_p_sup([uniform, exponential], 2, 3).value
    sep = 0.5 * (F.beta_p_sup([uniform], 1, 3).value + F.beta_p_sup([exponential], 1, 3).value)
    # in d = 1 the sup is over theta = +-1 and the exponential prefers one sign
    assert mixed <= sep + 1e-12


def test_unsupported_order(uniform):
    with pytest.raises(UnsupportedOrderError):
        F.beta_p_sup([uniform], 1, 5)


def test_lyapunov():
    g = D.make_gaussian(1)
    assert F.lyapunov_L([g], 4, 3) == pytest.approx(fixture("L3_gaussian_n4"), abs=1e-9)
    assert F.lyapunov_L([g], 1, 4) == pytest.approx(3.0)


def test_ball_volume():
    assert F.ball_volume(1) == pytest.approx(2.0)
    assert F.ball_volume(2) == pytest.approx(math.pi)
    assert F.ball_volume(3) == pytest.approx(4 * math.pi / 3, abs=1e-12)


def test_isotropic_margins(uniform, disk):
    m = F.check_isotropic_bounds(uniform)
    assert abs(m.interval) < 1e-12
    assert abs(F.check_isotropic_bounds(disk).ball) < 1e-10
    g = F.check_isotropic_bounds(D.make_gaussian(1))
    assert g.entropy == pytest.approx(1 / (2 * math.pi) - 1 / (2 * math.pi * math.e), abs=1e-12)


def test_catalog_inequality_chains(catalog):
    for spec in catalog.values():
        assert F.check_isotropic_bounds(spec).worst() >= -1e-9, spec.name
        if not spec.bounded_projections:
            continue
        b3 = F.beta_p_sup([spec], 1, 3).value
        b4 = F.beta_p_sup([spec], 1, 4).value
        # 1 <= beta3 <= sqrt(beta4) at unit variance
        assert 1 - 1e-9 <= b3 / spec.sigma2 ** 1.5, spec.name
        assert b3 <= math.sqrt(b4) + 1e-9, spec.name


def test_functional_report(uniform, exponential):
    rep = F.functional_report([uniform, exponential], 8)
    assert rep.M == pytest.approx(1.0)
    assert rep.sigma == pytest.approx(1.0)
    assert rep.L3 == pytest.approx(rep.beta3 / math.sqrt(8))
    assert rep.L4 == pytest.approx(rep.beta4 / 8)
    # L_p >= (max_k b_k)^p with b_k = sigma_k / sqrt(n)
    assert rep.L3 >= (1 / math.sqrt(8)) ** 3
    rec = rep.as_record()
    assert rec["n"] == 8 and rec["beta3"] == rep.beta3


@given(lam=st.floats(min_value=0.3, max_value=4.0), d=st.integers(1, 3))
def test_max_density_homogeneity(lam, d):
    base = D.make_uniform_ball(d, 1.0)
    scaled = D.rescaled(base, lam)
    assert F.max_density(scaled) == pytest.approx(lam ** d * F.max_density(base), rel=1e-8)


@given(sigma=st.floats(min_value=0.3, max_value=3.0))
def test_beta_scaling(sigma):
    u = D.make_uniform_interval(sigma)
    assert F.beta_p_sup([u], 1, 3).value == pytest.approx(
        sigma ** 3 * fixture("beta3_uniform"), rel=1e-9)


@given(a=st.floats(min_value=0, max_value=2 * math.pi))
def test_rotated_direction_value_agrees(a):
    b = D.make_uniform_ball(3, 1.0)
    theta = np.array([math.cos(a), math.sin(a), 0.3])
    theta /= np.linalg.norm(theta)
    assert F.beta_p_directional([b], 1, theta, 3) == pytest.approx(
        F.beta_p_directional([b], 1, [0, 0, 1.0], 3), abs=1e-8)
