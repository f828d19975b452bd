import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llt_lab import cf_analysis as CF
from llt_lab import distributions as D
from llt_lab import functionals as F
from llt_lab.errors import DegenerateTruncationError, ParameterError
from llt_lab.fixtures import fixture, fixture_tolerance


def test_plancherel_one_dimensional(uniform, exponential, triangle, gauss1):
    for spec in (uniform, exponential, triangle, gauss1):
        lhs = CF.cf_power_integral(spec, 2).value / (2 * math.pi)
        assert lhs == pytest.approx(CF.density_square_integral(spec), abs=1e-6), spec.name


def test_plancherel_disk(disk):
    lhs = CF.cf_power_integral(disk, 2).value / (2 * math.pi) ** 2
    assert lhs == pytest.approx(CF.density_square_integral(disk), abs=1e-5)


def test_lp_fixtures():
    lp = "lp_uniform_m1"
    got = CF.lp_norm_cf(D.make_uniform_interval(1 / math.sqrt(3)), 1).value
    assert got == pytest.approx(fixture(lp), abs=fixture_tolerance(lp))
    g = "lp_gaussian_m1"
    assert CF.lp_norm_cf(D.make_gaussian(1), 1).value == pytest.approx(fixture(g), abs=fixture_tolerance(g))


@pytest.mark.parametrize("m", [1, 2, 4, 8, 16])
def test_lp_envelope(uniform, exponential, m):
    for spec in (uniform, exponential):
        rep = CF.lp_norm_cf(spec, m)
        assert rep.holds
        assert rep.ratio <= 1.0


def test_lp_rejects_bad_order(uniform):
    with pytest.raises(ParameterError):
        CF.lp_norm_cf(uniform, 0)
    with pytest.raises(ParameterError):
        CF.lp_norm_cf(uniform, 1.5)


def test_gaussian_tail_fixture():
    fx = "gaussian_tail_n4"
    got = CF.tail_integral_cf(D.make_gaussian(1), 1.0, 4).value
    assert got == pytest.approx(fixture(fx), abs=fixture_tolerance(fx))


def test_tail_decreases_with_eps(exponential):
    vals = [CF.tail_integral_cf(exponential, e, 8, c=0.1).value for e in (0.2, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_tail_envelope_holds(uniform):
    c = CF.separation_scan(uniform, 0.05, 40.0).c_empirical
    for n in (4, 8, 16):
        rep = CF.tail_integral_cf(uniform, 0.5, n, c=c)
        assert rep.value <= rep.envelope


def test_tail_rejects_bad_args(uniform):
    with pytest.raises(ParameterError):
        CF.tail_integral_cf(uniform, 0.5, 1)
    with pytest.raises(ParameterError):
        CF.tail_integral_cf(uniform, -1.0, 4)


@given(st.floats(0.3, 6.0))
def test_cf_power_integral_matches_gaussian(power):
    # int |exp(-t^2/2)|^p dt = sqrt(2 pi / p)
    got = CF.cf_power_integral(D.make_gaussian(1), power).value
    assert got == pytest.approx(math.sqrt(2 * math.pi / power), rel=1e-9)


def test_symmetrize_uniform():
    fx = "symmetrized_uniform_at_zero"
    w = CF.symmetrize(D.make_uniform_interval(1 / math.sqrt(3)))
    assert float(w.pdf([0.0])) == pytest.approx(fixture(fx), abs=fixture_tolerance(fx))
    # triangle on [-2, 2]
    assert float(w.pdf([1.0])) == pytest.approx(0.25, abs=1e-9)
    assert w.sigma2 == pytest.approx(2 / 3)
    t = np.linspace(-5, 5, 11)[:, None]
    assert np.allclose(w.charfn(t).real, np.sinc(t[:, 0] / np.pi) ** 2)


def test_symmetrize_disk_max_is_plancherel(disk):
    w = CF.symmetrize(disk)
    assert float(w.pdf([0.0, 0.0])) == pytest.approx(CF.density_square_integral(disk), rel=1e-6)


def test_separation_gaussian_delta():
    rep = CF.separation_scan(D.make_gaussian(1), 1.0, 40.0)
    assert rep.delta_f == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert rep.c_empirical > 0
    assert rep.certified


@pytest.mark.parametrize("name", ["uniform", "exponential", "triangle", "disk"])
def test_separation_positive_and_stable(request, name):
    spec = request.getfixturevalue(name)
    eps, T = 0.05 / spec.sigma, 40.0 / spec.sigma
    a = CF.separation_scan(spec, eps, T)
    b = CF.separation_scan(spec, eps, T, resolution=2)
    assert a.c_empirical > 0
    assert abs(b.c_empirical / a.c_empirical - 1) <= 0.10
    if spec.dim == 1:
        assert a.floor_margin >= 0


def test_separation_small_t_limit():
    fx = "uniform_small_t_ratio"
    rep = CF.separation_scan(D.make_uniform_interval(1.0), 1e-3, 40.0)
    assert rep.c_small_t == pytest.approx(fixture(fx), abs=fixture_tolerance(fx))


def test_separation_rejects_bad_window(uniform):
    with pytest.raises(ParameterError):
        CF.separation_scan(uniform, 0.0, 10.0)
    with pytest.raises(ParameterError):
        CF.separation_scan(uniform, 2.0, 1.0)


def test_c_feasible(uniform, exponential):
    reps = [CF.separation_scan(s, 0.05, 40.0) for s in (uniform, exponential)]
    assert CF.c_feasible(reps) == min(r.c_empirical for r in reps)
    with pytest.raises(ParameterError):
        CF.c_feasible([])


def test_truncation_gaussian_b_r():
    fx = "gaussian_b_r"
    assert CF.truncate(D.make_gaussian(2)).b_r == pytest.approx(fixture(fx), abs=fixture_tolerance(fx))


@pytest.mark.parametrize("name", ["disk", "strip", "product"])
def test_truncation_bounds(request, name):
    spec = request.getfixturevalue(name)
    tr = CF.truncate(spec)
    assert tr.r == pytest.approx(spec.sigma * 2.0)
    assert tr.b_r >= 0.5
    assert tr.variance_bound_ok
    assert tr.marginal_bound_ok
    assert CF.truncation_relation_check(tr) >= -1e-12


def test_truncation_errors(uniform, disk):
    with pytest.raises(ParameterError):
        CF.truncate(uniform)
    with pytest.raises(DegenerateTruncationError):
        CF.truncate(disk, r=1e-3)


def test_truncated_cf_at_zero(disk):
    tr = CF.truncate(disk)
    assert abs(tr.charfn([0.0, 0.0]) - 1.0) < 1e-9
    assert F.max_density(disk) <= float(tr.density([0.0, 0.0])) + 1e-12
