import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llt_lab import bounds as B
from llt_lab import distributions as D
from llt_lab import functionals as F
from llt_lab.errors import ModeMismatchError, ParameterError, PreconditionError
from llt_lab.fixtures import fixture, fixture_tolerance

SQ3 = math.sqrt(3.0)


def _report(M=0.3, sigma=1.0, beta3=1.5, beta4=2.0):
    return F.FunctionalReport(M=M, sigma=sigma, beta3=beta3, beta4=beta4, isotropic_const=0.0,
                              L3=0.0, L4=0.0, theta_star3=(1.0,), theta_star4=(1.0,))


def test_experiment_validation(uniform, exponential, disk):
    with pytest.raises(ParameterError):
        B.Experiment([], [4])
    with pytest.raises(ParameterError):
        B.Experiment([uniform, disk], [4])
    with pytest.raises(ParameterError):
        B.Experiment([uniform], [8, 4])
    with pytest.raises(ModeMismatchError):
        B.Experiment([exponential], [4], mode="symmetric")
    with pytest.raises(ParameterError):
        B.Experiment([uniform], [4], C=-1.0)
    assert B.Experiment([disk], [4, 8]).dim == 2


def test_theorem11_fixture():
    got = B.theorem11_rhs(_report(M=1 / (2 * SQ3), beta3=3 * SQ3 / 4), 16, 1, 1.0)
    assert got == pytest.approx(fixture("theorem11_fixture"),
                                abs=fixture_tolerance("theorem11_fixture"))


@given(st.integers(1, 10_000), st.integers(1, 3), st.floats(0.5, 5.0))
def test_rhs_scaling_in_n(n, d, C):
    rep = _report()
    assert B.theorem11_rhs(rep, 4 * n, d, C) == pytest.approx(
        0.5 * B.theorem11_rhs(rep, n, d, C), rel=1e-12)
    assert B.theorem12_rhs(rep, 4 * n, d, C, True) == pytest.approx(
        0.25 * B.theorem12_rhs(rep, n, d, C, True), rel=1e-12)


def test_theorem12_needs_symmetry():
    with pytest.raises(ModeMismatchError):
        B.theorem12_rhs(_report(), 4, 1, 3.0, False)


def test_theorem71_mixed_fixture():
    per_k = [(1 / (2 * 0.8 * SQ3), 0.8), (1 / (2 * 1.2 * SQ3), 1.2)]
    got = B.theorem71_rhs(per_k, 1.3, 2, 1, 3.0, 0.1, "general")
    assert got == pytest.approx(fixture("theorem71_mixed_fixture"),
                                abs=fixture_tolerance("theorem71_mixed_fixture"))


@given(st.integers(1, 64), st.floats(0.05, 2.0), st.floats(0.5, 3.0), st.floats(1.0, 4.0))
def test_theorem71_homogeneous_reduction(n, M, sigma, beta):
    # identical summands: the geometric mean is M and the exponent is n times one term
    C, c = 3.0, 0.1
    got = B.theorem71_rhs([(M, sigma)] * n, beta, n, 1, C, c, "general")
    x = c * n * min(sigma ** 2 / beta ** 2, 1.0) / (M * M * sigma ** 2)
    assert got == pytest.approx(C * (beta / math.sqrt(n) + M * math.exp(-x)), rel=1e-12)


def test_theorem71_length_check():
    with pytest.raises(ParameterError):
        B.theorem71_rhs([(0.3, 1.0)], 1.5, 2, 1, 3.0, 0.1)


def test_subadditivity_two_uniform_equality(uniform_pm1):
    rec = B.subadditivity_check([uniform_pm1, uniform_pm1])
    assert rec.M_sum == pytest.approx(0.5, abs=fixture_tolerance("two_uniform_sum_max"))
    # M(S)^-2 = 4 = (1/2)(4 + 4)
    assert rec.harmonic_lhs == pytest.approx(rec.harmonic_rhs_half, abs=1e-6)
    assert rec.ok


def test_subadditivity_gaussians_and_mixed(uniform, gauss1, exponential, disk):
    g = D.make_gaussian(1, 2.0)
    rec = B.subadditivity_check([gauss1, g])
    assert rec.M_sum == pytest.approx(1 / math.sqrt(2 * math.pi * 5.0), rel=1e-12)
    for group in ([uniform, gauss1], [uniform, exponential, exponential], [disk, disk]):
        assert B.subadditivity_check(group).ok
    rec = B.subadditivity_check([uniform, gauss1])
    assert rec.M_sum == pytest.approx(fixture("uniform_gaussian_sum_max"), abs=1e-8)


def test_cf_product_gaussian_is_exact():
    exp = B.Experiment([D.make_gaussian(1)], [8, 16, 32], mode="symmetric")
    for n in exp.n_list:
        assert B.cf_product_error_check(exp, n).C_min <= 1e-7


@pytest.mark.parametrize("kind,mode", [("uniform", "symmetric"), ("exponential", "general")])
def test_cf_product_fixtures(kind, mode):
    fam = (D.make_uniform_interval(1.0) if kind == "uniform"
           else D.make_asymmetric_family("centered-exponential", 1.0))
    exp = B.Experiment([fam], [8, 16, 32], mode=mode)
    vals = []
    for n in exp.n_list:
        name = f"cf_cmin_{kind}_n{n}"
        rec = B.cf_product_error_check(exp, n)
        assert rec.C_min == pytest.approx(fixture(name), abs=fixture_tolerance(name))
        vals.append(rec.C_min)
    assert 0.5 <= vals[-1] / vals[0] <= 2.0


def test_cf_product_cmin_grows_with_c(exponential):
    # a larger c shrinks the envelope, so the minimal constant cannot decrease
    exp = B.Experiment([exponential], [16])
    vals = [B.cf_product_error_check(exp, 16, c=c).C_min for c in (0.05, 0.125, 0.25, 0.4)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))


def test_rate_fit_exact_power_law():
    n = np.array([4, 8, 16, 32, 64])
    fit = B.rate_fit(n, 0.3 * n ** -1.0)
    assert fit.slope == pytest.approx(-1.0, abs=1e-12)
    assert fit.dropped == ()
    with pytest.raises(ParameterError):
        B.rate_fit([4], [0.1])


def test_rate_fit_drops_transient():
    n = np.array([4, 8, 16, 32, 64])
    delta = 0.3 * n ** -1.0 * (1 + 1e-3 * np.array([0, 1, -1, 1, -1]))
    delta[0] *= 3.0
    fit = B.rate_fit(n, delta)
    assert fit.dropped == (4,)
    assert fit.slope == pytest.approx(-1.0, abs=0.01)


def test_verify_bound_rates(uniform, exponential):
    sym = B.verify_bound(B.Experiment([uniform], [4, 8, 16, 32, 64], mode="symmetric"))
    gen = B.verify_bound(B.Experiment([exponential], [4, 8, 16, 32, 64]))
    assert sym.rate_slope == pytest.approx(fixture("rate_uniform"), abs=0.02)
    assert gen.rate_slope == pytest.approx(fixture("rate_exponential"), abs=0.02)
    assert sym.rate_slope <= gen.rate_slope + 0.25
    for rec in sym.records:
        name = f"delta_uniform_n{rec.n}"
        assert rec.delta_n == pytest.approx(fixture(name), abs=fixture_tolerance(name))
    assert not sym.failures


def test_verify_bound_gaussian_is_discretization_only(gauss1):
    rep = B.verify_bound(B.Experiment([gauss1], [4, 16, 64], mode="symmetric"))
    assert all(r.delta_n <= 1e-7 for r in rep.records)


def test_verify_bound_records_window_errors(strip):
    # n = 4 of the jump law needs a wider window than the default grid
    rep = B.verify_bound(B.Experiment([strip], [4], mode="symmetric"))
    assert rep.records[0].error is not None
    assert rep.failures


def test_corollary_preconditions(strip):
    with pytest.raises(PreconditionError):
        B.corollary12_check(B.Experiment([D.make_uniform_interval(2.0)], [4, 8]))
    with pytest.raises(PreconditionError):
        B.corollary12_check(B.Experiment([strip], [8], mode="symmetric"))


def test_corollary_uniform(uniform):
    exp = B.Experiment([uniform], [4, 8, 16, 32, 64], mode="symmetric")
    rec = B.corollary12_check(exp)
    assert rec.caps_ok
    assert rec.beta3 <= 3 and rec.beta4 <= 12
    assert rec.stability <= 0.2


def test_chain_holds_on_fixture_grid():
    pts = B.chain_check()
    assert len(pts) == 2 * len(B.fixture_grid())
    assert all(p.ok for p in pts)
