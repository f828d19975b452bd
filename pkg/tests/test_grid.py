import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from llt_lab import distributions as D
from llt_lab import grid as G
from llt_lab.errors import InsufficientWindowError, ParameterError, WindowError
from llt_lab.fixtures import fixture


def test_gridspec_validation(monkeypatch):
    with pytest.raises(ParameterError):
        G.GridSpec(1, 10.0, 1000)
    with pytest.raises(ParameterError):
        G.GridSpec(4, 10.0, 64)
    with pytest.raises(ParameterError):
        G.GridSpec(1, -1.0, 64)
    monkeypatch.setenv(G.MAX_GRID_BYTES_ENV, str(16 * 64 ** 2 - 1))
    with pytest.raises(ParameterError):
        G.GridSpec(2, 10.0, 64)
    G.GridSpec(1, 10.0, 64)


def test_paired_axes():
    spec = G.GridSpec(1, 12.0, 4096)
    x, t = spec.x_axis(), spec.t_axis()
    assert x[0] == -12.0 and x[2048] == 0.0
    assert t[2048] == 0.0
    assert spec.freq_step * spec.step * spec.points_per_axis == pytest.approx(2 * math.pi)
    d = G.GridSpec.default(2, 1.0)
    assert d.half_width == pytest.approx(12 * math.sqrt(2)) and d.points_per_axis == 512


def test_uniform_n2_closed_form(uniform):
    spec = G.GridSpec(1, 12.0, 4096)
    cf = G.product_cf([uniform], 2, spec)
    t = spec.t_axis()
    u = math.sqrt(3) * t / math.sqrt(2)
    expected = np.where(u == 0, 1.0, np.sin(u) / np.where(u == 0, 1, u)) ** 2
    assert np.max(np.abs(cf.values - expected)) < 1e-8
    assert cf.hermitian_defect() < 1e-14
    assert cf.value_at_zero() == pytest.approx(1.0)


def test_transformed_branch_matches_analytic(uniform):
    spec = G.GridSpec(1, 12.0, 4096)
    a = G.cf_on_grid(uniform, spec, method="analytic")
    q = G.cf_on_grid(uniform, spec, method="quadrature")
    keep = np.abs(spec.t_axis()) <= 20
    assert np.max(np.abs(a.values[keep] - q.values[keep])) < 1e-6
    assert q.source == "transformed"


def test_uniform_density_inversion(uniform_pm1):
    spec = G.GridSpec(1, 4.0, 1 << 14)
    dens = G.invert_to_density(G.cf_on_grid(uniform_pm1, spec), strict=False)
    x = spec.x_axis()
    interior = np.abs(x) < 1 - 12 * spec.step * 8
    assert np.max(np.abs(dens.values[interior] - 0.5)) < 2e-3


def test_triangle_peak_and_distance(uniform):
    spec = G.GridSpec(1, 4.0, 1 << 20)
    dens = G.invert_to_density(G.product_cf([uniform], 2, spec), strict=False)
    assert dens.max_refined()[0] == pytest.approx(fixture("triangle_peak_n2"), abs=1e-6)
    sd = G.sup_distance(dens, G.std_normal_density)
    assert sd.value == pytest.approx(fixture("delta_triangle_n2"), abs=2e-6)


def test_gaussian_is_fixed_point(gauss1):
    spec = G.GridSpec.default(1)
    for n in (1, 4, 16):
        dens = G.density_of_normalized_sum([gauss1], n, spec)
        assert G.sup_distance(dens, G.std_normal_density).value < 1e-12


def test_insufficient_window_raises(uniform):
    spec = G.GridSpec(1, 200.0, 256)
    with pytest.raises(InsufficientWindowError) as exc:
        G.density_of_normalized_sum([uniform], 2, spec)
    assert exc.value.tail > exc.value.tolerance


def test_required_window(uniform):
    spec = G.GridSpec(1, 12.0, 256)
    with pytest.raises(WindowError):
        G.cf_on_grid(uniform, spec, required_window=1e4)


def test_dimension_mismatch(disk):
    with pytest.raises(ParameterError):
        G.cf_on_grid(disk, G.GridSpec(1, 12.0, 256))


def test_binary_roundtrip(tmp_path, uniform):
    spec = G.GridSpec(1, 12.0, 1024)
    cf = G.product_cf([uniform], 8, spec)
    dens = G.invert_to_density(cf)
    for obj in (cf, dens):
        path = tmp_path / "g.bin"
        G.save_binary(obj, path)
        back = G.load_binary(path)
        assert back.spec == spec
        assert np.array_equal(back.values, obj.values)


def test_csv_output(uniform):
    spec = G.GridSpec(1, 12.0, 64)
    dens = G.invert_to_density(G.product_cf([uniform], 16, spec), strict=False)
    text = dens.to_csv()
    lines = text.strip().splitlines()
    assert len(lines) == 65
    buf = io.StringIO()
    dens.to_csv(buf)
    assert buf.getvalue() == text


def test_convolution_quadrature(uniform_pm1):
    assert G.convolution_density_1d(uniform_pm1, uniform_pm1, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert G.convolution_density_1d(uniform_pm1, uniform_pm1, 1.0) == pytest.approx(0.25, abs=1e-12)
    m, loc = G.max_of_convolution_1d(uniform_pm1, uniform_pm1, 0.1, 0.5)
    assert m == pytest.approx(0.5, abs=1e-9)


@given(n=st.sampled_from([2, 3, 5, 8, 13]))
def test_mass_and_symmetry(n):
    u = D.make_uniform_interval(1.0)
    spec = G.GridSpec(1, 12.0, 4096)
    dens = G.invert_to_density(G.product_cf([u], n, spec), strict=False)
    assert dens.mass() == pytest.approx(1.0, abs=1e-6)
    assert np.allclose(dens.values[1:], dens.values[1:][::-1], atol=1e-12)


@given(n=st.integers(2, 40))
def test_cf_product_modulus(n):
    e = D.make_asymmetric_family("centered-exponential")
    spec = G.GridSpec(1, 12.0, 1024)
    cf = G.product_cf([e], n, spec)
    assert np.all(np.abs(cf.values) <= 1 + 1e-12)
    assert cf.hermitian_defect() < 1e-12
