import math

import pytest

from llt_lab import fixtures as FX

ALL = {f.name: f for f in FX._fixtures()}


def test_frozen_file_covers_every_fixture():
    assert set(FX.load_fixtures()) == set(ALL)


@pytest.mark.parametrize("name", sorted(ALL))
def test_oracle_reproduces_frozen_value(name):
    assert math.isclose(float(ALL[name].oracle()), FX.fixture(name), rel_tol=1e-9, abs_tol=1e-13)


@pytest.mark.parametrize("name", sorted(ALL))
def test_pipeline_matches_oracle(name):
    f = ALL[name]
    assert abs(float(f.pipeline()) - FX.fixture(name)) <= f.tolerance


def test_verify_fixtures_oracles_only():
    ok, lines = FX.verify_fixtures(pipeline=False)
    assert ok
    assert len(lines) == len(ALL)
