import math
import time

import pytest
from hypothesis import HealthCheck, settings

from llt_lab import distributions as D

settings.register_profile("lab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def catalog():
    return {spec.name: spec for spec in D.default_catalog()}


@pytest.fixture(scope="session")
def uniform():
    return D.make_uniform_interval(1.0)


@pytest.fixture(scope="session")
def uniform_pm1():
    # uniform on [-1, 1]
    return D.make_uniform_interval(1.0 / math.sqrt(3.0))


@pytest.fixture(scope="session")
def exponential():
    return D.make_asymmetric_family("centered-exponential", 1.0)


@pytest.fixture(scope="session")
def triangle():
    return D.make_asymmetric_family("skewed-triangle", 1.0)


@pytest.fixture(scope="session")
def gauss1():
    return D.make_gaussian(1, 1.0)


@pytest.fixture(scope="session")
def disk():
    return D.make_uniform_ball(2, 1.0)


@pytest.fixture(scope="session")
def strip():
    return D.make_unbounded_marginal_example()


@pytest.fixture(scope="session")
def product():
    return D.default_catalog()[-1]


_CRITERIA: dict = {}


class Criterion:
    """Times one acceptance criterion and records a one-line verdict."""

    def __init__(self, number: int, title: str, budget: float = None):
        self.number, self.title, self.budget = number, title, budget

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.t0
        slow = self.budget is not None and elapsed > self.budget
        ok = exc_type is None and not slow
        budget = f" / budget {self.budget:g} s" if self.budget is not None else ""
        line = f"criterion {self.number:>2d}  {'PASS' if ok else 'FAIL'}  {self.title}  " \
               f"({elapsed:.1f} s{budget})"
        if exc_type is not None:
            line += f"  -- {str(exc).splitlines()[0] if str(exc) else exc_type.__name__}"
        elif slow:
            line += "  -- over the runtime budget"
        _CRITERIA[self.number] = line
        print(line)
        if slow and exc_type is None:
            raise AssertionError(f"runtime {elapsed:.1f} s exceeds {self.budget:g} s")
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
