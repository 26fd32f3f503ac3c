import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "vqoco", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("vqoco")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def grid_argmin(f, lo, hi, step):
    """Dense 1-D grid minimiser, used as an independent oracle."""
    xs = np.arange(lo, hi + step / 2, step)
    vals = np.array([f(x) for x in xs])
    i = int(np.argmin(vals))
    return xs[i], vals[i]


ACCEPTANCE_LINES = {}


@pytest.fixture
def record():
    """record(criterion, ok, detail): log one pass/fail line and return ok."""

    def _record(criterion, ok, detail):
        ACCEPTANCE_LINES[criterion] = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
