import mpmath
import numpy as np
import pytest

from birthgrowth import Box, FiniteDiscrete, ModelSpec, PointMass, TimeIntensity

LEBESGUE = TimeIntensity.lebesgue_measure()


@pytest.fixture
def ref_spec():
    """d = 1, Lebesgue births, unit speed, a = 1, W = [0, 1]."""
    return ModelSpec(1, LEBESGUE, 1.0, Box((1.0,)), PointMass(1.0))


@pytest.fixture
def two_point_spec():
    return ModelSpec(1, LEBESGUE, 1.0, Box((1.0,)), FiniteDiscrete((1.0, 3.0), (0.5, 0.5)))


@pytest.fixture(autouse=True)
def mpmath_precision():
    """Quadrature oracles run at 40 digits; the global setting is restored afterwards."""
    with mpmath.workdps(40):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(8675309)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash[ACCEPTANCE_LINES]

    def emit(criterion, passed, detail):
        line = f"[C{criterion}] {'PASS' if passed else 'FAIL'}: {detail}"
        lines.append(line)
        print(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s[2:s.index("]")])):
            terminalreporter.write_line(line)
