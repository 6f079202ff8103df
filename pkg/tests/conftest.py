import numpy as np
import pytest
from hypothesis import settings

from mpalloc.problem import FormatSet, ProblemInstance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_instance(gains, demands_units=None, caps=None, Q=4, eta_step=1.0):
    """Instance with B = N0 = 1, so powers are SNR(q) / gain and rates are in eta_step units."""
    gains = np.atleast_2d(np.asarray(gains, dtype=float))
    N = gains.shape[0]
    demands = np.zeros(N) if demands_units is None else np.asarray(demands_units, dtype=float) * eta_step
    caps = np.full(N, np.inf) if caps is None else np.asarray(caps, dtype=float)
    return ProblemInstance(gains, demands, caps, FormatSet(Q, eta_step), 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        import test_acceptance
    except ImportError:
        return
    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)
