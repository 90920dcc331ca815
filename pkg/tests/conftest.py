import pytest
from hypothesis import HealthCheck, settings

from dirichlet_heat.precision import DEFAULT_BITS, set_bits

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _reset_precision():
    set_bits(DEFAULT_BITS)
    yield
    set_bits(DEFAULT_BITS)


ACCEPTANCE_LINES = []


def record_criterion(tag, passed, detail):
    """Store one acceptance line; printed again in the terminal summary."""
    line = f"{tag}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
