import numpy as np
import pytest

from support import PRINTED_STEP1


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def printed_step1():
    return PRINTED_STEP1


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criteria lines (PASS/FAIL), in criterion order."""
    import sys

    results = next(
        (m.RESULTS for name, m in list(sys.modules.items()) if name.endswith("test_acceptance") and hasattr(m, "RESULTS")),
        None,
    )
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
