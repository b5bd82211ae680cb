import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("tnbow", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("tnbow")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
