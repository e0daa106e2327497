import numpy as np
import pytest
from hypothesis import settings

from sgspin import PhysParams

settings.register_profile("sgspin", max_examples=40, deadline=None)
settings.load_profile("sgspin")


@pytest.fixture(scope="session")
def p():
    return PhysParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "ACCEPTANCE_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
