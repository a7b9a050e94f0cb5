import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("facecut", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("facecut")

ACCEPTANCE_LINES = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
