import numpy as np
import pytest
from hypothesis import settings

from srumcc.trellis import CodeSpec

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SMALL_CODES = ["conv:[7,5]o:k=6", "conv:[7,5]o:k=6:tb", "conv:[27,31]o:k=6:tb", "rm84x1"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tbcc32():
    return CodeSpec.parse("conv:[27,31]o:k=32:tb")


# one line per acceptance criterion, echoed at the end of the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
