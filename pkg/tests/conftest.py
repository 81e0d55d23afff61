import os

import hypothesis
import numpy as np
import pytest
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

hypothesis.settings.register_profile("default", deadline=None, max_examples=50)
hypothesis.settings.register_profile("thorough", deadline=None, max_examples=500)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def matrices(n, lo=-1.0, hi=1.0):
    """Square float matrices with bounded entries."""
    return hnp.arrays(np.float64, (n, n), elements=st.floats(lo, hi, allow_nan=False, width=64))


def vectors(n, lo=-1.0, hi=1.0):
    return hnp.arrays(np.float64, (n,), elements=st.floats(lo, hi, allow_nan=False, width=64))


seeds = st.integers(0, 2 ** 32 - 1)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
