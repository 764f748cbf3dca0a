import math

import pytest
from hypothesis import assume
from hypothesis import strategies as st

from uoi_sampling import DelayPmf, SourceModel

SLOW = SourceModel(0.05, 0.2)
FAST = SourceModel(0.7, 0.95)


@st.composite
def models(draw):
    """Valid (p, q): 0 < p <= q < 1 and p + q away from 1."""
    p = draw(st.floats(0.01, 0.95))
    q = draw(st.floats(p, 0.99))
    assume(abs(p + q - 1.0) > 1e-3)
    return SourceModel(p, q)


@st.composite
def delays(draw, max_y=12, max_atoms=3):
    ys = draw(st.lists(st.integers(1, max_y), min_size=1, max_size=max_atoms, unique=True))
    w = draw(st.lists(st.floats(0.05, 1.0), min_size=len(ys), max_size=len(ys)))
    total = math.fsum(w)
    masses = [x / total for x in w]
    masses[-1] = 1.0 - math.fsum(masses[:-1])
    return DelayPmf(tuple(zip(ys, masses)))


def entropy_oracle(x: float) -> float:
    """Plain-math binary entropy, independent of the library implementation."""
    if x in (0.0, 1.0):
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


@pytest.fixture
def slow():
    return SLOW


@pytest.fixture
def fast():
    return FAST


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by a test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and not report.failed:
        return
    number, text = marker.args
    status = "PASS" if report.passed else "FAIL"
    prev = _CRITERIA.get(number)
    if prev is None or prev[0] == "PASS":
        _CRITERIA[number] = (status, text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {text}")
