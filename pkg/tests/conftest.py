from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from quadtwist.arith import Discriminant

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

NON_SQUARES = [2, 3, 5, -1, -3, Fraction(2, 3), Fraction(-7, 5)]


def rationals(bound: int = 50) -> st.SearchStrategy[Fraction]:
    return st.fractions(min_value=-bound, max_value=bound, max_denominator=bound)


@st.composite
def quad_elems(draw, K: Discriminant, bound: int = 50):
    return K(draw(rationals(bound)), draw(rationals(bound)))


@pytest.fixture
def K2() -> Discriminant:
    return Discriminant(2)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        marker = getattr(report, "criterion", None)
        if marker is not None:
            _CRITERIA[marker] = (report.outcome == "passed", report.duration)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args


_CRITERIA: dict[tuple[int, str], tuple[bool, float]] = {}


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for (number, label), (ok, duration) in sorted(_CRITERIA.items()):
        terminalreporter.write_line(f"criterion {number} {'PASS' if ok else 'FAIL'} {label} ({duration:.2f}s)")
