import math

import pytest

from cczsim.hilbert import CompositeSpace
from cczsim.protocol import ProtocolConfig

TWO_PI = 2 * math.pi
G_DEFAULT = TWO_PI * 220e6

_acceptance_results: list[tuple[str, str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion reported in the summary")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = getattr(report, "acceptance_label", None)
    if label is not None:
        _acceptance_results.append((label, report.outcome.upper(), report.nodeid))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance_label = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome, _ in _acceptance_results:
        terminalreporter.write_line(f"{'PASS' if outcome == 'PASSED' else 'FAIL'}  {label}")


@pytest.fixture
def space2():
    return CompositeSpace(n_max=2)


@pytest.fixture
def space3():
    return CompositeSpace(n_max=3)


@pytest.fixture
def default_cfg():
    return ProtocolConfig(G_DEFAULT, G_DEFAULT, G_DEFAULT, 10 * G_DEFAULT)
