from __future__ import annotations

from decimal import Decimal
from pathlib import Path

import pytest

from dqctx.dqx import load_source_data, load_system
from dqctx.relmodel import DateTag, Time

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
RUNNING = FIXTURES / "running_example"
APPENDIX = FIXTURES / "appendix"


def row(patient, value, time, date):
    """A TempNoon tuple from its printed form."""
    return (patient, Decimal(value), Time.parse(time), DateTag(date))


# the running example's readings, and the ones that pass assessment
READINGS = {
    row("Tom Waits", "38.5", "11:45", "Sep/5"),
    row("Tom Waits", "38.2", "12:10", "Sep/5"),
    row("Tom Waits", "38.1", "11:50", "Sep/6"),
    row("Tom Waits", "38.0", "12:15", "Sep/6"),
    row("Tom Waits", "37.9", "12:15", "Sep/7"),
}
CLEAN_READINGS = {
    row("Tom Waits", "38.5", "11:45", "Sep/5"),
    row("Tom Waits", "38.0", "12:15", "Sep/6"),
    row("Tom Waits", "37.9", "12:15", "Sep/7"),
}


@pytest.fixture(scope="session")
def running():
    """(system, d) for the running example with all contextual tables."""
    system = load_system(RUNNING / "system.dqx", RUNNING / "data")
    return system, load_source_data(system, RUNNING / "data")


@pytest.fixture(scope="session")
def running_without_m():
    system = load_system(RUNNING / "system.dqx", RUNNING / "data_without_m")
    return system, load_source_data(system, RUNNING / "data_without_m")


@pytest.fixture()
def appendix():
    # function scope: the registry memo and call log must start empty
    system = load_system(APPENDIX / "system.dqx", APPENDIX / "data")
    return system, load_source_data(system, APPENDIX / "data")


@pytest.fixture(scope="session")
def running_query():
    from dqctx.datalog.parser import parse_query
    return parse_query((RUNNING / "query.dl").read_text())


# -- acceptance summary ------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    failed = report.failed
    if report.when == "call" or failed:
        prev = _CRITERIA.get(number, ("PASS", title))[0]
        _CRITERIA[number] = ("FAIL" if failed or prev == "FAIL" else "PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"{status}  AC{number}  {title}")
