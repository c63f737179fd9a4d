from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import settings

FIXTURES = Path(__file__).parent / "fixtures"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_acceptance: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(code, title): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_acceptance", None)
    if marker is None:
        return
    code, title = marker
    if report.when == "call" or report.outcome != "passed":
        outcome = "PASS" if report.passed else "FAIL"
        if code not in _acceptance or outcome == "FAIL":
            _acceptance[code] = (outcome, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result()._acceptance = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for code in sorted(_acceptance, key=lambda c: int(c.lstrip("AC"))):
        outcome, title = _acceptance[code]
        terminalreporter.write_line(f"{code} {outcome}: {title}")


@pytest.fixture
def bounded_reader_manifest() -> Path:
    return FIXTURES / "bounded_reader" / "manifest.json"
