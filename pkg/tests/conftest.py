import re

import pytest

from lscdsim.models import GaussianPair

_acceptance: list[tuple[int, str, str]] = []


@pytest.fixture(scope="session")
def gauss() -> GaussianPair:
    return GaussianPair(0.0, 2.0, 1.0)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    detail = "; ".join(str(v) for k, v in report.user_properties if k == "detail")
    _acceptance.append((int(m.group(1)), "PASS" if report.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, detail in sorted(_acceptance):
        terminalreporter.write_line(f"criterion {num}: {status}  {detail}")
