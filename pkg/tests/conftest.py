import re
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"
BIF_DIR = DATA / "bif"

_criteria = {}


@pytest.fixture
def bif_path():
    def get(name):
        return BIF_DIR / f"{name}.bif.gz"
    return get


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    detail = dict(report.user_properties).get("detail", "")
    _criteria[int(m.group(1))] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_criteria):
        outcome, detail = _criteria[num]
        status = "PASS" if outcome == "passed" else "FAIL"
        tr.write_line(f"criterion {num}: {status}  {detail}")
