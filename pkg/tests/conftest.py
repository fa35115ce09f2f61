import os
from pathlib import Path

import pytest

from qrswave.wfdb_io import read_record

HERE = Path(__file__).parent
DATA = HERE / "data"
REPO = HERE.parent

ACCEPTANCE_LINES: list[str] = []


def mitdb_dir() -> Path:
    return Path(os.environ.get("QRSWAVE_MITDB", REPO / "data" / "mitdb"))


@pytest.fixture(scope="session")
def record100():
    return read_record(DATA / "100")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
