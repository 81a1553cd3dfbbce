from pathlib import Path

import pytest

from endowrist_bench.controller import EmulatorConfig
from endowrist_bench.fixtures import EMULATOR_FILE, data_path, fixture_calibration
from endowrist_bench.stereo import default_rig

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def calib():
    return fixture_calibration()[0]


@pytest.fixture(scope="session")
def report():
    return fixture_calibration()[1]


@pytest.fixture(scope="session")
def rig():
    return default_rig()


@pytest.fixture(scope="session")
def repro_config():
    return EmulatorConfig.load(data_path(EMULATOR_FILE))


@pytest.fixture
def golden():
    return GOLDEN


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(n, passed, detail)."""

    def record(n, passed, detail):
        _CRITERIA.append((n, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n, passed, detail in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
