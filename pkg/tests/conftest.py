import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from acceptance_report import REPORT  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(REPORT):
        terminalreporter.write_line(REPORT[number])


@pytest.fixture(scope="session")
def default_campaign():
    from uavemu.config import CampaignConfig
    from uavemu.pipeline import run_campaign

    return run_campaign(CampaignConfig())
