import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
FIXTURE_MANIFEST = ROOT / "fixtures" / "tiny" / "manifest.json"

_acceptance = []
_details = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixture_manifest():
    return FIXTURE_MANIFEST


@pytest.fixture
def detail(request):
    """Record a short measured summary shown next to the acceptance verdict."""
    def record(text):
        _details[request.node.name] = text
    return record


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        extra = f"  [{_details[name]}]" if name in _details else ""
        terminalreporter.write_line(f"{verdict:<5} {name}{extra}")
