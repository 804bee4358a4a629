import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid:
                continue
            if rep.when != "call" and outcome == "passed":
                continue
            name = nodeid.split("::test_criterion_", 1)[1]
            num, _, label = name.partition("_")
            rows.append((int(num), "PASS" if outcome == "passed" else "FAIL", label))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, status, label in sorted(set(rows)):
        terminalreporter.write_line(f"criterion {num:2d} {status}: {label.replace('_', ' ')}")
