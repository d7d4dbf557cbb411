import sys
from pathlib import Path

import pytest

from em1real.syntax import load_prelude

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

ACCEPTANCE_RESULTS: dict = {}

# the evaluator raises the limit on first use; do it up front so hypothesis sees no change
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))


@pytest.fixture(scope="session")
def env():
    return load_prelude()


@pytest.fixture(scope="session")
def corpus():
    return CORPUS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        name, ok, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
