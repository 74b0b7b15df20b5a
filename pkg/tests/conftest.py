import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dyngram.model import BootlegScore  # noqa: E402

# (criterion, description, passed, detail) rows filled in by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, desc, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {number}. {desc}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def toy_corpus():
    """Three single-PDF pieces with disjoint vocabularies."""
    return [
        BootlegScore(0, [11, 12, 13, 14]),
        BootlegScore(1, [21, 22, 23]),
        BootlegScore(2, [31, 32, 33, 34, 35]),
    ]
