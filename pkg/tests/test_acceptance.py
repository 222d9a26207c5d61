"""Acceptance criteria at their stated tolerances, one pass/fail line each.

Runs in budget mode (the smaller grids documented per criterion).  Also
usable as a script: ``python3 tests/test_acceptance.py [--full]``.
"""
import sys

import pytest

from imcflow.suites import CRITERIA

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # running as a script from elsewhere
    ACCEPTANCE_LINES = []


@pytest.mark.slow
@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.__name__)
def test_criterion(criterion):
    result = criterion(True)
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, line


if __name__ == "__main__":
    budget = "--full" not in sys.argv[1:]
    results = [c(budget) for c in CRITERIA]
    for r in results:
        print(r.line(), flush=True)
    sys.exit(0 if all(r.passed for r in results) else 1)
