"""Acceptance criteria 1-9; each prints one PASS/FAIL line."""

import pytest

from timeop.acceptance import CRITERIA, evaluate

RESULTS: list = []


@pytest.mark.parametrize("number", [c.number for c in CRITERIA], ids=lambda n: f"criterion_{n}")
def test_criterion(number):
    res = evaluate(number)
    line = res.line()
    RESULTS.append(line)
    print(line)
    assert res.passed, line
