"""Full-size acceptance run: one pass/fail line per criterion.

The lines bypass output capture, so they appear in a plain ``pytest -v`` run.
"""

import pytest

from kltcyl.acceptance import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: f"criterion_{c.number:02d}")
def test_criterion(criterion, capsys):
    res = criterion()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
    assert res.within_budget, f"criterion {res.number} took {res.elapsed:.1f}s (budget {res.budget:.0f}s)"
