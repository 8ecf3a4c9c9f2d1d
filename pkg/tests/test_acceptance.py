"""Exit criteria, one test per check; each prints a PASS/FAIL line (run with ``-s`` to see them)."""

import pytest

from qreading import acceptance


@pytest.mark.parametrize("check", acceptance.CHECKS, ids=lambda c: c.__name__)
def test_criterion(check, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
