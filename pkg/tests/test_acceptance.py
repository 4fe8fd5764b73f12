"""Acceptance gate: one test (and one printed PASS/FAIL line) per criterion.

Each criterion is implemented in :mod:`npslab.acceptance` with its tolerance
pinned there; this file only drives them and reports the outcome.  Expensive
fixtures (steady-solve suites, time-dependent runs) are cached inside the
acceptance module, so the order of execution does not change the cost.
"""

import pytest

from npslab import acceptance


@pytest.mark.parametrize(
    ("number", "name", "fn"),
    [(i + 1, name, fn) for i, (name, fn) in enumerate(acceptance.CRITERIA)],
    ids=[f"criterion_{i + 1:02d}_{name.replace(' ', '_')}"
         for i, (name, _) in enumerate(acceptance.CRITERIA)],
)
def test_criterion(number, name, fn, capsys):
    try:
        passed, detail = fn()
    except Exception as exc:  # an error is a failure, not a test error
        passed, detail = False, f"raised {type(exc).__name__}: {exc}"
    tag = "PASS" if passed else "FAIL"
    with capsys.disabled():
        print(f"[{tag}] criterion {number}: {name} -- {detail}")
    assert passed, f"criterion {number} ({name}): {detail}"
