"""Acceptance criteria 1-13 at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed together in the
terminal summary.  Criterion 13 asks for a finite/divergent exponent
threshold that is stable across refinement; for the (1, 2) power map the
exact threshold is 0 and the sampled one decays with the grid, so that part
cannot hold.  The check runs unchanged and is marked as an expected failure.
"""

from __future__ import annotations

import pytest

from hemiglue.acceptance import CRITERIA, run_criterion

UNATTAINABLE = {13: "exact threshold is p* = 0; the sampled threshold drifts ~25% per grid doubling"}


def _params():
    for k in sorted(CRITERIA):
        marks = [pytest.mark.xfail(strict=True, reason=UNATTAINABLE[k])] if k in UNATTAINABLE else []
        yield pytest.param(k, marks=marks, id=f"criterion-{k}")


@pytest.mark.parametrize("k", list(_params()))
def test_criterion(k, acceptance_log):
    res = run_criterion(k)
    acceptance_log.append(res.line())
    print(res.line())
    assert res.passed, res.detail
