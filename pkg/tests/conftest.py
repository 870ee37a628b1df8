import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from resdist.experiments import ConditionCounter, build_histograms  # noqa: E402
from resdist.histograms import A_MOD_Q, PHI_MOD_Q  # noqa: E402
from resdist.meanvalue import recipe  # noqa: E402

T12_QS = tuple(range(1, 31))
PHI_QS = (1, 3, 5, 7, 9, 11, 13, 15, 21, 25, 33, 35, 45, 63, 105)


def _requests():
    return [(A_MOD_Q, q) for q in T12_QS] + [(PHI_MOD_Q, q) for q in PHI_QS]


@pytest.fixture(scope="session")
def hist_grid():
    """One sieve pass per x in the standard grid, every histogram the suite needs."""
    out = {}
    for x in (10**4, 10**5, 10**6, 10**7):
        extra = []
        if x == 10**7:
            y, z = recipe(x, 0.5)
            extra = [ConditionCounter(y, z, 5)]
        hists = build_histograms(x, _requests(), extra=extra)
        out[x] = hists
        if extra:
            out["conditions_1e7"] = extra[0]
    return out


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
