"""Shared fixtures and the end-of-run acceptance summary.

The acceptance tests in test_acceptance.py each record a one-line detail
string through pytest's record_property. After the run, the hook below
prints one PASS/FAIL line per acceptance check with that detail, so the
verdicts are visible even though pytest captures stdout from the tests
themselves.
"""

import numpy as np
import pytest

from planemix.datasets import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_blobs():
    """Three well-separated gaussian blobs, 60 points, for fast fits."""
    gen = np.random.default_rng(7)
    centers = np.array([[-4.0, 0.0], [4.0, 0.0], [0.0, 6.0]])
    feats = np.vstack([c + 0.4 * gen.standard_normal((20, 2)) for c in centers])
    labels = np.repeat(np.arange(3), 20)
    order = gen.permutation(60)
    return Dataset(feats[order], labels[order], 3)


def _acceptance_label(nodeid: str) -> str:
    name = nodeid.split("::")[-1]
    return name.removeprefix("test_").replace("_", " ")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    del exitstatus, config
    lines = []
    for outcome, verdict in (("passed", "PASS"), ("failed", "FAIL"),
                             ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" not in rep.nodeid:
                continue
            if rep.when not in ("call", "setup"):
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            detail = dict(getattr(rep, "user_properties", [])).get("detail", "")
            lineno = (rep.location[1] or 0) if rep.location else 0
            lines.append((lineno, rep.nodeid, verdict, detail))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance summary")
    for _, nodeid, verdict, detail in sorted(lines):
        label = _acceptance_label(nodeid)
        suffix = f"  ({detail})" if detail else ""
        terminalreporter.write_line(f"{verdict}  {label}{suffix}")
