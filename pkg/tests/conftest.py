from __future__ import annotations

import re

import numpy as np
import pytest

from cqavwc import coding

_ACCEPTANCE: dict[str, dict] = {}
_POVM_DEFECTS: list[float] = []
_ORIG_POST_INIT = coding.PovmDecoder.__post_init__


def _recording_post_init(self):
    # decoders rejected at construction are not counted
    _ORIG_POST_INIT(self)
    _POVM_DEFECTS.append(self.completeness_defect())


def pytest_configure(config):
    coding.PovmDecoder.__post_init__ = _recording_post_init


def pytest_unconfigure(config):
    coding.PovmDecoder.__post_init__ = _ORIG_POST_INIT


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_(a\d)_", report.nodeid)
    if not m:
        return
    key = m.group(1).upper()
    entry = _ACCEPTANCE.setdefault(key, {"outcome": "passed", "duration": 0.0})
    entry["duration"] += report.duration
    if report.failed:
        entry["outcome"] = "failed"
    elif report.skipped and entry["outcome"] == "passed":
        entry["outcome"] = "skipped"


def pytest_sessionfinish(session, exitstatus):
    if any(d > coding.POVM_TOL for d in _POVM_DEFECTS):
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE and not _POVM_DEFECTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k[1:])):
        entry = _ACCEPTANCE[key]
        word = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[entry["outcome"]]
        tr.write_line(f"{key} {word}  ({entry['duration']:.1f} s)")
    if _POVM_DEFECTS:
        worst = max(_POVM_DEFECTS)
        word = "PASS" if worst <= coding.POVM_TOL else "FAIL"
        tr.write_line(
            f"A6 POVM completeness over the whole run: {word} "
            f"({len(_POVM_DEFECTS)} decoders, worst defect {worst:.2e})"
        )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
