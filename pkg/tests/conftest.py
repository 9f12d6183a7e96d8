"""Shared fixtures and the acceptance summary.

Tests tagged ``@pytest.mark.criterion(n, "title")`` are grouped; after the
run one PASS/FAIL line is printed per criterion. A criterion passes when all
of its tests passed (and at least one ran).
"""

import time

import pytest

SUITE_BUDGET_S = 300.0

_criteria: dict[int, dict] = {}
_start = [0.0]


def pytest_sessionstart(session):
    _start[0] = time.perf_counter()


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is None:
            continue
        number, title = mark.args
        entry = _criteria.setdefault(number, {"title": title, "nodes": set(), "failed": [], "passed": 0})
        entry["nodes"].add(item.nodeid)


def pytest_runtest_logreport(report):
    for entry in _criteria.values():
        if report.nodeid not in entry["nodes"]:
            continue
        if report.failed:
            entry["failed"].append(report.nodeid)
        elif report.when == "call" and report.passed:
            entry["passed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    elapsed = time.perf_counter() - _start[0]
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = entry["passed"] > 0 and not entry["failed"]
        note = ""
        if number == 11:
            ok = ok and elapsed < SUITE_BUDGET_S
            note = f" (suite time {elapsed:.1f} s, budget {SUITE_BUDGET_S:.0f} s)"
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {entry['title']}{note}"
        tr.write_line(line)
        for nodeid in entry["failed"]:
            tr.write_line(f"    failed: {nodeid}")
