from __future__ import annotations

import random
from collections import defaultdict
from pathlib import Path

import pytest

from privcache.model import InstanceParams, Library

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

_criteria: dict[int, dict] = defaultdict(lambda: {"title": "", "outcomes": []})


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    entry = _criteria[number]
    entry["title"] = title
    entry["outcomes"].append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "PASS" if all(entry["outcomes"]) else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{verdict}] {entry['title']} ({len(entry['outcomes'])} tests)")


@pytest.fixture
def example_params() -> InstanceParams:
    return InstanceParams(K=3, L=2, N=3, B=6)


@pytest.fixture
def example_library(example_params) -> Library:
    return Library.random(example_params.N, example_params.B, random.Random(11))
