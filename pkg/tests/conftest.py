"""Shared fixtures and the acceptance-criteria summary hook."""

from __future__ import annotations

import random

import numpy as np
import pytest

from sledge.canvas import Canvas

_acceptance_docs: dict[str, str] = {}
_acceptance_reports: list = []


def pytest_collection_modifyitems(items):
    for item in items:
        if "test_acceptance" in item.nodeid:
            doc = (item.function.__doc__ or "").strip().splitlines()
            _acceptance_docs[item.nodeid] = doc[0] if doc else item.name


def pytest_runtest_logreport(report):
    if report.when == "call" and report.nodeid in _acceptance_docs:
        _acceptance_reports.append(report)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_reports:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for report in _acceptance_reports:
        status = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(f"{status}  {_acceptance_docs[report.nodeid]}")


def random_rgba(rng: random.Random, width: int, height: int) -> np.ndarray:
    """Random RGBA pixels with the full 0-255 range in every channel."""
    data = rng.randbytes(height * width * 4)
    return np.frombuffer(data, dtype=np.uint8).reshape(height, width, 4).copy()


def random_canvas(rng: random.Random, width: int, height: int) -> Canvas:
    return Canvas(random_rgba(rng, width, height))


def random_mask_array(rng: random.Random, width: int, height: int) -> np.ndarray:
    data = np.frombuffer(rng.randbytes(height * width), dtype=np.uint8)
    return (data & 1).reshape(height, width).copy()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0FFEE)
