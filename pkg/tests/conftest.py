"""Shared fixtures and the acceptance-criteria terminal summary.

Tests named ``test_criterion_<k>_*`` (the acceptance gate) are collected
into a per-criterion verdict table printed at the end of every run, one
line per criterion, so the gate's status is visible even inside a large
``pytest -v`` log.
"""

from __future__ import annotations

import re

import numpy as np
import pytest

from fuzzyricci import FuzzyTorus

_CRITERION_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_RESULTS: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    match = _CRITERION_RE.search(report.nodeid)
    if match:
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _RESULTS[int(match.group(1))] = (outcome, match.group(2))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        outcome, label = _RESULTS[k]
        terminalreporter.write_line(f"criterion {k} ({label.replace('_', ' ')}): {outcome}")


@pytest.fixture(scope="session")
def torus2() -> FuzzyTorus:
    return FuzzyTorus(2, 1)


@pytest.fixture(scope="session")
def torus3() -> FuzzyTorus:
    return FuzzyTorus(3, 1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)


def random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    g = random_complex(rng, n)
    return (g + g.conj().T) / 2
