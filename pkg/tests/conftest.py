from __future__ import annotations

import random
from fractions import Fraction

import pytest

from nmforge.scenario import bundled_scenario


@pytest.fixture(scope="session")
def canon():
    return bundled_scenario("canonical")


@pytest.fixture(scope="session")
def canon_null():
    return bundled_scenario("canonical-null")


@pytest.fixture
def rng():
    return random.Random(12345)


def fr(*xs):
    return tuple(Fraction(x) for x in xs)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
