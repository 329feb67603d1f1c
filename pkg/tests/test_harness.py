from __future__ import annotations

import pytest

from nmforge.errors import UnknownSuite
from nmforge.harness import SUITE_NAMES, parse_seed_range, run_suite


def test_doob_on_canonical(canon):
    assert run_suite("doob", canon).passed


@pytest.mark.parametrize("suite", [s for s in SUITE_NAMES if s != "all"])
def test_each_suite_on_null_scenario(suite, canon_null):
    report = run_suite(suite, canon_null)
    assert report.checks
    assert report.passed, report.body_text()


def test_unknown_suite(canon):
    with pytest.raises(UnknownSuite):
        run_suite("nosuch", canon)


def test_seed_ranges():
    assert parse_seed_range("1..100") == range(1, 101)
    assert parse_seed_range("7") == range(7, 8)


def test_report_body_is_deterministic():
    a = run_suite("lifting", range(3, 6))
    b = run_suite("lifting", range(3, 6))
    assert a.body_tsv() == b.body_tsv()
    assert a.body_json() == b.body_json()
    assert a.timings.keys() == {"lifting"}


def test_report_formats(canon):
    r = run_suite("dual", canon)
    tsv = r.body_tsv().splitlines()
    assert tsv[0].split("\t") == ["suite", "instance", "check", "verdict", "witness"]
    assert len(tsv) == len(r.checks) + 1
    assert r.body_text().startswith("suite dual:")
    assert r.summary_by_suite() == {"dual": (len(r.checks), len(r.checks))}


def test_other_exponent(canon):
    assert run_suite("weakstar", canon, p=3).passed
    assert run_suite("weakstar", canon, exponent="3/2").passed
