"""Acceptance ladder at pinned tolerances; one PASS/FAIL line per criterion."""
import json

import pytest

from gapcross import acceptance

import conftest


@pytest.fixture(scope="module")
def results():
    def echo(res):
        line = res.line()
        conftest.ACCEPTANCE_LINES.append(line)
        print(line, flush=True)

    return {r.number: r for r in acceptance.run_all(echo=echo)}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(results, number):
    r = results[number]
    assert r.tolerance == acceptance.TOLERANCES[number]
    assert r.passed, r.line()


def test_tampered_tolerance_fails_only_its_criterion():
    bad = {9: {"k_max": 10}}
    assert not acceptance.run_criterion(9, bad).passed
    assert acceptance.run_criterion(13, bad).passed


def test_crash_is_reported_as_failure(monkeypatch):
    def boom(tol):
        raise RuntimeError("kaput")

    monkeypatch.setitem(acceptance.CRITERIA, 13, boom)
    r = acceptance.run_criterion(13)
    assert not r.passed and "kaput" in r.summary


def test_report_is_reproducible():
    a = [r.to_dict() for r in acceptance.run_all([8, 9, 13])]
    b = [r.to_dict() for r in acceptance.run_all([8, 9, 13])]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
