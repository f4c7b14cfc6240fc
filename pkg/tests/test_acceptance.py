"""Acceptance criteria, one test each.

Every criterion prints a single ``PASS``/``FAIL`` line to the terminal (also
under output capture).  Run directly with ``python3 tests/test_acceptance.py``
for the bare table.
"""
import re
import time

import numpy as np
import pytest

from evolog import contour as contour_mod
from evolog.contour import choose_kappa, holomorphic_calculus
from evolog.operator_core import norm2
from evolog.selftest import CHECKS, run_checks

# (key, runtime budget in seconds or None)
CRITERIA = [
    ("AC1", 5.0),
    ("AC2", 20.0),
    ("AC3", 30.0),
    ("AC4", 10.0),
    ("AC5", None),
    ("AC6", 60.0),
    ("AC7", None),
    ("AC8", None),
    ("AC9", None),
]
FULL_BUDGET = 120.0


def _line(key, passed, detail):
    return f"{'PASS' if passed else 'FAIL'}  {key:<5} {detail}"


def _emit(capsys, text):
    with capsys.disabled():
        print("\n" + text)


@pytest.mark.parametrize("key, budget", CRITERIA, ids=[k for k, _ in CRITERIA])
def test_criterion(capsys, key, budget):
    (res,) = run_checks(0, keys={key})
    within = budget is None or res.seconds < budget
    detail = f"{res.title}: {res.detail}"
    if budget is not None:
        detail += f" (budget {budget:g}s)"
    _emit(capsys, _line(key, res.passed and within, detail))
    assert res.passed, res.detail
    assert within, f"{key} took {res.seconds:.2f}s, budget {budget}s"


def _stable(results):
    # everything except wall-clock timings must repeat exactly
    return [(r.key, r.passed, re.sub(r"\d+\.\d+s\b", "", r.detail)) for r in results]


@pytest.fixture(scope="module")
def full_runs():
    t0 = time.perf_counter()
    first = run_checks(0)
    elapsed = time.perf_counter() - t0
    return first, elapsed, run_checks(0), run_checks(1)


def test_selftest_gate(capsys, full_runs):
    first, elapsed, again, other_seed = full_runs
    all_pass = all(r.passed for r in first)
    same = _stable(first) == _stable(again)
    seed_stable = [r.passed for r in first] == [r.passed for r in other_seed]
    ok = all_pass and same and seed_stable and elapsed <= FULL_BUDGET
    _emit(capsys, _line("AC10", ok,
                        f"full selftest: {sum(r.passed for r in first)}/{len(first)} pass, "
                        f"repeatable={same}, seed-stable={seed_stable}, {elapsed:.1f}s "
                        f"(budget {FULL_BUDGET:g}s)"))
    assert all_pass, [r.key for r in first if not r.passed]
    assert same
    assert seed_stable
    assert elapsed <= FULL_BUDGET
    assert {k for k, _, _ in CHECKS} == {r.key for r in first}


def test_selftest_detects_quadrature_mutation(capsys, monkeypatch):
    rng = np.random.default_rng(0)
    A = (rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))) / 4
    cert = choose_kappa(A)
    B = A + cert.kappa * np.eye(8)
    monkeypatch.setattr(contour_mod, "QUADRATURE_SIGN", -1.0)
    err = norm2(holomorphic_calculus(lambda z: np.ones_like(z), B, cert.contour) - np.eye(8))
    monkeypatch.undo()
    results = {r.key: r for r in run_checks(0, keys={"AC1", "INV-cauchy"}, mutation="quadrature_sign")}
    caught = err > 1 and not results["AC1"].passed and not results["INV-cauchy"].passed
    assert contour_mod.QUADRATURE_SIGN == 1.0
    _emit(capsys, _line("AC10m", caught,
                        f"sign-flip mutation: f=1 error {err:.2f} (> 1 required), "
                        f"AC1 {'FAIL' if not results['AC1'].passed else 'PASS'}, "
                        f"INV-cauchy {'FAIL' if not results['INV-cauchy'].passed else 'PASS'}"))
    assert caught


if __name__ == "__main__":
    for r in run_checks(0, keys={k for k, _ in CRITERIA}):
        print(_line(r.key, r.passed, f"{r.title}: {r.detail}"))
