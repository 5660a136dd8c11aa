"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python3 tests/test_acceptance.py``.
"""

import filecmp
import json

import pytest

from dwkpilot import scenario as sc

RESULTS = []
STANDARD = sc.ScenarioConfig(kind="invariants")


def record(label, checks):
    ok = all(c.passed for c in checks)
    worst = max(checks, key=lambda c: (not c.passed, c.value / c.tolerance if c.tolerance else c.value))
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {label}  [{worst.name}: {worst.value:.3e}, tol {worst.tolerance:.1e}]")
    return ok


def _named(checks, *prefixes):
    return [c for c in checks if c.name.startswith(prefixes)]


@pytest.fixture(scope="module")
def profile():
    return sc.standard_profile(sc.ScenarioConfig(kind="quantum"))


@pytest.fixture(scope="module")
def riesz_run():
    return sc.riesz_checks(sc.ScenarioConfig(kind="riesz"))[0]


@pytest.fixture(scope="module")
def equivariance_runs(tmp_path_factory):
    out = []
    for workers in (1, 4):
        d = tmp_path_factory.mktemp(f"equiv_w{workers}")
        rep = sc.run_scenario(sc.ScenarioConfig(kind="equivariance", workers=workers), d)
        out.append((rep, d))
    return out


def test_clifford_identities():
    assert record("Clifford identities exact", [sc.clifford_check()])


def test_dual_path_riesz(riesz_run):
    assert record("dual-path Riesz oracle, eigen-relations, inverse",
                  _named(riesz_run, "Riesz tensor", "T u", "T e", "T T^-1"))


def test_dominant_energy_condition():
    assert record("dominant energy condition over 1e5 causal vectors", [sc.dec_check(STANDARD)])


def test_quantum_oracle(profile):
    checks, _ = sc.quantum_checks(sc.ScenarioConfig(kind="quantum"), profile)
    assert record("Crank-Nicolson vs closed-form Gaussian", checks)


def test_kanatchikov_and_variational_residuals():
    assert record("Kanatchikov and variational residuals", sc.kanatchikov_checks(STANDARD))


def test_conservation_law():
    checks = sc.conservation_check(STANDARD)
    coarse = sc.conservation_check(STANDARD, lam=STANDARD.lam)
    ok = record("Riesz conservation law, second-order refinement", checks)
    RESULTS.append(f"info  conservation residual at lambda={STANDARD.lam:g}: {coarse[0].value:.3e} "
                   f"(slope check {'ok' if coarse[1].passed else 'off'})")
    assert ok


def test_classical_limit():
    checks, _ = sc.limit_sweep_checks(sc.ScenarioConfig(kind="limit-sweep"))
    assert record("classical limit over lambda in {0.4, 0.2, 0.1, 0.05}", checks)


def test_guiding_equivariance(equivariance_runs):
    rep, _ = equivariance_runs[0]
    assert record("Monte Carlo equivariance, KS <= 0.01", rep.checks)


def test_classical_cross_check():
    checks, _ = sc.classical_checks(sc.ScenarioConfig(kind="classical"))
    assert record("classical oscillator guiding and mass invariance", checks)


def test_x_construction(riesz_run):
    assert record("X from a cut-off plane wave", _named(riesz_run, "X-hat", "integral", "X-tilde", "uncut"))


def test_varrho_inequality():
    assert record("varrho >= rho with equality at X-hat = u", sc.varrho_check(STANDARD))


def test_locality():
    assert record("locality of the field beable (bitwise)", sc.locality_check(STANDARD))


def test_determinism(equivariance_runs):
    (r1, d1), (r4, d4) = equivariance_runs
    same = filecmp.cmp(d1 / "equivariance.csv", d4 / "equivariance.csv", shallow=False)
    ks1 = json.loads((d1 / "report.json").read_text())["checks"]
    check = sc.Check("equivariance CSV differs between 1 and 4 workers (1 = yes)", float(not same), 0.0, same,
                     f"{len(ks1)} checks")
    assert record("byte-identical equivariance CSV across worker counts", [check])


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
