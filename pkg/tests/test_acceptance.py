"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.

Run with ``pytest -v tests/test_acceptance.py`` (lines appear in the terminal
summary) or as a script, ``python tests/test_acceptance.py``.
"""

import time

import pytest

from dirmoments import checks

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []


def _record(idx, title, result, elapsed, limit, detail):
    ok = result.passed and elapsed < limit
    line = (idx, title, ok, f"{detail}; runtime {elapsed:.1f} s (limit {limit:g} s)")
    ACCEPTANCE_LINES.append(line)
    print(f"[{idx:2d}] {'PASS' if ok else 'FAIL'}  {title}: {line[3]}")
    return ok


def _timed(fn, *args, **kw):
    t0 = time.perf_counter()
    res = fn(*args, **kw)
    return res, time.perf_counter() - t0


def test_01_exact_polynomial_layer():
    res, dt = _timed(checks.exact_layer)
    failing = [k for k, v in res.metrics["identities"].items() if not v]
    detail = (f"w44(2) = {res.metrics['w44_at_2']['value']}, g3 = {res.metrics['g3']}, g4 = {res.metrics['g4']}, "
              f"failing: {', '.join(failing) if failing else 'none'}")
    ok = _record(1, "exact polynomial layer", res, dt, 1.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_02_comb_identity():
    res, dt = _timed(checks.sym_verify, 4, 5, 100, 0, 1e-9)
    detail = f"max relative discrepancy {res.metrics['max_discrepancy']['value']:.2e} (tol 1e-9)"
    ok = _record(2, "symmetric-function identity", res, dt, 10.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_03_g_triple_agreement():
    res, dt = _timed(checks.g_triple, 20, (2, 3, 5), 4, 4, 1, 1e-10)
    detail = f"max relative discrepancy {res.metrics['max_rel_discrepancy']['value']:.2e} (tol 1e-10)"
    ok = _record(3, "G triple agreement", res, dt, 30.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_04_dirichlet_series_vs_euler_product():
    res, dt = _timed(checks.euler_check, 10**6, (1.5, 0.8, 0.3))
    parts = [f"s={r['s']}: diff {r['rel_diff']:.1e} vs tail {r['rel_combined_tail']:.1e}" for r in res.rows]
    cl = res.metrics["closed_form_B"]
    detail = "; ".join(parts) + f"; closed form rel diff {cl['rel_diff']:.1e} (tol 1e-6)"
    ok = _record(4, "Z/B/A consistency", res, dt, 120.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_05_h_function():
    res, dt = _timed(checks.h_check, 10**4, 10**4, 1.5)
    r0 = res.rows[0]
    detail = (f"rel diff {r0['rel_diff']:.1e} vs tail {r0['rel_combined_tail']:.1e}; "
              f"residue spread {res.metrics['residue_spread']['value']:.1e} (tol 5e-2)")
    ok = _record(5, "H double series and pole probe", res, dt, 120.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_06_weight_transforms():
    res, dt = _timed(checks.weights_probe, (1e3, 1e4), 10_000, 0, 1e-3)
    m = res.metrics
    detail = (f"partition error {m['partition_of_unity']['max_error']:.1e} (tol 1e-12); "
              f"|s Phi(s) - 1| at s=1e-3 {m['phi_residue_literal']['abs_s_phi_minus_1']:.1e} (tol 1e-6), "
              f"circle residue error {m['phi_residue_contour']['abs_residue_minus_1']:.1e}; "
              f"worst omega_hat doubling ratio {m['omega_hat_decay']['worst_doubling_ratio']:.3f} (need <= 0.125)")
    ok = _record(6, "weight transforms", res, dt, 30.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_07_m0_identity():
    res, dt = _timed(checks.m0_identity, 2000.0, 0.2, 1e-4)
    detail = f"relative gap {res.metrics['relative_gap']['value']:.1e} (tol 1e-4)"
    ok = _record(7, "M0 identity", res, dt, 120.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_08_adc_desk_check():
    res, dt = _timed(checks.adc, (1e3, 1e4, 1e5), "1..10")
    rel = ", ".join(f"X={b['X']:.0e}: {b['relative']:.2e}" for b in res.metrics["boxes"])
    detail = f"{rel}; strictly decreasing {res.metrics['strictly_decreasing']}; final tol 0.1"
    ok = _record(8, "additive divisor desk check", res, dt, 600.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


@pytest.mark.slow
def test_09_moment_consistency():
    res, dt = _timed(checks.moment, (500.0, 1000.0, 2000.0), 0.2)
    rel = ", ".join(f"T={r['T']:.0f}: {r['relative_residual']:.2e} (err bar {r['error_bar'] / abs(r['direct_re']):.1e})"
                    for r in res.rows)
    trend = "; ".join(f"{t['T_from']:.0f}->{t['T_to']:.0f} rise {t['rise']:+.1e} covered {t['covered']}"
                      for t in res.metrics["trend"])
    detail = f"{rel}; {trend}; final tol 0.15"
    ok = _record(9, "moment consistency", res, dt, 1200.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


def test_10_stirling_ratio():
    res, dt = _timed(checks.stirling, (1e3, 1e4), 50, 0)
    cs = ", ".join(f"t={r['t']:.0e}: C={r['fitted_C']:.3f}" for r in res.rows)
    detail = f"{cs}; ratio {res.metrics['C_ratio']['value']:.3f} (tol 2)"
    ok = _record(10, "gamma-ratio asymptotic", res, dt, 10.0, detail)
    assert ok, "criterion failed, see the acceptance summary"


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
