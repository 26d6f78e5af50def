import math
from fractions import Fraction

import numpy as np
import pytest

from dirmoments.arithcore import ShiftSet
from dirmoments.moments import (
    Q4_REFERENCE,
    W33_REFERENCE,
    MomentConfig,
    a_kl,
    cg_identity_checks,
    diag_direct,
    direct_moment,
    direct_moment_pairs,
    g_k,
    gamma_kl,
    m0_contour,
    m1_contour,
    log_scaled_shifts,
    quartic_numerator,
    vertical_integral,
    w_kl,
)
from dirmoments.specfun import gamma


def test_exact_layer_values():
    assert [int(c) for c in w_kl(3, 3).w_coeffs] == W33_REFERENCE
    assert quartic_numerator() == Q4_REFERENCE
    assert g_k(3) == 42 and g_k(4) == 24024
    assert g_k(1) == 1 and g_k(2) == 2
    # frozen from exact rational evaluation
    assert w_kl(4, 4).w(Fraction(2)) == 12012
    checks = cg_identity_checks()
    assert checks["w33_symmetric_sum_42"] and checks["w44_at_2_doubled_is_g4"]


def test_w_kl_normalisation():
    for k in range(1, 5):
        for l in range(1, 5):
            w = w_kl(k, l)
            assert w.w(Fraction(1)) == 1
            assert w.degree <= k * l
    assert gamma_kl(1, 1, 0) == 1


def test_a_kl_closed_forms():
    r = a_kl(2, 2)
    assert abs(r.value - 6 / math.pi**2) <= r.tail_estimate + 1e-13
    assert abs(a_kl(1, 1).value - 1) < 1e-13


def test_vertical_integral_known_transforms():
    x = 2.0
    r = vertical_integral(lambda s: gamma(s) * x ** (-s), 1.0, 1.0, height=200)
    assert abs(r.value - math.exp(-x)) < 1e-10
    assert r.quad_error < 1e-9
    g = vertical_integral(lambda s: np.exp(s * s), 0.0, 1.0, height=50)
    assert abs(g.value - 1 / (2 * math.sqrt(math.pi))) < 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        MomentConfig(ShiftSet.of([0.01]), ShiftSet.of([0.02]), 100.0, -0.1)
    with pytest.raises(ValueError):
        MomentConfig(ShiftSet.of([0.3]), ShiftSet.of([0.02]), 100.0, 0.2, log_scaled=True)
    cfg = MomentConfig.log_scaled_default(300.0)
    assert cfg.K == pytest.approx(300.0**1.2)
    assert "unconditional" in " ".join(MomentConfig.log_scaled_default(300.0, eta=0.5).lint())
    assert log_scaled_shifts(300.0, 3).k == 3


@pytest.fixture(scope="module")
def small_cfg():
    return MomentConfig.log_scaled_default(150.0, 0.2)


def test_direct_moment_two_routes(small_cfg):
    t_route, diag, off, err = direct_moment(small_cfg, return_split=True)
    pair_route, bound, _ = direct_moment_pairs(small_cfg, window=3.0)
    assert abs(t_route - pair_route) <= bound + 1e-9 * abs(t_route)
    assert abs(diag - diag_direct(small_cfg)) == 0
    assert err < 1e-8 * abs(t_route)


def test_m0_matches_diagonal(small_cfg):
    m0 = m0_contour(small_cfg, rel_tol=1e-7, return_details=True)
    diag = diag_direct(small_cfg)
    assert abs(m0.value - diag) <= 1e-6 * abs(diag)


def test_m1_abscissa_stability(small_cfg):
    v1 = m1_contour(small_cfg, rel_tol=1e-7)
    v2 = m1_contour(small_cfg, c=0.12, rel_tol=1e-7)
    assert abs(v1 - v2) < 1e-6 * abs(v1)
