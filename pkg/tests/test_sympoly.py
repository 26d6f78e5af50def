import numpy as np
import pytest

from dirmoments.sympoly import (
    BudgetError,
    SymPolynomial,
    f_direct,
    f_poly,
    q_coefficients,
    q_numeric,
    verify_comb_identity,
)


def test_small_cases_by_hand():
    # two variables, a = 1: the constant term is e_1
    q = q_coefficients(1, 2)
    Y, Z = [0.7, -1.3 + 0.4j], 0.25 - 0.5j
    assert abs(f_direct(1, Y, Z) - f_poly(q, Y, Z)) < 1e-13
    assert q[0] == SymPolynomial.e(2, 1)


def test_degrees_are_homogeneous():
    for a in range(1, 5):
        for j, q in enumerate(q_coefficients(a, 4)):
            assert q.degrees() <= {a + j}


def test_three_routes_agree():
    rng = np.random.default_rng(5)
    Y = rng.uniform(0.5, 2, 4) * np.exp(2j * np.pi * rng.uniform(0, 1, 4))
    Z = 0.6 + 0.3j
    for a in range(1, 7):
        d = f_direct(a, Y, Z)
        assert abs(d - f_poly(q_coefficients(a, 4), Y, Z)) < 1e-11 * (1 + abs(d))
        assert abs(d - q_numeric(a, Y, Z)) < 1e-11 * (1 + abs(d))


def test_comb_identity_grid_and_budget():
    for a in range(1, 5):
        for m in range(1, 6):
            assert verify_comb_identity(a, m, trials=20).passed
    with pytest.raises(BudgetError):
        q_coefficients(9, 2)
