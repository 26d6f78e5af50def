import math

import numpy as np
import pytest
import sympy

from dirmoments.arithcore import (
    BudgetError,
    CoincidentShiftError,
    ShiftSet,
    complete_homogeneous,
    divisors,
    elementary_symmetric,
    euler_phi,
    factorize,
    is_prime,
    mobius,
    primes_upto,
    ramanujan_sum,
    sieve_sigma,
    sigma_shift,
    tau_k,
    tau_table,
)


def test_elementary_functions_match_sympy():
    for n in range(1, 400):
        assert factorize(n) == sorted(sympy.factorint(n).items())
        assert divisors(n) == sympy.divisors(n)
        assert mobius(n) == sympy.mobius(n)
        assert euler_phi(n) == sympy.totient(n)
        assert is_prime(n) == sympy.isprime(n)
    assert primes_upto(1000).tolist() == list(sympy.primerange(2, 1001))


def test_ramanujan_sum_against_exponential_sum():
    for q in range(1, 40):
        for r in range(-5, 30):
            ref = sum(np.exp(2j * np.pi * a * r / q) for a in range(1, q + 1) if math.gcd(a, q) == 1)
            assert ramanujan_sum(q, r) == round(ref.real)
    assert [ramanujan_sum(q, 1) for q in range(1, 20)] == [sympy.mobius(q) for q in range(1, 20)]


def test_sigma_shift_is_brute_force_divisor_sum():
    I = ShiftSet.of([0.01 + 0.02j, -0.03])
    for n in [1, 2, 12, 30, 64, 97, 360]:
        ref = sum(d1 ** -I.shifts[0] * (n // d1) ** -I.shifts[1] for d1 in sympy.divisors(n))
        assert abs(sigma_shift(I, n) - ref) < 1e-13 * abs(ref)


def test_sieve_matches_multiplicative_definition():
    I = ShiftSet.of([0.02, -0.01j, 0.015])
    tab = sieve_sigma(I, 5000)
    for n in [1, 2, 3, 8, 210, 1024, 2310, 4999, 5000]:
        assert abs(tab[n] - sigma_shift(I, n)) < 1e-12
    with pytest.raises(BudgetError):
        sieve_sigma(I, 100, cap=50)


def test_tau_table_matches_sympy():
    t3 = tau_table(3, 500)
    for n in range(1, 501):
        assert t3[n] == tau_k(3, n)
    t2 = tau_table(2, 500)
    assert all(t2[n] == sympy.divisor_count(n) for n in range(1, 501))


def test_symmetric_functions_generating_series():
    x = np.array([0.3, -0.7 + 0.2j, 1.1])
    h = complete_homogeneous(x, 6)
    e = elementary_symmetric(x)
    # sum_j (-1)^j e_j h_{n-j} = 0 for n >= 1
    for n in range(1, 7):
        assert abs(sum((-1) ** j * e[j] * h[n - j] for j in range(min(n, 3) + 1))) < 1e-14
    assert np.allclose(e, [1, x.sum(), x[0] * x[1] + x[0] * x[2] + x[1] * x[2], x.prod()])


def test_shift_set_validation():
    with pytest.raises(CoincidentShiftError):
        ShiftSet.of([0.01, 0.0100001], min_separation=1e-3)
    with pytest.raises(ValueError):
        ShiftSet((0.1,), delta_bound=0.05)
    assert ShiftSet.of([0.01, 0.02]).same_multiset(ShiftSet.of([0.02, 0.01]))
