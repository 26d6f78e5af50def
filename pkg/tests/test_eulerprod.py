import math

import mpmath
import numpy as np
import pytest

from dirmoments.arithcore import ShiftSet, sieve_sigma
from dirmoments.eulerprod import (
    A_closed_22,
    A_local,
    A_product,
    B_closed_22,
    C_local,
    C_product,
    G_cap,
    G_closed,
    G_first_shift,
    H_direct,
    H_direct_naive,
    H_eval,
    RegimeError,
    TruncationPolicy,
    Z_eval,
    Z_series,
    g_local,
    pole_residue_probe,
)
from dirmoments.specfun import PoleError, zeta

I = ShiftSet.of([0.01 + 0.005j, -0.02])
J = ShiftSet.of([0.03, 0.015 - 0.01j])
a, b = I.as_array(), J.as_array()


def test_A_at_zero_shifts_is_inverse_zeta2():
    r = A_product([0, 0], [0, 0], 0.0)
    assert abs(r.value - 6 / math.pi**2) <= r.tail_estimate + 1e-12


@pytest.mark.parametrize("s", [0.0, 0.3, -0.3 + 0.2j, 1.5])
def test_A_product_against_closed_form(s):
    r = A_product(I, J, s)
    ref = 1 / complex(mpmath.zeta(2 + 2 * s + sum(a) + sum(b)))
    assert abs(r.value - ref) <= r.tail_estimate + 1e-12
    assert abs(A_closed_22(I, J, s) - ref) < 1e-12


def test_prime_cutoff_doubling_within_tail():
    r1 = A_product(I, J, -0.3, TruncationPolicy(prime_cutoff=5000))
    r2 = A_product(I, J, -0.3, TruncationPolicy(prime_cutoff=10000))
    assert abs(r1.value - r2.value) <= r1.tail_estimate


def test_g_identity_against_sieve():
    A = ShiftSet.of([0.01, -0.02])
    s, n, N = 2.5, 2, 10**5
    tab = sieve_sigma(A, N * n)
    j = np.arange(1, N + 1)
    lhs = (tab.values[j * n] * j**-s).sum()
    rhs = g_local(A, s, n) * zeta(s + 0.01) * zeta(s - 0.02)
    assert abs(lhs / rhs - 1) < 1e-6


def test_G_routes_agree():
    x = np.array([0.01, -0.02 + 0.01j, 0.03j])
    for p in (2, 7):
        for n in range(1, 4):
            s = 1 - x[1]
            gc = G_cap(x, s, p**n)
            assert abs(G_closed(x, s, p, n) - gc) < 1e-10 * abs(gc)
            assert abs(G_first_shift(x, 1, p, n) - gc) < 1e-10 * abs(gc)


def test_Z_series_against_product():
    for s in (1.5, 0.8):
        zs = Z_series(I, J, s, 10**5)
        ze = Z_eval(I, J, s)
        assert abs(zs.value - ze.value) <= zs.tail_estimate + ze.tail_estimate


def test_Z_pole_is_named():
    with pytest.raises(PoleError, match=r"i=0, j=0"):
        Z_eval([0.01], [0.02], -0.03)


def test_B_closed_form():
    Ip, Jp = ShiftSet.of([0.03, 0.02]), ShiftSet.of([0.01, 0.025])
    bp = Z_eval(Ip, Jp, 0.0)
    assert abs(B_closed_22(Ip, Jp) - bp.value) <= bp.tail_estimate


def test_swap_identity_local_and_global():
    s = 0.2
    for i1, i2 in [(0, 0), (1, 0), (0, 1)]:
        Ip = np.concatenate([np.delete(a, i1), [-b[i2] - s]])
        Jp = np.concatenate([np.delete(b, i2) + s, [-a[i1]]])
        assert abs(C_local(a, b, i1, i2, 7, s) - A_local(Ip, Jp, 7)) < 1e-14
        c = C_product(a, b, i1, i2, s)
        A = A_product(Ip, Jp, 0.0)
        assert abs(c.value - A.value) <= c.tail_estimate + A.tail_estimate


def test_C_regime_guard():
    with pytest.raises(RegimeError):
        C_product(a, b, 0, 0, -0.6)


def test_H_direct_routes():
    assert abs(H_direct(a, b, 0, 1, 1.5, 40, 30) - H_direct_naive(a, b, 0, 1, 1.5, 40, 30)) < 1e-13
    he = H_eval(a, b, 0, 1, 1.5 + 2j)
    hd = H_direct(a, b, 0, 1, 1.5 + 2j, 3000, 3000, complete_r=True, return_tail=True)
    assert abs(hd.value - he.value) <= hd.tail_estimate + he.tail_estimate


def test_pole_probe_stable():
    _, spread = pole_residue_probe(a, b, 0, 1)
    assert spread < 0.05
    with pytest.raises(PoleError):
        H_eval(a, b, 0, 1, 1 - a[0] - b[1])
