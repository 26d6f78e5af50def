import math

import mpmath
import numpy as np
import pytest
import sympy

from dirmoments.divisorsums import (
    KernelSpec,
    adc_main_term,
    adc_sweep,
    brute_D,
    desk_shifts,
    kernel_eval,
    q_series,
    q_series_direct,
    shift_constant,
)
from dirmoments.weights import omega_hat

I = desk_shifts(1e4, 2, 0.0)
J = desk_shifts(1e4, 2, 0.3)


def _sigma(shifts, n):
    # sum over ordered factorisations n = d1 d2 of d1^-a1 d2^-a2
    a1, a2 = shifts
    return sum(complex(d) ** -a1 * complex(n // d) ** -a2 for d in sympy.divisors(n))


def test_brute_D_against_double_loop():
    f = lambda m, n: np.exp(-((m - 150) ** 2) / 400.0) / np.sqrt(m * n)
    box = ((100, 200), (90, 200))
    got = brute_D(f, I, J, 7, box=box)
    ref = sum(_sigma(I.shifts, m) * _sigma(J.shifts, m - 7) * f(m, m - 7) for m in range(100, 201) if m - 7 >= 90)
    assert abs(got - ref) < 1e-12 * abs(ref)


def test_kernel_interpolated_path_matches_direct():
    spec = KernelSpec.desk(1e4, r=3)
    y = np.linspace(1e4, 2e4, 3000)
    big = kernel_eval(spec, y + 3, y)
    idx = np.arange(0, 3000, 97)
    small = kernel_eval(spec, y[idx] + 3, y[idx])
    assert np.max(np.abs(big[idx] - small)) < 1e-11 * np.max(np.abs(small))
    u = math.log1p(3 / 1.5e4) / (2 * math.pi)
    assert abs(kernel_eval(spec, 1.5e4 + 3, 1.5e4) - np.interp(1.5e4, y, big)) < 1e-6 * abs(omega_hat(spec.omega, u))


def test_shift_constant_against_mpmath():
    a, b = I.as_array(), J.as_array()
    ref = complex(mpmath.zeta(1 - a[0] + a[1]) * mpmath.zeta(1 - b[1] + b[0]))
    assert abs(shift_constant(I, J, 0, 1) - ref) < 1e-11 * abs(ref)


@pytest.mark.parametrize("r", [1, 6, 12, 10007])
def test_q_series_routes_agree(r):
    a, b = I.as_array(), J.as_array()
    e = q_series(a, b, 0, 1, r)
    d = q_series_direct(a, b, 0, 1, r, 20000)
    assert abs(e.value - d.value) <= e.tail_estimate + d.tail_estimate


def test_main_term_routes_and_desk_accuracy():
    spec = KernelSpec.desk(1e3, r=4)
    Ix, Jx = desk_shifts(1e3, 2, 0.0), desk_shifts(1e3, 2, 0.3)
    euler = adc_main_term(spec, Ix, Jx)
    direct, _, qtail = adc_main_term(spec, Ix, Jx, q_method="direct", q_tol=1e-3, return_parts=True)
    assert abs(euler - direct) <= qtail + 1e-9 * abs(euler)
    brute = brute_D(spec, Ix, Jx, 4)
    assert abs(brute - euler) < 1e-2 * abs(euler)


def test_sweep_trend_small_boxes():
    res = adc_sweep(lambda X: desk_shifts(X, 2, 0.0), lambda X: desk_shifts(X, 2, 0.3), [1e3, 1e4], range(1, 6))
    assert res[1].relative < res[0].relative


def test_rejections():
    with pytest.raises(ValueError):
        KernelSpec.desk(1e3, r=0)
    with pytest.raises(ValueError):
        adc_sweep(I, J, [1e3], [0, 1])
    with pytest.raises(ValueError):
        adc_sweep(I, J, [1e2], [50])
