import math

import mpmath
import numpy as np
import pytest

from dirmoments.weights import (
    OmegaWeight,
    PhiCutoff,
    QuadratureSpec,
    mellin_phi,
    omega_eval,
    omega_hat,
    omega_mellin,
    phi2,
    phi2_convolution,
    phi_eval,
    phi_residue,
    psi,
    smoothstep,
    w0,
    w0_partition,
)


def _S(x):
    x = mpmath.mpf(x)
    if x <= 0:
        return mpmath.mpf(0)
    if x >= 1:
        return mpmath.mpf(1)
    a, b = mpmath.exp(-1 / x), mpmath.exp(-1 / (1 - x))
    return a / (a + b)


def test_smoothstep_values():
    xs = [0.1, 0.3, 0.5, 0.77]
    assert np.allclose(smoothstep(np.array(xs)), [float(_S(x)) for x in xs], rtol=1e-14)
    assert smoothstep(-1.0) == 0.0 and smoothstep(2.0) == 1.0


@pytest.mark.parametrize("u", [0.0, 0.0069, 0.0276])
def test_omega_hat_against_mpmath(u):
    w = OmegaWeight.from_T(1000)

    def om(t):
        return _S((t - 1000) / w.T0) * _S((2000 - t) / w.T0)

    f = lambda t: om(t) * mpmath.exp(-2j * mpmath.pi * u * t)
    pts = [1000, 1000 + w.T0, 2000 - w.T0, 2000]
    ref = complex(mpmath.quad(f, mpmath.linspace(pts[0], pts[1], 20)) + mpmath.quad(f, pts[1:3])
                  + mpmath.quad(f, mpmath.linspace(pts[2], pts[3], 20)))
    assert abs(omega_hat(w, u) - ref) < 1e-9 * max(1.0, abs(ref))


def test_omega_hat_symmetry_and_total_mass():
    w = OmegaWeight.from_T(500)
    assert abs(omega_hat(w, -0.013) - np.conj(omega_hat(w, 0.013))) < 1e-12
    t = np.linspace(*w.support, 200001)
    assert abs(omega_hat(w, 0.0).real - np.trapezoid(omega_eval(w, t), t)) < 1e-6


def test_omega_mellin_against_mpmath():
    w = OmegaWeight.from_T(200)
    z = 0.4 + 3j
    f = lambda t: _S((t - 200) / w.T0) * _S((400 - t) / w.T0) * mpmath.power(t, z - 1)
    ref = complex(mpmath.quad(f, mpmath.linspace(200, 400, 30)))
    assert abs(omega_mellin(w, z) - ref) < 1e-9 * abs(ref)


def test_phi_transforms():
    p = PhiCutoff()
    assert abs(psi(p, 0.0) - 1) < 1e-12  # quadrature tolerance
    for s in [0.5, 2 + 3j, -0.3 + 10j]:
        f = lambda t: mpmath.mpf(phi_eval(p, float(t))) * mpmath.power(t, s - 1)
        ref = complex(mpmath.power(1, s) / s + mpmath.quad(f, mpmath.linspace(1, 1.1, 8)))
        assert abs(mellin_phi(p, s) - ref) < 1e-10 * abs(ref)
    assert abs(phi_residue(p, 1e-3) - 1) < 1e-12
    assert abs(phi_residue(p, 1e-3, squared=True) - 1) < 1e-12


def test_phi2_convolution_identity():
    p = PhiCutoff()
    s = 2 + 3j
    assert abs(phi2_convolution(p, s) - phi2(p, s)) < 1e-5 * abs(phi2(p, s))


def test_partition_of_unity():
    rng = np.random.default_rng(0)
    for x in np.exp(rng.uniform(0, math.log(1e8), 2000)):
        assert abs(sum(wt for _, wt in w0_partition(float(x))) - 1) < 1e-12
    assert w0(0.99) == 0.0 and w0(2.01) == 0.0


def test_parameter_validation():
    with pytest.raises(ValueError):
        OmegaWeight(1000.0, 10.0)
    with pytest.raises(ValueError):
        PhiCutoff(rho=0.6)
    with pytest.raises(ValueError):
        QuadratureSpec(scheme="tanh-sinh")


def test_omega_hat_bound_beyond_first_cutoff_literal():
    # literal example: |omega_hat(u)| <= 1e-8 T for u >= T0^-0.9 at T = 1e3
    w = OmegaWeight.from_T(1e3)
    u = np.linspace(w.T0**-0.9, 0.5, 20000)
    assert np.max(np.abs(omega_hat(w, u))) <= 1e-8 * w.T


def test_omega_hat_bound_far_range():
    # the same bound is met from u = 16 T0^-0.9 on
    w = OmegaWeight.from_T(1e3)
    u = np.linspace(16 * w.T0**-0.9, 0.5, 20000)
    assert np.max(np.abs(omega_hat(w, u))) <= 1e-8 * w.T
