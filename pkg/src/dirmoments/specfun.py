"""Complex special functions: zeta by Euler-Maclaurin, (log-)Gamma, and the
Gamma-ratio asymptotic used to pass between Dirichlet series at +it and -it."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special as _sp


class PoleError(ValueError):
    """Evaluation requested at (or too close to) a pole."""


class AccuracyError(RuntimeError):
    """The requested accuracy could not be reached within the term budget."""


@dataclass(frozen=True)
class EvalControl:
    target_tol: float = 1e-13
    max_terms: int = 2_000_000
    bernoulli_order: int = 12

    def __post_init__(self):
        if self.target_tol < 1e-14:
            raise ValueError("target_tol below 1e-14 is not supported")
        if self.bernoulli_order % 2 or not 2 <= self.bernoulli_order <= 30:
            raise ValueError("bernoulli_order must be even and in [2, 30]")


DEFAULT_CTL = EvalControl()


def _bernoulli(nmax: int) -> list[Fraction]:
    B = [Fraction(0)] * (nmax + 1)
    B[0] = Fraction(1)
    for m in range(1, nmax + 1):
        B[m] = -sum(math.comb(m + 1, j) * B[j] for j in range(m)) / (m + 1)
    return B


_B = _bernoulli(32)
# B_{2j} / (2j)! as floats
_EM_COEF = [float(_B[2 * j] / math.factorial(2 * j)) for j in range(16)]


def _rising(s: np.ndarray, n: int) -> np.ndarray:
    out = np.ones_like(s)
    for i in range(n):
        out = out * (s + i)
    return out


def _zeta_terms_needed(s: np.ndarray, ctl: EvalControl) -> np.ndarray:
    m = ctl.bernoulli_order // 2
    n0 = np.maximum(np.ceil(np.abs(s.imag) / 2.0), 30.0)
    # first omitted correction ~ |B_{2m+2}/(2m+2)! (s)_{2m+1}| N^{-Re s - 2m}
    c = abs(_EM_COEF[m + 1]) * np.abs(_rising(s, 2 * m + 1))
    expo = s.real + 2 * m
    with np.errstate(divide="ignore", over="ignore"):
        need = np.exp((np.log(np.maximum(c, 1e-300)) - math.log(ctl.target_tol)) / np.maximum(expo, 0.5))
    return np.maximum(n0, np.ceil(need))


def _zeta_block(s: np.ndarray, N: int, m: int, block: int = 1 << 22) -> tuple[np.ndarray, np.ndarray]:
    """Euler-Maclaurin with a common truncation N for every entry of s."""
    logn = np.log(np.arange(1, N, dtype=float))
    acc = np.zeros(s.shape, dtype=complex)
    rows = max(1, block // max(N, 1))
    for i in range(0, s.size, rows):
        ss = s[i : i + rows]
        acc[i : i + rows] = np.exp(-np.multiply.outer(ss, logn)).sum(axis=1)
    lnN = math.log(N)
    NmS = np.exp(-s * lnN)
    acc += N * NmS / (s - 1.0) + 0.5 * NmS
    term = NmS / N  # N^{-s-1}
    poch = s.copy()
    for j in range(1, m + 1):
        acc += _EM_COEF[j] * poch * term
        poch = poch * (s + 2 * j - 1) * (s + 2 * j)
        term = term / (N * N)
    err = np.abs(_EM_COEF[m + 1] * poch * term)
    return acc, err


def zeta(s, ctl: EvalControl = DEFAULT_CTL, return_error: bool = False):
    """Riemann zeta at complex s (scalar or array) by Euler-Maclaurin summation.

    The truncation point starts at max(ceil(|Im s|/2), 30) and is raised until
    the first omitted correction is below ctl.target_tol.
    """
    scalar = np.ndim(s) == 0
    sa = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    if np.any(np.abs(sa - 1.0) < 1e-12):
        raise PoleError("zeta has a pole at s = 1")
    need = _zeta_terms_needed(sa, ctl)
    if np.any(need > ctl.max_terms):
        raise AccuracyError(f"zeta needs {int(need.max())} terms > max_terms={ctl.max_terms}")
    m = ctl.bernoulli_order // 2
    out = np.empty(sa.shape, dtype=complex)
    err = np.empty(sa.shape, dtype=float)
    # bucket by truncation point so each block shares one N
    bucket = np.ceil(np.log(need) / math.log(1.25)).astype(int)
    for b in np.unique(bucket):
        idx = np.nonzero(bucket == b)[0]
        N = int(need[idx].max())
        out[idx], err[idx] = _zeta_block(sa[idx], N, m)
    shape = np.shape(s)
    out = out.reshape(shape) if not scalar else complex(out[0])
    if return_error:
        err = err.reshape(shape) if not scalar else float(err[0])
        return out, err
    return out


def _poles_check(s) -> None:
    sa = np.atleast_1d(np.asarray(s, dtype=complex))
    bad = (np.abs(sa.imag) < 1e-14) & (sa.real <= 0) & (np.abs(sa.real - np.rint(sa.real)) < 1e-14)
    if np.any(bad):
        raise PoleError("Gamma has poles at the non-positive integers")


def log_gamma(s):
    """Principal branch of log Gamma(s) (branch cut along the negative real axis)."""
    _poles_check(s)
    out = _sp.loggamma(np.asarray(s, dtype=complex))
    return complex(out) if np.ndim(out) == 0 else out


def gamma(s):
    _poles_check(s)
    out = np.exp(_sp.loggamma(np.asarray(s, dtype=complex)))
    return complex(out) if np.ndim(out) == 0 else out


def gamma_ratio(s1, s2, a, b, t: float, sign: int = 1):
    """Gamma(1/2 - b - s2 + i sign t) / Gamma(1/2 + a + s1 + i sign t)."""
    if t < 2:
        raise ValueError("gamma_ratio is meant for t >= 2")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    it = 1j * sign * t
    num = np.asarray(0.5 - b - s2 + it, dtype=complex)
    den = np.asarray(0.5 + a + s1 + it, dtype=complex)
    out = np.exp(log_gamma(num) - log_gamma(den))
    return complex(out) if np.ndim(out) == 0 else out


def stirling_ratio(s1, s2, a, b, t: float, sign: int = 1):
    """Leading asymptotic t^{-z} exp(-i sign pi z / 2) with z = s1 + s2 + a + b."""
    z = np.asarray(s1 + s2 + a + b, dtype=complex)
    out = np.exp(-z * math.log(t) - 1j * sign * math.pi * z / 2)
    return complex(out) if np.ndim(out) == 0 else out


def stirling_samples(t: float, n: int, seed: int, delta: float = 0.04, height: float = 3.0):
    """Random (s1, s2, a, b) with small real parts and |Im s_i| <= height."""
    rng = np.random.default_rng(seed)
    s1 = rng.uniform(0, 2 * delta, n) + 1j * rng.uniform(-height, height, n)
    s2 = rng.uniform(0, 2 * delta, n) + 1j * rng.uniform(-height, height, n)
    a = rng.uniform(-delta, delta, n) + 1j * rng.uniform(-delta, delta, n)
    b = rng.uniform(-delta, delta, n) + 1j * rng.uniform(-delta, delta, n)
    return s1, s2, a, b


def stirling_constant(t: float, n: int = 50, seed: int = 0, sign: int = 1) -> float:
    """Smallest C with |asym/exact - 1| <= C (1+|s1|^2+|s2|^2)/t over the sample."""
    s1, s2, a, b = stirling_samples(t, n, seed)
    exact = gamma_ratio(s1, s2, a, b, t, sign)
    approx = stirling_ratio(s1, s2, a, b, t, sign)
    rel = np.abs(approx / exact - 1.0)
    scale = (1 + np.abs(s1) ** 2 + np.abs(s2) ** 2) / t
    return float(np.max(rel / scale))
