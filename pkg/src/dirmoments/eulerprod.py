"""Euler products and Dirichlet series built from shifted divisor functions.

Covers the multiplicative pair g_A / G_A, the series B(I, J), the ratio
Z_{I,J}(s) with its zeta factorization, the correction product A_{I,J}(s),
the local factors C of the (r, q) series H, and H itself (factorized and as a
truncated double sum).

Every truncated product carries a tail estimate.  Products over p <= P get a
leading-order correction for the primes above P, computed from the prime
integral sum_{p > P} p^{-alpha} ~ E1((alpha - 1) log P); the reported tail is
the geometric extrapolation of the remainder beyond that leading term, plus
2% of the correction itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from . import sympoly
from .arithcore import (
    CoincidentShiftError,
    ShiftSet,
    complete_homogeneous,
    divisors,
    elementary_symmetric,
    euler_phi,
    factorize,
    mobius,
    primes_upto,
    sieve_sigma,
)
from .specfun import PoleError, zeta

__all__ = [
    "TruncationPolicy", "LocalSeries", "ProductResult", "SeriesResult", "DivergenceError",
    "RegimeError", "local_series", "g_local", "G_cap", "G_closed", "G_first_shift",
    "G_first_shift_table", "B_series", "B_eulerized", "B_closed_22", "Z_series", "Z_eval",
    "A_local", "A_product", "A_closed_22", "C_local", "C_product", "H_eval", "H_direct",
    "H_direct_naive", "pole_residue_probe",
]

# relative slack on the prime-integral approximation of sum_{p > P} p^{-alpha}
PRIME_SUM_SLACK = 0.02


class DivergenceError(ValueError):
    """A local series was requested outside its region of convergence."""


class RegimeError(ValueError):
    """Parameters outside the half-plane where an evaluator is valid."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Truncation controls shared by all products.

    Args:
        prime_cutoff: largest prime taken into the product exactly.
        series_len: baseline length of each local series; extended
            automatically while the certified tail is above `target_tol`.
        pole_margin: minimum distance from any zeta pole.
        target_tol: per-factor tolerance for local series.
        q_tail_const: constant in the q-tail bound of the (r, q) series.
    """

    prime_cutoff: int = 10_000
    series_len: int = 40
    pole_margin: float = 1e-4
    target_tol: float = 1e-15
    q_tail_const: float = 10.0
    max_series_len: int = 600

    def __post_init__(self):
        if self.prime_cutoff < 3:
            raise ValueError("prime_cutoff must be at least 3")
        if self.series_len < 2 or self.max_series_len < self.series_len:
            raise ValueError("need 2 <= series_len <= max_series_len")


DEFAULT_POLICY = TruncationPolicy()


@dataclass
class LocalSeries:
    """Coefficients of sum_j sigma_A(p^j) x^j (index j is the power of p)."""

    prime: int
    coefficients: np.ndarray = field(repr=False)
    truncation_len: int
    tail_bound: float


@dataclass
class ProductResult:
    value: complex
    prime_cutoff: int
    tail_estimate: float


@dataclass
class SeriesResult:
    value: complex
    length: int
    tail_estimate: float


def _shifts(A) -> np.ndarray:
    if isinstance(A, ShiftSet):
        return A.as_array()
    return np.asarray(A, dtype=complex).ravel()


# ---------------------------------------------------------------------------
# local series and the multiplicative pair g_A, G_A
# ---------------------------------------------------------------------------

def _tail_length(ratio: float, k: int, offset: int, tol: float, lmin: int, lmax: int) -> tuple[int, float]:
    """Shortest L >= lmin with sum_{j >= L} C(j+offset+k-1, k-1) ratio^j <= tol.

    Returns (L, bound).  The term ratio (j+offset+k)/(j+offset+1) * ratio is
    decreasing in j, so once it is below 1 the tail is dominated by a geometric series.
    """
    if ratio >= 1.0:
        raise DivergenceError(f"local series ratio {ratio:.4g} >= 1")
    if ratio == 0.0:
        return lmin, 0.0
    L = lmin
    while True:
        rho = ratio * (L + offset + k) / (L + offset + 1)
        if rho < 1:
            logb = math.lgamma(L + offset + k) - math.lgamma(k) - math.lgamma(L + offset + 1) + L * math.log(ratio)
            bound = math.exp(logb) / (1 - rho)
            if bound <= tol:
                return L, bound
        if L >= lmax:
            if rho < 1:
                return L, bound
            raise DivergenceError(f"local series needs more than {lmax} terms")
        L = min(lmax, L + max(4, L // 4))


def local_series(A, p: int, s: complex, offset: int = 0, tol: float = 1e-15,
                 lmin: int = 8, lmax: int = 2000) -> LocalSeries:
    """sum_j sigma_A(p^{j+offset}) p^{-js} truncated with a certified tail.

    The tail uses |sigma_A(p^j)| <= tau_k(p^j) p^{j d} with d = max(-Re a).
    `coefficients` holds the truncated terms sigma_A(p^{j+offset}) p^{-js}.
    """
    a = _shifts(A)
    k = a.size
    d = float(np.max(-a.real))
    ratio = p ** (d - complex(s).real)
    scale = p ** (offset * max(d, 0.0))
    L, bound = _tail_length(ratio, k, offset, tol / max(scale, 1.0), lmin, lmax)
    x = np.exp(-a * math.log(p))
    h = complete_homogeneous(x, L + offset)
    coef = h[offset : offset + L] * np.exp(-complex(s) * math.log(p) * np.arange(L))
    return LocalSeries(p, coef, L, bound * scale)


def _check_convergence(A, s: complex, margin: float = 1e-3) -> None:
    a = _shifts(A)
    worst = float(np.min((complex(s) + a).real))
    if worst <= margin:
        raise DivergenceError(f"g_A(s, n) needs Re(s + a) > {margin}; got min {worst:.4g}")


def g_local(A, s: complex, n: int, tol: float = 1e-15, return_error: bool = False):
    """g_A(s, n): product over p^e || n of the ratio of the shifted and unshifted local series."""
    if n < 1:
        raise ValueError("g_local needs n >= 1")
    _check_convergence(A, s)
    out = 1 + 0j
    err = 0.0
    for p, e in factorize(n):
        num = local_series(A, p, s, offset=e, tol=tol)
        den = local_series(A, p, s, offset=0, tol=tol)
        nv, dv = complex(num.coefficients.sum()), complex(den.coefficients.sum())
        ratio = nv / dv
        rel = num.tail_bound / max(abs(nv), 1e-300) + den.tail_bound / max(abs(dv), 1e-300)
        out *= ratio
        err = (1 + err) * (1 + rel) - 1
    if return_error:
        return out, err * abs(out)
    return out


def G_cap(A, s: complex, n: int, tol: float = 1e-15) -> complex:
    """G_A(s, n) from its defining double divisor sum over g_A."""
    if n < 1:
        raise ValueError("G_cap needs n >= 1")
    s = complex(s)
    tot = 0j
    for d in divisors(n):
        md = mobius(d)
        if md == 0:
            continue
        inner = 0j
        for e in divisors(d):
            me = mobius(e)
            if me == 0:
                continue
            inner += me * e ** (-s) * g_local(A, s, n * e // d, tol)
        tot += md * d**s / euler_phi(d) * inner
    return tot


def G_closed(X, s: complex, p: int, j: int, dps: int = 40) -> complex:
    """Closed form of G_X(s, p^j) for pairwise distinct shifts X.

    Evaluated in extended precision: the partial-fraction weights
    prod_{l != i} (1 - p^{x_i - x_l})^{-1} are large when shifts are close.
    """
    import mpmath as mp

    x = [complex(v) for v in _shifts(X)]
    if j < 0:
        raise ValueError("j must be >= 0")
    if j == 0:
        return 1 + 0j
    if len(set(x)) != len(x):
        raise CoincidentShiftError("G_closed needs distinct shifts")
    with mp.workdps(dps):
        P = mp.mpf(p)
        S = mp.mpc(s)
        xs = [mp.mpc(v) for v in x]
        pref = mp.mpf(1)
        for xi in xs:
            pref *= 1 - P ** (-S - xi)
        tot = mp.mpc(0)
        for i, xi in enumerate(xs):
            term = (P ** (1 - xi * j) - P ** (S - xi * (j - 1))) / (1 - P ** (-xi - S))
            for l, xl in enumerate(xs):
                if l != i:
                    term /= 1 - P ** (xi - xl)
            tot += term
        return complex(pref * tot / (P - 1))


def _first_shift_vars(shifts: np.ndarray, i1: int, p):
    """(Y, Z) of the q-polynomial form: Y = p^{-a_l} for l != i1, Z = p^{a_{i1} - 1}."""
    if not 0 <= i1 < shifts.size:
        raise IndexError("i1 out of range")
    logp = np.log(np.asarray(p, dtype=float))
    others = np.delete(shifts, i1)
    Y = np.exp(-np.multiply.outer(others, logp))
    Z = np.exp((shifts[i1] - 1.0) * logp)
    return Y, Z


def G_first_shift(I: ShiftSet, i1: int, p: int, n: int) -> complex:
    """G_I(1 - a_{i1}, p^n) from the q-polynomials of the symmetric-function layer."""
    a = _shifts(I)
    if a.size < 2:
        raise ValueError("G_first_shift needs k >= 2")
    if isinstance(I, ShiftSet):
        I.require_distinct()
    if n == 0:
        return 1 + 0j
    Y, Z = _first_shift_vars(a, i1, p)
    qs = sympoly.q_coefficients(n, a.size - 1)
    e = elementary_symmetric(Y)[1:]
    return complex(sum(q.evaluate(e) * Z**j for j, q in enumerate(qs)))


def G_first_shift_table(shifts, i1: int, primes, L: int) -> np.ndarray:
    """G(1 - a_{i1}, p^n) for n = 0..L and every p in `primes`; shape (L+1, len(primes)).

    Uses q_{n,j} = (-1)^j sum_t (-1)^t e_{j-t} h_{n+t}, which has no table size cap.
    For k = 1 the value is 0 for every n >= 1.
    """
    a = _shifts(shifts)
    primes = np.atleast_1d(np.asarray(primes, dtype=float))
    out = np.zeros((L + 1, primes.size), dtype=complex)
    out[0] = 1.0
    if a.size == 1:
        return out
    Y, Z = _first_shift_vars(a, i1, primes)
    m = Y.shape[0]
    e = elementary_symmetric(Y)
    h = complete_homogeneous(Y, L + m)
    # inner[j][n] = sum_t (-1)^t e_{j-t} h_{n+t}
    Zp = np.ones(primes.size, dtype=complex)
    for j in range(m):
        inner = np.zeros((L, primes.size), dtype=complex)
        for t in range(j + 1):
            inner += (-1) ** t * e[j - t] * h[1 + t : L + 1 + t]
        out[1:] += (-1) ** j * inner * Zp
        Zp = Zp * Z
    return out


# ---------------------------------------------------------------------------
# generic truncated Euler product with a prime-integral tail correction
# ---------------------------------------------------------------------------

def _prime_tail(alpha: np.ndarray, P: float) -> np.ndarray:
    """sum_{p > P} p^{-alpha} via the prime integral E1((alpha - 1) log P)."""
    z = (np.asarray(alpha, dtype=complex) - 1.0) * math.log(P)
    if np.any(z.real <= 0):
        raise RegimeError("prime tail sum diverges (Re alpha <= 1)")
    return _sp.exp1(z)


def _pair_sums(x: np.ndarray) -> np.ndarray:
    """x_i + x_j over i < j along axis 0; shape (C(k,2), ...)."""
    k = x.shape[0]
    if k < 2:
        return np.zeros((0,) + x.shape[1:], dtype=complex)
    return np.stack([x[i] + x[j] for i, j in itertools.combinations(range(k), 2)])


def _leading_alphas(Ix: np.ndarray, Jy: np.ndarray) -> np.ndarray:
    """Exponents 2 + sum(S) + sum(T) over |S| = |T| = 2; shape (n, S)."""
    ps, pt = _pair_sums(Ix), _pair_sums(Jy)
    if ps.shape[0] == 0 or pt.shape[0] == 0:
        return np.zeros((0,) + Ix.shape[1:], dtype=complex)
    return (2.0 + ps[:, None] + pt[None, :]).reshape((-1,) + Ix.shape[1:])


def _euler_product(local, primes: np.ndarray, alphas: np.ndarray, sign: float,
                   nsamples: int, block: int = 200_000):
    """prod_p local(p_block) over `primes`, vectorised over nsamples trailing entries.

    `local(pb)` returns (factor, leading) with shapes (len(pb), nsamples):
    the local factor and its leading-order deviation sign * sum_alpha p^{-alpha}.
    The primes above P enter through the leading term only; what is left is
    extrapolated geometrically from the remainders on (P/4, P/2] and (P/2, P].
    Returns (value, tail_estimate), both of shape (nsamples,).
    """
    P = float(primes[-1])
    logsum = np.zeros(nsamples, dtype=complex)
    blk = np.where(primes > P / 2, 2, np.where(primes > P / 4, 1, 0))
    rem_sum = np.zeros((3, nsamples))
    nb = max(1, block // max(nsamples, 1))
    for i in range(0, primes.size, nb):
        pb = primes[i : i + nb]
        fac, lead = local(pb)
        logsum += np.log(fac).sum(axis=0)
        rem = np.abs(fac - 1.0 - lead)
        bb = blk[i : i + nb]
        for j in (1, 2):
            if (bb == j).any():
                rem_sum[j] += rem[bb == j].sum(axis=0)
    corr = sign * _prime_tail(alphas, P).sum(axis=0) if alphas.shape[0] else np.zeros(nsamples, complex)
    value = np.exp(logsum + corr)
    r1, r2 = rem_sum[1], rem_sum[2]
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(r1 > 0, r2 / r1, 0.0)
    rho = np.minimum(rho, 0.9)
    rem_tail = r2 * rho / (1 - rho)
    tail = np.abs(value) * (rem_tail + PRIME_SUM_SLACK * np.abs(corr))
    return value, tail


def _primes(P: int) -> np.ndarray:
    return _cached_primes(int(P))


@lru_cache(maxsize=8)
def _cached_primes(P: int) -> np.ndarray:
    return primes_upto(P)


# ---------------------------------------------------------------------------
# A, Z and B
# ---------------------------------------------------------------------------

def _series_len_for(xmax: np.ndarray, ymax: np.ndarray, p, k: int, l: int,
                    policy: TruncationPolicy) -> int:
    """Series length for the block; xmax, ymax have shape (nb, S) and p shape (nb,)."""
    ratio = float(np.max(xmax * ymax / np.asarray(p, dtype=float).reshape(-1, *([1] * (xmax.ndim - 1)))))
    L, _ = _tail_length(ratio, k + l - 1, 0, policy.target_tol, policy.series_len, policy.max_series_len)
    return L


def _A_factors(Ix: np.ndarray, Jy: np.ndarray, pb: np.ndarray, policy: TruncationPolicy):
    """Local factors A_p and their leading deviation for primes pb; Ix (k, S), Jy (l, S)."""
    k, l = Ix.shape[0], Jy.shape[0]
    logp = np.log(pb.astype(float))
    x = np.exp(-Ix[:, None, :] * logp[None, :, None])  # (k, nb, S)
    y = np.exp(-Jy[:, None, :] * logp[None, :, None])
    L = _series_len_for(np.abs(x).max(axis=0), np.abs(y).max(axis=0), pb, k, l, policy)
    hx = complete_homogeneous(x, L)
    hy = complete_homogeneous(y, L)
    pw = np.exp(-np.outer(np.arange(L + 1), logp))[:, :, None]
    series = (hx * hy * pw).sum(axis=0)
    prod = np.ones_like(series)
    for i in range(k):
        for j in range(l):
            prod = prod * (1.0 - x[i] * y[j] / pb[:, None])
    fac = series * prod
    al = _leading_alphas(Ix, Jy)  # (n, S)
    lead = -np.exp(-al[:, None, :] * logp[None, :, None]).sum(axis=0) if al.shape[0] else np.zeros_like(fac)
    return fac, lead


def _A_arrays(Ix: np.ndarray, Jy: np.ndarray, policy: TruncationPolicy):
    primes = _primes(policy.prime_cutoff)
    nS = Ix.shape[1]
    al = _leading_alphas(Ix, Jy)
    dI = np.max(-Ix.real, axis=0)
    dJ = np.max(-Jy.real, axis=0)
    if np.any(2 - 2 * (dI + dJ) <= 1 + 1e-9):
        raise RegimeError("A_{I,J} needs the shifted sets inside Re > -1/4 each (Re s > -1/2 + 2 delta)")
    return _euler_product(lambda pb: _A_factors(Ix, Jy, pb, policy), primes, al, -1.0, nS)


def A_local(I, J, p: int, s: complex = 0.0, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """One local factor prod_{ij}(1 - x_i y_j / p) sum_u h_u(x) h_u(y) p^{-u}."""
    Ix = (_shifts(I) + complex(s))[:, None]
    Jy = _shifts(J)[:, None]
    fac, _ = _A_factors(Ix, Jy, np.array([p]), policy)
    return complex(fac[0, 0])


def A_product(I, J, s=0.0, policy: TruncationPolicy = DEFAULT_POLICY):
    """A_{I,J}(s) = prod_p A_p(I + s, J).

    `s` may be an array; the result is then a list of ProductResult in the
    same order (evaluated in one vectorised pass).
    """
    sa = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    Ix = _shifts(I)[:, None] + sa[None, :]
    Jy = np.broadcast_to(_shifts(J)[:, None], (_shifts(J).size, sa.size)).astype(complex)
    val, tail = _A_arrays(Ix, Jy, policy)
    res = [ProductResult(complex(v), policy.prime_cutoff, float(t)) for v, t in zip(val, tail)]
    return res[0] if np.ndim(s) == 0 else res


def A_closed_22(I, J, s: complex = 0.0) -> complex:
    """k = l = 2 closed form 1 / zeta(2 + 2s + sum I + sum J)."""
    a, b = _shifts(I), _shifts(J)
    if a.size != 2 or b.size != 2:
        raise ValueError("closed form needs k = l = 2")
    return 1.0 / zeta(2 + 2 * complex(s) + a.sum() + b.sum())


def _check_poles(I, J, s: complex, margin: float) -> None:
    a, b = _shifts(I), _shifts(J)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            if abs(s + ai + bj) < margin:
                raise PoleError(f"s + a_{i} + b_{j} = {s + ai + bj:.3g} is within {margin} of a pole (i={i}, j={j})")


def Z_eval(I, J, s, policy: TruncationPolicy = DEFAULT_POLICY):
    """Z_{I,J}(s) = prod_{ij} zeta(1 + s + a_i + b_j) * A_{I,J}(s); `s` may be an array."""
    a, b = _shifts(I), _shifts(J)
    sa = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    for sv in sa:
        _check_poles(a, b, sv, policy.pole_margin)
    zprod = np.ones(sa.size, dtype=complex)
    for ai in a:
        for bj in b:
            zprod = zprod * zeta(1 + sa + ai + bj)
    Ares = A_product(a, b, sa, policy)
    res = [ProductResult(complex(z * r.value), policy.prime_cutoff, float(abs(z) * r.tail_estimate))
           for z, r in zip(zprod, Ares)]
    return res[0] if np.ndim(s) == 0 else res


def _abs_series_tail(absvals: np.ndarray, N: int, sigma: float, growth: int, d: float) -> float:
    """Estimate of sum_{n > N} |f(n)| n^{-sigma} from the mean of |f| on (N/2, N].

    The mean is extrapolated with (log x / log N)^growth and an extra x^d, and a
    safety factor of 2 is applied.
    """
    seg = absvals[N // 2 + 1 : N + 1]
    ns = np.arange(N // 2 + 1, N + 1, dtype=float)
    mean = float(np.mean(seg * ns**-d))
    al = sigma - d
    if al <= 1:
        return math.inf
    lnN = math.log(N)
    tot = sum(math.factorial(growth) / math.factorial(growth - i) / ((al - 1) * lnN) ** i for i in range(growth + 1))
    return 2.0 * mean * N ** (1 - al) / (al - 1) * tot


def Z_series(I: ShiftSet, J: ShiftSet, s: complex, N: int) -> SeriesResult:
    """Truncated sum_{n <= N} sigma_I(n) sigma_J(n) n^{-1-s} with a tail estimate."""
    s = complex(s)
    tI = sieve_sigma(I if isinstance(I, ShiftSet) else ShiftSet.of(I), N)
    tJ = sieve_sigma(J if isinstance(J, ShiftSet) else ShiftSet.of(J), N)
    prod = tI.values * tJ.values
    n = np.arange(N + 1, dtype=float)
    n[0] = 1.0
    terms = prod * np.exp(-(1 + s) * np.log(n))
    terms[0] = 0
    value = complex(terms.sum())
    a, b = _shifts(I), _shifts(J)
    d = max(float(np.max(-a.real)), 0.0) + max(float(np.max(-b.real)), 0.0)
    tail = _abs_series_tail(np.abs(prod), N, 1 + s.real, a.size * b.size - 1, d)
    return SeriesResult(value, N, tail)


def B_series(I: ShiftSet, J: ShiftSet, N: int) -> complex:
    """Truncated sum_{n <= N} sigma_I(n) sigma_J(n) / n (needs Re(a_i + b_j) > 0)."""
    a, b = _shifts(I), _shifts(J)
    if np.min(np.add.outer(a, b).real) <= 0:
        raise RegimeError("the series for B(I, J) needs Re(a_i + b_j) > 0; use Z_eval at s = 0")
    return Z_series(I, J, 0.0, N).value


def B_eulerized(I, J, cutoff: int = 10_000, policy: TruncationPolicy = DEFAULT_POLICY) -> ProductResult:
    """prod_{p <= cutoff} sum_u sigma_I(p^u) sigma_J(p^u) p^{-u}, completed by the
    first-order prime tail sum_{ij} sum_{p > cutoff} p^{-1-a_i-b_j}."""
    a, b = _shifts(I), _shifts(J)
    ab = np.add.outer(a, b).ravel()
    if np.min(ab.real) <= 0:
        raise RegimeError("B(I, J) as an Euler product needs Re(a_i + b_j) > 0")
    pol = TruncationPolicy(prime_cutoff=cutoff, series_len=policy.series_len, target_tol=policy.target_tol,
                           max_series_len=policy.max_series_len)
    primes = _primes(cutoff)

    def local(pb):
        logp = np.log(pb.astype(float))
        x = np.exp(-np.multiply.outer(a, logp))[..., None]
        y = np.exp(-np.multiply.outer(b, logp))[..., None]
        L = _series_len_for(np.abs(x).max(axis=0), np.abs(y).max(axis=0), pb, a.size, b.size, pol)
        hx, hy = complete_homogeneous(x, L), complete_homogeneous(y, L)
        pw = np.exp(-np.outer(np.arange(L + 1), logp))[:, :, None]
        fac = (hx * hy * pw).sum(axis=0)
        lead = np.exp(-np.multiply.outer(logp, 1 + ab)).sum(axis=1)[:, None]
        return fac, lead

    val, tail = _euler_product(local, primes, (1 + ab)[:, None], +1.0, 1)
    return ProductResult(complex(val[0]), cutoff, float(tail[0]))


def B_closed_22(I, J) -> complex:
    """k = l = 2: prod zeta(1 + a_i + b_j) / zeta(2 + sum I + sum J)."""
    a, b = _shifts(I), _shifts(J)
    if a.size != 2 or b.size != 2:
        raise ValueError("closed form needs k = l = 2")
    num = np.prod([zeta(1 + ai + bj) for ai in a for bj in b])
    return complex(num / zeta(2 + a.sum() + b.sum()))


# ---------------------------------------------------------------------------
# C and H
# ---------------------------------------------------------------------------

def _H_poles(a: np.ndarray, b: np.ndarray, i1: int, i2: int):
    """[(label, location)] of the poles of the factorized H."""
    out = [(f"1 - a_{i1} - b_{i2}", 1 - a[i1] - b[i2])]
    for k1 in range(a.size):
        for k2 in range(b.size):
            if k1 != i1 and k2 != i2:
                out.append((f"-(a_{k1} + b_{k2})", -(a[k1] + b[k2])))
    return out


def _C_factors(a, b, i1, i2, sa, pb, Gtab_I, Gtab_J, Lmax, policy):
    """C_p for primes pb and s-samples sa: returns (factor, leading) of shape (nb, S)."""
    logp = np.log(pb.astype(float))[:, None]  # (nb, 1)
    c = a[i1] + b[i2]
    s = sa[None, :]
    gI = Gtab_I[1 : Lmax + 1, :, None]  # (L, nb, 1)
    gJ = Gtab_J[1 : Lmax + 1, :, None]
    js = np.arange(1, Lmax + 1)[:, None, None]
    pw = np.exp(-js * (1 + s)[None] * logp[None])
    series = 1 + ((gI * gJ) * pw).sum(axis=0) * (1 - np.exp((c + s - 1) * logp))
    prod = np.ones_like(series)
    for k1 in range(a.size):
        for k2 in range(b.size):
            if k1 != i1 and k2 != i2:
                prod = prod * (1 - np.exp(-(1 + a[k1] + b[k2] + s) * logp))
    al = _leading_alphas(*_swapped_sets(a, b, i1, i2, sa))
    lead = -np.exp(-al[:, None, :] * logp[None]).sum(axis=0) if al.shape[0] else np.zeros_like(series)
    return series * prod, lead


def _swapped_sets(a, b, i1: int, i2: int, sa: np.ndarray):
    """(I minus a_i1) + {-b_i2 - s} and (J minus b_i2) + s + {-a_i1}, shapes (k, S) and (l, S).

    C_p(s) is the A-type local factor of these two sets, so its leading
    deviation is -e_2(x) e_2(y) p^{-2} in their variables.
    """
    S = sa.size
    Ix = np.concatenate([np.repeat(np.delete(a, i1)[:, None], S, axis=1), (-b[i2] - sa)[None, :]])
    Jy = np.concatenate([np.delete(b, i2)[:, None] + sa[None, :], np.full((1, S), -a[i1])])
    return Ix, Jy


def _C_series_len(a, b, i1, i2, sigma_min: float, p: float, policy: TruncationPolicy) -> int:
    # |G_I(1 - a, p^j)| is at most about C(j+k-1, k-1) p^{j d}
    d = max(float(np.max(np.abs(a.real))), 0.0) + max(float(np.max(np.abs(b.real))), 0.0)
    ratio = p ** (2 * d - 1 - sigma_min)
    L, _ = _tail_length(ratio, a.size + b.size - 1, 0, policy.target_tol, policy.series_len, policy.max_series_len)
    return L


def _C_arrays(I, J, i1: int, i2: int, sa: np.ndarray, policy: TruncationPolicy):
    a, b = _shifts(I), _shifts(J)
    sig = float(np.min(sa.real))
    d = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    if sig <= -0.5 + 2 * d:
        raise RegimeError(f"C needs Re s > -1/2 + 2 delta = {-0.5 + 2 * d:.4g}")
    primes = _primes(policy.prime_cutoff)
    L = _C_series_len(a, b, i1, i2, sig, 2.0, policy)
    GI = G_first_shift_table(a, i1, primes, L)
    GJ = G_first_shift_table(b, i2, primes, L)
    al = _leading_alphas(*_swapped_sets(a, b, i1, i2, sa))
    start = [0]

    def local(pb):
        i = start[0]
        start[0] += pb.size
        Lp = _C_series_len(a, b, i1, i2, sig, float(pb[0]), policy)
        sl = slice(i, i + pb.size)
        return _C_factors(a, b, i1, i2, sa, pb, GI[:, sl], GJ[:, sl], min(Lp, L), policy)

    return _euler_product(local, primes, al, -1.0, sa.size)


def C_local(I, J, i1: int, i2: int, p: int, s: complex, policy: TruncationPolicy = DEFAULT_POLICY) -> complex:
    """Local factor of C at the prime p."""
    a, b = _shifts(I), _shifts(J)
    sa = np.array([complex(s)])
    L = _C_series_len(a, b, i1, i2, sa[0].real, float(p), policy)
    pb = np.array([p])
    GI = G_first_shift_table(a, i1, pb, L)
    GJ = G_first_shift_table(b, i2, pb, L)
    fac, _ = _C_factors(a, b, i1, i2, sa, pb, GI, GJ, L, policy)
    return complex(fac[0, 0])


def C_product(I, J, i1: int, i2: int, s, policy: TruncationPolicy = DEFAULT_POLICY):
    """prod_p C_p(s); `s` may be an array."""
    sa = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    val, tail = _C_arrays(I, J, i1, i2, sa, policy)
    res = [ProductResult(complex(v), policy.prime_cutoff, float(t)) for v, t in zip(val, tail)]
    return res[0] if np.ndim(s) == 0 else res


def H_eval(I, J, i1: int, i2: int, s, policy: TruncationPolicy = DEFAULT_POLICY):
    """H(s) = zeta(a + b + s) prod_{k1 != i1, k2 != i2} zeta(1 + a_k1 + b_k2 + s) C(s)."""
    a, b = _shifts(I), _shifts(J)
    sa = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
    for label, loc in _H_poles(a, b, i1, i2):
        near = np.abs(sa - loc) < policy.pole_margin
        if near.any():
            raise PoleError(f"s is within {policy.pole_margin} of the pole s = {label}")
    zf = zeta(a[i1] + b[i2] + sa)
    for k1 in range(a.size):
        for k2 in range(b.size):
            if k1 != i1 and k2 != i2:
                zf = zf * zeta(1 + a[k1] + b[k2] + sa)
    Cres = C_product(a, b, i1, i2, sa, policy)
    res = [ProductResult(complex(z * c.value), policy.prime_cutoff, float(abs(z) * c.tail_estimate))
           for z, c in zip(zf, Cres)]
    return res[0] if np.ndim(s) == 0 else res


def _alpha_table(a, b, i1: int, i2: int, Q: int) -> np.ndarray:
    """alpha(q) = G_I(1-a, q) G_J(1-b, q) / q^{2-a-b} for q <= Q (index 0 unused)."""
    c = a[i1] + b[i2]
    primes = _primes(Q)
    Lmax = max(1, int(math.log(Q, 2)) + 1)
    GI = G_first_shift_table(a, i1, primes, Lmax)
    GJ = G_first_shift_table(b, i2, primes, Lmax)
    GG = GI * GJ
    out = np.ones(Q + 1, dtype=complex)
    out[0] = 0
    for idx, p in enumerate(primes.tolist()):
        e = 1
        pe = p
        while pe <= Q:
            # multiply entries with exact valuation e
            sel = np.arange(pe, Q + 1, pe)
            if pe * p <= Q:
                sel = sel[(sel // pe) % p != 0]
            out[sel] *= GG[e, idx]
            e += 1
            pe *= p
    q = np.arange(Q + 1, dtype=float)
    q[0] = 1
    return out * np.exp(-(2 - c) * np.log(q))


def _hurwitz_tail(M: np.ndarray, c: complex) -> np.ndarray:
    """sum_{m > M} m^{-c} for integer arrays M >= 1 (Re c > 1) by Euler-Maclaurin from max(M, 64)."""
    from .specfun import _EM_COEF

    M = np.asarray(M, dtype=np.int64)
    base = np.maximum(M, 64)
    out = np.zeros(M.shape, dtype=complex)
    # explicit terms between M and base
    for idx in np.nonzero(base > M)[0]:
        m = np.arange(M[idx] + 1, base[idx] + 1, dtype=float)
        out[idx] = np.exp(-c * np.log(m)).sum()
    B = base.astype(float)
    lb = np.log(B)
    tail = np.exp((1 - c) * lb) / (c - 1) - 0.5 * np.exp(-c * lb)
    poch = c
    pw = np.exp((-c - 1) * lb)
    for j in range(1, 7):
        tail += _EM_COEF[j] * poch * pw
        poch = poch * (c + 2 * j - 1) * (c + 2 * j)
        pw = pw / (B * B)
    return out + tail


def H_direct(I, J, i1: int, i2: int, s: complex, R_max: int, Q_max: int,
             complete_r: bool = False, policy: TruncationPolicy = DEFAULT_POLICY,
             return_tail: bool = False):
    """Truncated double series sum_{r <= R} sum_{q <= Q} c_q(r) alpha(q) r^{-(a+b+s)}.

    The r-sum is grouped by divisibility (c_q(r) = sum_{d | (q,r)} d mu(q/d)), so
    the truncated sum is evaluated exactly in O(Q log Q + R) operations.  With
    complete_r the r-sum is taken to infinity by Euler-Maclaurin, leaving only
    the q-truncation.  With return_tail, returns SeriesResult with a tail estimate
    (r-tail if not completed, plus q-tail from |c_q(r)| <= sum_{d | q} d summed
    against the fitted size of alpha(q)).
    """
    a, b = _shifts(I), _shifts(J)
    s = complex(s)
    c = a[i1] + b[i2] + s
    d = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    if s.real <= 1 + 2 * d:
        raise RegimeError("H_direct needs Re s > 1 + 2 delta")
    alpha = _alpha_table(a, b, i1, i2, Q_max)
    r = np.arange(1, R_max + 1, dtype=float)
    prefix = np.concatenate([[0], np.cumsum(np.exp(-c * np.log(r)))])
    # S(d) = sum_{r <= R, d | r} r^{-c} = d^{-c} prefix[R // d]
    dd = np.arange(1, Q_max + 1)
    Sd = np.exp(-c * np.log(dd.astype(float))) * prefix[np.minimum(R_max // dd, R_max)]
    if complete_r:
        Sd = Sd + np.exp(-c * np.log(dd.astype(float))) * _hurwitz_tail(np.maximum(R_max // dd, 0), c)
    mu = _mobius_table(Q_max)
    # inner(q) = sum_{d | q} d mu(q/d) S(d): Dirichlet convolution by a sieve over d
    inner = np.zeros(Q_max + 1, dtype=complex)
    for dv in range(1, Q_max + 1):
        mults = np.arange(dv, Q_max + 1, dv)
        inner[mults] += dv * mu[mults // dv] * Sd[dv - 1]
    value = complex((alpha[1:] * inner[1:]).sum())
    if not return_tail:
        return value
    # tails
    sig = c.real
    r_tail = 0.0
    if not complete_r:
        Md = np.maximum(R_max // dd, 1).astype(float)
        rt = dd.astype(float) ** (1 - sig) * Md ** (1 - sig) / (sig - 1)  # d * d^{-sig} * M^{1-sig}/(sig-1)
        bound_d = np.zeros(Q_max + 1)
        for dv in range(1, Q_max + 1):
            mults = np.arange(dv, Q_max + 1, dv)
            bound_d[mults] += np.abs(mu[mults // dv]) * rt[dv - 1]
        r_tail = float((np.abs(alpha[1:]) * bound_d[1:]).sum())
    # q-tail: |alpha(q)| <= C q^{-beta} with beta = 2 - 2 delta - Re(a + b), and
    # |sum_r c_q(r) r^{-c}| <= zeta(sig) tau(q); sum_{q > Q} tau(q) q^{-beta} by its integral
    qs = np.arange(1, Q_max + 1, dtype=float)
    beta = 2 - 2 * d - (a[i1] + b[i2]).real
    Calpha = float(np.max(np.abs(alpha[1:]) * qs**beta))
    zs = float(abs(zeta(sig)))
    lq = math.log(Q_max)
    tau_sum = Q_max ** (1 - beta) * (lq + 1 / (beta - 1)) / (beta - 1)
    q_tail = policy.q_tail_const * Calpha * zs * tau_sum
    return SeriesResult(value, Q_max, r_tail + q_tail)


def H_direct_naive(I, J, i1: int, i2: int, s: complex, R_max: int, Q_max: int) -> complex:
    """Term-by-term double loop; only for small R, Q (cross-checks H_direct)."""
    from .arithcore import ramanujan_sum

    a, b = _shifts(I), _shifts(J)
    alpha = _alpha_table(a, b, i1, i2, Q_max)
    c = a[i1] + b[i2] + complex(s)
    tot = 0j
    for r in range(1, R_max + 1):
        for q in range(1, Q_max + 1):
            tot += ramanujan_sum(q, r) * alpha[q] * r ** (-c)
    return tot


@lru_cache(maxsize=4)
def _mobius_table(N: int) -> np.ndarray:
    mu = np.ones(N + 1, dtype=np.int64)
    mu[0] = 0
    for p in primes_upto(N).tolist():
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def pole_residue_probe(I, J, i1: int, i2: int, distances=(1e-2, 1e-3), direction: complex = 1.0,
                       policy: TruncationPolicy = DEFAULT_POLICY) -> tuple[list[complex], float]:
    """(s - s0) H(s) at s = s0 + d * direction for each d, with s0 = 1 - a_{i1} - b_{i2}.

    Returns the residue estimates and max |ratio - 1| between consecutive ones.
    """
    a, b = _shifts(I), _shifts(J)
    s0 = 1 - a[i1] - b[i2]
    ests = []
    for dist in distances:
        s = s0 + dist * direction
        ests.append(complex((s - s0) * H_eval(a, b, i1, i2, s, policy).value))
    spread = max(abs(ests[i + 1] / ests[i] - 1) for i in range(len(ests) - 1))
    return ests, float(spread)
