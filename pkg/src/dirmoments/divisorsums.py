"""Additive divisor sums D_f(r) = sum_{m - n = r} sigma_I(m) sigma_J(n) f(m, n).

Brute-force evaluation over a sieved box, the smoothed kernel f_r used by the
moment problem, and the conjectured main term built from the constants
c_{i1,i2}, the Ramanujan-sum q-series and an x-integral of the kernel.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .arithcore import BudgetError, ShiftSet, divisors, factorize, sieve_sigma, tau_k
from .eulerprod import (
    DEFAULT_POLICY,
    SeriesResult,
    TruncationPolicy,
    _alpha_table,
    _euler_product,
    _mobius_table,
    _primes,
    _shifts,
    G_first_shift_table,
)
from .specfun import zeta
from .weights import (
    DEFAULT_QUAD,
    OmegaWeight,
    PhiCutoff,
    QuadratureSpec,
    _adaptive,
    dyadic_window,
    gauss_nodes,
    omega_hat,
    phi_eval,
)

DEFAULT_POINT_CAP = 10_000_000

# breakpoints of W0 on [1, 2]: ramps of h and of its sqrt(2)-dilates
_W0_BREAKS = np.array(sorted({1.0, 1.25, 1.75, 2.0, 2**0.5, 1.25 * 2**0.5, 1.25 / 2**0.5, 1.75 / 2**0.5}))
_W0_BREAKS = _W0_BREAKS[(_W0_BREAKS >= 1) & (_W0_BREAKS <= 2)]


class TailTooLargeError(RuntimeError):
    """The q-series tail exceeds the requested tolerance."""


@dataclass(frozen=True)
class KernelSpec:
    """f_r(x, y) = W(x/M) W(y/N) phi(x/K) phi(y/K) omega_hat(log(1 + r/y) / 2 pi) / T.

    With uses_w0 False the dyadic windows are replaced by (xy)^{-1/2} and the
    support is cut by phi alone.
    """

    M: float
    N: float
    K: float
    r: int
    omega: OmegaWeight
    phi: PhiCutoff = field(default_factory=PhiCutoff)
    uses_w0: bool = True

    def __post_init__(self):
        if self.r == 0:
            raise ValueError("r = 0 is the diagonal; it is handled by the moments module")
        if min(self.M, self.N, self.K) <= 0:
            raise ValueError("M, N, K must be positive")

    @classmethod
    def desk(cls, X: float, r: int = 1, T: float | None = None, b: float = 0.8,
             K_factor: float = 4.0) -> "KernelSpec":
        """Square box M = N = X with K = K_factor * X (phi = 1 on the box) and T = X by default."""
        T = float(X if T is None else T)
        return cls(float(X), float(X), K_factor * X, int(r), OmegaWeight.from_T(T, b))

    def with_r(self, r: int) -> "KernelSpec":
        return KernelSpec(self.M, self.N, self.K, int(r), self.omega, self.phi, self.uses_w0)

    @property
    def T(self) -> float:
        return self.omega.T

    def x_range(self) -> tuple[float, float]:
        top = self.K * (1 + self.phi.rho)
        if self.uses_w0:
            return self.M, min(2 * self.M, top)
        return 1.0, top

    def y_range(self) -> tuple[float, float]:
        top = self.K * (1 + self.phi.rho)
        if self.uses_w0:
            return self.N, min(2 * self.N, top)
        return 1.0, top

    def x_breaks(self) -> np.ndarray:
        """Points where f(x, x - r) is not analytic, inside the x-support."""
        pts = [self.K, self.K * (1 + self.phi.rho), self.K + self.r, self.K * (1 + self.phi.rho) + self.r]
        if self.uses_w0:
            pts += list(self.M * _W0_BREAKS) + list(self.N * _W0_BREAKS + self.r)
        return np.array(sorted(pts))


def _omega_factor(spec: KernelSpec, y: np.ndarray, direct_max: int = 256) -> np.ndarray:
    """omega_hat(log(1 + r/y) / 2 pi) / T for an array of y.

    Large arrays go through a Chebyshev interpolant on the (narrow) u-range,
    checked against direct evaluation at a few points.
    """
    y = np.asarray(y, dtype=float)
    u = np.log1p(spec.r / y) / (2 * math.pi)
    if u.size <= direct_max:
        return np.real_if_close(omega_hat(spec.omega, u)) / spec.T
    lo, hi = float(u.min()), float(u.max())
    if hi - lo < 1e-300:
        return np.full(u.shape, omega_hat(spec.omega, lo) / spec.T)
    # degree from the oscillation count across [lo, hi]
    deg = int(min(200, 24 + 4 * (hi - lo) * spec.omega.c2 * spec.T))
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    un = lo + (hi - lo) * (nodes + 1) / 2
    vals = omega_hat(spec.omega, un)
    cr = _cheb.chebfit(nodes, vals.real, deg)
    ci = _cheb.chebfit(nodes, vals.imag, deg)
    t = 2 * (u - lo) / (hi - lo) - 1
    out = _cheb.chebval(t, cr) + 1j * _cheb.chebval(t, ci)
    probe = np.linspace(0, u.size - 1, 5).astype(int)
    exact = omega_hat(spec.omega, u[probe])
    scale = float(np.max(np.abs(vals)))
    if np.max(np.abs(exact - out[probe])) > 1e-11 * scale:
        out = omega_hat(spec.omega, u)
    return np.real_if_close(out) / spec.T


def kernel_eval(spec: KernelSpec, x, y):
    """f_r(x, y); zero outside the support box."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    if spec.uses_w0:
        wx = dyadic_window(x / spec.M) / math.sqrt(spec.M)
        wy = dyadic_window(y / spec.N) / math.sqrt(spec.N)
    else:
        wx = 1.0 / np.sqrt(x)
        wy = 1.0 / np.sqrt(y)
    base = np.asarray(wx * wy * phi_eval(spec.phi, x / spec.K) * phi_eval(spec.phi, y / spec.K))
    out = np.zeros(x.shape, dtype=complex)
    live = (base != 0) & (y > 0) & (y + spec.r > 0)
    if live.any():
        out[live] = base[live] * _omega_factor(spec, y[live])
    out = np.real_if_close(out)
    return out if out.ndim else out.item()


@lru_cache(maxsize=16)
def _sigma_table_cached(shifts: tuple, upper: int) -> np.ndarray:
    return sieve_sigma(ShiftSet.of(shifts), upper).values


def _sigma_upto(I, upper: int) -> np.ndarray:
    shifts = tuple(complex(a) for a in _shifts(I))
    # round the table size up so nearby requests share one sieve
    size = 1 << max(10, math.ceil(math.log2(upper + 1)))
    return _sigma_table_cached(shifts, size)


def brute_D(f, I, J, r: int, box: tuple | None = None, cap: int = DEFAULT_POINT_CAP) -> complex:
    """sum_{m - n = r} sigma_I(m) sigma_J(n) f(m, n) by one loop over n (vectorised).

    `f` is a KernelSpec or a vectorised callable f(m, n); for a callable the
    support box ((m_lo, m_hi), (n_lo, n_hi)) is required.
    """
    if isinstance(f, KernelSpec):
        if f.r != r:
            f = f.with_r(r)
        (mlo, mhi), (nlo, nhi) = f.x_range(), f.y_range()
        fn = lambda m, n: kernel_eval(f, m, n)
    else:
        if box is None:
            raise ValueError("a callable kernel needs its support box")
        (mlo, mhi), (nlo, nhi) = box
        fn = f
    lo = max(math.ceil(nlo), math.ceil(mlo) - r, 1)
    hi = min(math.floor(nhi), math.floor(mhi) - r)
    if hi < lo:
        return 0j
    if hi - lo + 1 > cap:
        raise BudgetError(f"support has {hi - lo + 1} points, above cap {cap}")
    n = np.arange(lo, hi + 1, dtype=np.int64)
    m = n + r
    if m[0] < 1:
        raise ValueError("m = n + r must stay positive")
    sI = _sigma_upto(I, int(m[-1]))
    sJ = _sigma_upto(J, int(n[-1]))
    vals = sI[m] * sJ[n] * fn(m.astype(float), n.astype(float))
    return complex(np.sum(vals))


def shift_constant(I, J, i1: int, i2: int) -> complex:
    """c_{i1,i2} = prod_{j1 != i1} zeta(1 - a_i1 + a_j1) prod_{j2 != i2} zeta(1 - b_i2 + b_j2)."""
    if isinstance(I, ShiftSet):
        I.require_distinct()
    if isinstance(J, ShiftSet):
        J.require_distinct()
    a, b = _shifts(I), _shifts(J)
    args = [1 - a[i1] + a[j] for j in range(a.size) if j != i1]
    args += [1 - b[i2] + b[j] for j in range(b.size) if j != i2]
    if not args:
        return 1 + 0j
    return complex(np.prod(zeta(np.array(args))))


def _ramanujan_column(r: int, Q: int) -> np.ndarray:
    """c_q(r) for q = 0..Q (index 0 unused) from c_q(r) = sum_{d | (q, r)} d mu(q/d)."""
    mu = _mobius_table(Q)
    out = np.zeros(Q + 1, dtype=np.int64)
    for d in divisors(abs(r)):
        if d > Q:
            break
        out[d::d] += d * mu[1 : Q // d + 1]
    return out


def _delta_of(a, b) -> float:
    return max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))


def q_series_direct(I, J, i1: int, i2: int, r: int, Q: int,
                    policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """sum_{q <= Q} c_q(r) G_I G_J / q^{2-a-b}, tail C tau_2(r) Q^{-1+4 delta}."""
    a, b = _shifts(I), _shifts(J)
    alpha = _alpha_table(a, b, i1, i2, Q)
    cq = _ramanujan_column(r, Q)
    value = complex((cq[1:] * alpha[1:]).sum())
    tail = policy.q_tail_const * tau_k(2, abs(r)) * Q ** (-1 + 4 * _delta_of(a, b))
    return SeriesResult(value, Q, tail)


def _local_r_factor(r: int, p: int, GG: np.ndarray, c: complex, e: int) -> complex:
    """sum_j c_{p^j}(r) alpha(p^j) for p^e || r (the sum stops at j = e + 1)."""
    tot = 1 + 0j
    for j in range(1, e + 2):
        if j <= e:
            cj = p**j - p ** (j - 1)
        else:
            cj = -(p**e)
        tot += cj * GG[j] * p ** (-j * (2 - c))
    return tot


def q_series(I, J, i1: int, i2: int, r: int, policy: TruncationPolicy = DEFAULT_POLICY) -> SeriesResult:
    """sum_q c_q(r) alpha(q) as the Euler product over p of sum_j c_{p^j}(r) alpha(p^j).

    For p not dividing r the local factor is 1 - alpha(p); for p^e || r it is a
    finite sum up to j = e + 1.  Primes above the cutoff enter through the
    leading term of alpha(p).
    """
    if r == 0:
        raise ValueError("r = 0 is not an off-diagonal shift")
    a, b = _shifts(I), _shifts(J)
    c = a[i1] + b[i2]
    rfac = dict(factorize(abs(r)))
    primes = _primes(policy.prime_cutoff)
    emax = max(rfac.values(), default=0) + 1
    GI = G_first_shift_table(a, i1, primes, emax)
    GJ = G_first_shift_table(b, i2, primes, emax)
    GG = GI * GJ
    ao, bo = np.delete(a, i1), np.delete(b, i2)
    al = (2 - c + np.add.outer(ao, bo)).ravel()
    pos = {p: i for i, p in enumerate(primes.tolist())}

    def local(pb):
        idx = np.array([pos[p] for p in pb.tolist()])
        lp = np.log(pb.astype(float))
        fac = 1 - GG[1, idx] * np.exp(-(2 - c) * lp)
        for p, e in rfac.items():
            if p in pos and pos[p] in set(idx.tolist()):
                k = int(np.nonzero(idx == pos[p])[0][0])
                fac[k] = _local_r_factor(r, p, GG[:, pos[p]], c, e)
        lead = -np.exp(-np.multiply.outer(lp, al)).sum(axis=1) if al.size else np.zeros(pb.size)
        return fac[:, None], lead[:, None]

    val, tail = _euler_product(local, primes, al[:, None], -1.0, 1)
    value = complex(val[0])
    # prime factors of r beyond the cutoff replace their 1 - alpha(p) factor
    for p, e in rfac.items():
        if p > policy.prime_cutoff:
            G1 = G_first_shift_table(a, i1, [p], e + 1)[:, 0] * G_first_shift_table(b, i2, [p], e + 1)[:, 0]
            value *= _local_r_factor(r, p, G1, c, e) / (1 - G1[1] * p ** (-(2 - c)))
    return SeriesResult(value, policy.prime_cutoff, float(tail[0]))


def x_integrals(spec: KernelSpec, I, J, q: QuadratureSpec = DEFAULT_QUAD) -> np.ndarray:
    """int f_r(x, x - r) x^{-a_i1} (x - r)^{-b_i2} dx for every (i1, i2); shape (k, l)."""
    a, b = _shifts(I), _shifts(J)
    (mlo, mhi), (nlo, nhi) = spec.x_range(), spec.y_range()
    lo, hi = max(mlo, nlo + spec.r), min(mhi, nhi + spec.r)
    if hi <= lo:
        return np.zeros((a.size, b.size), dtype=complex)
    br = spec.x_breaks()
    edges = np.unique(np.concatenate([[lo, hi], br[(br > lo) & (br < hi)]]))

    def integrate(n):
        xs, ws = gauss_nodes(n)
        x = (edges[:-1, None] + np.diff(edges)[:, None] * xs[None, :]).ravel()
        w = (np.diff(edges)[:, None] * ws[None, :]).ravel()
        fx = kernel_eval(spec, x, x - spec.r) * w
        lx, ly = np.log(x), np.log(x - spec.r)
        powa = np.exp(-np.multiply.outer(a, lx))
        powb = np.exp(-np.multiply.outer(b, ly))
        vals = np.einsum("n,in,jn->ij", fx, powa, powb)
        return vals, float(np.sum(np.abs(fx)))

    vals, _ = _adaptive(integrate, 32, q, "kernel x-integral")
    return vals


def adc_main_term(spec: KernelSpec, I, J, r: int | None = None, q_method: str = "euler",
                  q_tol: float | None = None, policy: TruncationPolicy = DEFAULT_POLICY,
                  quad: QuadratureSpec = DEFAULT_QUAD, return_parts: bool = False):
    """sum_{i1,i2} c_{i1,i2} * q-series(r) * int f_r(x, x - r) x^{-a_i1} (x - r)^{-b_i2} dx.

    q_method "euler" (default) uses the Euler product of the q-series; "direct"
    truncates the q-sum at an adaptively doubled Q until the tail bound is
    below q_tol.  A q-tail above q_tol raises TailTooLargeError.
    """
    r = spec.r if r is None else int(r)
    if r == 0:
        raise ValueError("r = 0 is rejected: the diagonal belongs to the moments module")
    if spec.r != r:
        spec = spec.with_r(r)
    a, b = _shifts(I), _shifts(J)
    ints = x_integrals(spec, a, b, quad)
    total = 0j
    qtail = 0.0
    parts = {}
    for i1 in range(a.size):
        for i2 in range(b.size):
            if ints[i1, i2] == 0:
                continue
            cst = shift_constant(I, J, i1, i2)
            if q_method == "euler":
                qs = q_series(a, b, i1, i2, r, policy)
            elif q_method == "direct":
                Q = 1024
                qs = q_series_direct(a, b, i1, i2, r, Q, policy)
                while q_tol is not None and qs.tail_estimate > q_tol and Q < 1 << 20:
                    Q *= 2
                    qs = q_series_direct(a, b, i1, i2, r, Q, policy)
            else:
                raise ValueError(f"unknown q_method {q_method!r}")
            if q_tol is not None and qs.tail_estimate > q_tol:
                raise TailTooLargeError(f"q-series tail {qs.tail_estimate:.3g} above {q_tol:.3g}")
            term = cst * qs.value * ints[i1, i2]
            parts[(i1, i2)] = term
            total += term
            qtail += abs(cst * ints[i1, i2]) * qs.tail_estimate
    if return_parts:
        return total, parts, qtail
    return total


@dataclass(frozen=True)
class AdcHypothesis:
    """Exponents of the additive divisor hypothesis: error H P^C X^{theta + eps} for |r| <= X^beta."""

    theta: float = 0.75
    C: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        if not 0.5 <= self.theta < 1:
            raise ValueError("theta must lie in [1/2, 1)")
        if self.C < 0:
            raise ValueError("C must be >= 0")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")


@dataclass
class AdcComparison:
    r: int
    brute: complex
    main: complex
    delta: complex
    runtime_ms: int

    @property
    def relative(self) -> float:
        return abs(self.delta) / abs(self.main) if self.main else math.inf


@dataclass
class AdcBoxSummary:
    X: float
    comparisons: list
    sum_abs_delta: float
    sum_abs_main: float
    relative: float
    hypothesis_ratio: float


def adc_sweep(I, J, boxes: Sequence[float], r_range: Sequence[int], hyp: AdcHypothesis = AdcHypothesis(),
              kernel: Callable[[float], KernelSpec] = KernelSpec.desk,
              policy: TruncationPolicy = DEFAULT_POLICY) -> list[AdcBoxSummary]:
    """brute_D against adc_main_term over boxes and shifts r.

    I and J may be shift sets or callables X -> shifts (to scale shifts with the box).
    The aggregate relative discrepancy per box is sum |Delta| / sum |main|.
    """
    rs = sorted(int(r) for r in r_range)
    if any(r == 0 for r in rs):
        raise ValueError("r = 0 is not part of an additive divisor sweep")
    out = []
    for X in boxes:
        if rs and max(abs(r) for r in rs) > X**hyp.beta:
            raise ValueError(f"|r| must stay below X^beta = {X ** hyp.beta:.3g}")
        Ix = I(X) if callable(I) else I
        Jx = J(X) if callable(J) else J
        comps = []
        for r in rs:
            t0 = time.perf_counter()
            spec = kernel(X).with_r(r)
            br = brute_D(spec, Ix, Jx, r)
            mn = adc_main_term(spec, Ix, Jx, r, policy=policy)
            comps.append(AdcComparison(r, br, mn, br - mn, int(1000 * (time.perf_counter() - t0))))
        sd = float(sum(abs(c.delta) for c in comps))
        sm = float(sum(abs(c.main) for c in comps))
        H = max((abs(r) for r in rs), default=0)
        out.append(AdcBoxSummary(float(X), comps, sd, sm, sd / sm if sm else 0.0,
                                 sd / (H * X**hyp.theta) if H else 0.0))
    return out


def desk_shifts(X: float, k: int = 2, offset: float = 0.0) -> ShiftSet:
    """Distinct real shifts (j + offset) / (10 log X), j = 1..k, centred at zero."""
    L = 10 * math.log(X)
    vals = [(j - (k + 1) / 2 + offset) / L for j in range(1, k + 1)]
    return ShiftSet.of(vals, min_separation=0.5 / L)
