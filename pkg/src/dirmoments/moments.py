"""Mean values of long Dirichlet polynomials with shifted divisor coefficients.

Computes

    D = int omega(t) A(1/2 + it) B(1/2 - it) dt,
    A(s) = sum_m sigma_I(m) phi(m/K) m^{-s},  B(s) = sum_n sigma_J(n) phi(n/K) n^{-s},

directly, and compares it with the diagonal main term M0 and the single-swap
term M1, both evaluated as vertical contour integrals.  Also holds the exact
rational layer: gamma_{k,l}(n), w_{k,l}(x), g_k and the k = l = 2 quartic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import chebyshev as _cheb

from .arithcore import ShiftSet, sieve_sigma
from .eulerprod import (
    DEFAULT_POLICY,
    ProductResult,
    TruncationPolicy,
    _A_arrays,
    _euler_product,
    _primes,
)
from .specfun import PoleError, zeta
from .weights import (
    OmegaWeight,
    PhiCutoff,
    gauss_nodes,
    omega_eval,
    omega_hat,
    omega_mellin,
    phi2,
    phi_eval,
)

# ---------------------------------------------------------------------------
# configuration


def log_scaled_shifts(T: float, k: int = 2, offset: float = 0.0) -> ShiftSet:
    """Distinct real shifts (j - (k+1)/2 + offset) / (10 log T), j = 1..k."""
    L = 10 * math.log(T)
    vals = [(j - (k + 1) / 2 + offset) / L for j in range(1, k + 1)]
    return ShiftSet.of(vals, min_separation=0.5 / L, label="log-scaled")


@dataclass(frozen=True)
class MomentConfig:
    """Inputs of the mean value; K = T^{1 + eta} is always derived, never stored."""

    I: ShiftSet
    J: ShiftSet
    T: float
    eta: float
    omega: OmegaWeight | None = None
    phi: PhiCutoff = field(default_factory=PhiCutoff)
    policy: TruncationPolicy = DEFAULT_POLICY
    log_scaled: bool = False

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")
        if self.omega is None:
            object.__setattr__(self, "omega", OmegaWeight.from_T(self.T))
        for S in (self.I, self.J):
            if S.min_separation > 0:
                S.require_distinct(0.0)
        if self.log_scaled:
            L = math.log(self.T)
            for a in self.I.shifts + self.J.shifts:
                if abs(a) * L > 1:
                    raise ValueError("log-scaled shifts must satisfy |a| <= 1/log T")

    @classmethod
    def log_scaled_default(cls, T: float, eta: float = 0.2, k: int = 2, l: int = 2, **kw) -> "MomentConfig":
        """Shifts of size 1/log T: I centred at zero, J offset by 0.3 / (10 log T)."""
        return cls(log_scaled_shifts(T, k, 0.0), log_scaled_shifts(T, l, 0.3), float(T), eta,
                   log_scaled=True, **kw)

    @property
    def K(self) -> float:
        return self.T ** (1 + self.eta)

    @property
    def K_prime(self) -> int:
        return int(math.floor(self.K * (1 + self.phi.rho)))

    @property
    def delta(self) -> float:
        return max(abs(a) for a in self.I.shifts + self.J.shifts)

    def lint(self) -> list[str]:
        """Warnings about parameters outside the range the asymptotics cover."""
        out = []
        if self.eta <= 0:
            out.append("eta = 0: K = T is outside the long-polynomial range")
        if self.I.k == 2 and self.J.k == 2 and self.eta >= 1 / 3:
            out.append("k = l = 2 with eta >= 1/3 is outside the unconditional range")
        return out


@dataclass
class MomentReport:
    T: float
    direct: complex
    diag_direct: complex
    m0: complex
    m1: complex
    residual: complex
    per_swap_terms: dict
    tails: dict

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / abs(self.direct)


# ---------------------------------------------------------------------------
# direct evaluation


def _coefficients(cfg: MomentConfig):
    """m = 1..K', a_m = sigma_I(m) phi(m/K) m^{-1/2}, b_m likewise with J."""
    Kp = cfg.K_prime
    m = np.arange(1, Kp + 1, dtype=float)
    w = phi_eval(cfg.phi, m / cfg.K) / np.sqrt(m)
    sI = sieve_sigma(cfg.I, Kp).values[1:]
    sJ = sieve_sigma(cfg.J, Kp).values[1:]
    keep = w > 0
    return m[keep], (sI * w)[keep], (sJ * w)[keep]


def _t_integral(cfg: MomentConfig, spacing: float, block: int = 512):
    """Trapezoid rule for int omega(t) A(1/2+it) B(1/2-it) dt on a uniform t-grid.

    omega vanishes to all orders at the ends of its support and the integrand
    is band-limited to |freq| <= log K', so the rule is spectrally accurate once
    2 pi / spacing clears log K' with room for the decay of omega_hat.
    """
    m, am, bm = _coefficients(cfg)
    lo, hi = cfg.omega.support
    n = int(math.ceil((hi - lo) / spacing))
    t = lo + (hi - lo) * np.arange(n + 1) / n
    h = (hi - lo) / n
    wt = omega_eval(cfg.omega, t) * h
    live = np.nonzero(wt > 0)[0]
    logm = np.log(m)
    vals = np.zeros(t.size, dtype=complex)
    for i in range(0, live.size, block):
        idx = live[i : i + block]
        E = np.exp(-1j * np.multiply.outer(t[idx], logm))
        vals[idx] = (E @ am) * (E.conj() @ bm)
    return t, wt, vals


def direct_moment(cfg: MomentConfig, spacing: float | None = None, return_split: bool = False):
    """D by the t-integral identity; with return_split also (diag, off, error estimate).

    The error estimate is the change when every other grid point is dropped.
    """
    if spacing is None:
        # Nyquist margin: 2 pi / spacing = 2.5 log K'
        spacing = 2 * math.pi / (2.5 * math.log(cfg.K_prime))
    t, wt, vals = _t_integral(cfg, spacing)
    total = complex((wt * vals).sum())
    coarse = complex((2 * wt[::2] * vals[::2]).sum())
    err = abs(total - coarse)
    if not return_split:
        return total
    diag = diag_direct(cfg)
    return total, diag, total - diag, err


def _omega_hat_interp(w: OmegaWeight, umax: float, deg: int | None = None):
    """Chebyshev interpolant of omega_hat on [0, umax] (omega_hat(-u) = conj omega_hat(u))."""
    if deg is None:
        deg = int(min(400, 40 + 3 * umax * w.c2 * w.T))
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    u = umax * (nodes + 1) / 2
    v = omega_hat(w, u)
    cr, ci = _cheb.chebfit(nodes, v.real, deg), _cheb.chebfit(nodes, v.imag, deg)

    def f(x):
        x = np.asarray(x, dtype=float)
        z = 2 * np.abs(x) / umax - 1
        out = _cheb.chebval(z, cr) + 1j * _cheb.chebval(z, ci)
        return np.where(x < 0, out.conj(), out)

    return f


def direct_moment_pairs(cfg: MomentConfig, window: float | None = None, max_pairs: int = 50_000_000):
    """Windowed pair sum over |log(m/n)| <= window (default 10 T0^{-0.95}).

    Returns (value, neglected_bound, pair_count).  The neglected mass is bounded by
    |omega_hat(u)| <= int |omega'| / (2 pi |u|) = 1/(pi |u|) on the discarded pairs.
    """
    if window is None:
        window = 10 * cfg.omega.T0 ** (-0.95)
    m, am, bm = _coefficients(cfg)
    logm = np.log(m)
    umax = window / (2 * math.pi)
    oh = _omega_hat_interp(cfg.omega, umax)
    # pairs (i, j) with |log m_i - log m_j| <= window
    j_hi = np.searchsorted(logm, logm + window, side="right")
    j_lo = np.searchsorted(logm, logm - window, side="left")
    count = int((j_hi - j_lo).sum())
    if count > max_pairs:
        raise MemoryError(f"{count} pairs above max_pairs={max_pairs}")
    total = 0j
    inside_abs = 0.0
    for i in range(m.size):
        sl = slice(j_lo[i], j_hi[i])
        u = (logm[i] - logm[sl]) / (2 * math.pi)
        total += am[i] * np.sum(bm[sl] * oh(u))
        inside_abs += abs(am[i]) * np.sum(np.abs(bm[sl]))
    outside_abs = float(np.sum(np.abs(am)) * np.sum(np.abs(bm)) - inside_abs)
    bound = max(outside_abs, 0.0) / (math.pi * umax)
    return complex(total), bound, count


def diag_direct(cfg: MomentConfig) -> complex:
    """omega_hat(0) sum_m sigma_I(m) sigma_J(m) phi(m/K)^2 / m."""
    m, am, bm = _coefficients(cfg)
    w0 = complex(omega_hat(cfg.omega, 0.0))
    return complex(w0 * np.sum(am * bm))


# ---------------------------------------------------------------------------
# vectorised Z and A


def _A_vec(Ix: np.ndarray, Jy: np.ndarray, policy: TruncationPolicy):
    """A over sample columns; k or l = 1 gives 1 and k = l = 2 the zeta quotient."""
    k, l = Ix.shape[0], Jy.shape[0]
    if k == 1 or l == 1:
        return np.ones(Ix.shape[1], dtype=complex), np.zeros(Ix.shape[1])
    if k == 2 and l == 2:
        return 1.0 / zeta(2 + Ix.sum(axis=0) + Jy.sum(axis=0)), np.zeros(Ix.shape[1])
    return _A_arrays(Ix, Jy, policy)


def _Z_vec(a: np.ndarray, b: np.ndarray, s: np.ndarray, policy: TruncationPolicy):
    """Z_{a,b}(s) = prod zeta(1 + s + a_i + b_j) A_{a,b}(s) for an array of s."""
    z = np.ones(s.size, dtype=complex)
    for ai in a:
        for bj in b:
            z = z * zeta(1 + s + ai + bj)
    A, tail = _A_vec(a[:, None] + s[None, :], np.repeat(b[:, None], s.size, axis=1), policy)
    return z * A, np.abs(z) * tail


# ---------------------------------------------------------------------------
# vertical contour integrals


@dataclass
class ContourResult:
    value: complex
    quad_error: float
    tail: float
    height: float
    nodes: int


def _panel_edges(gap: float, height: float, far: float) -> np.ndarray:
    """Non-negative panel edges: geometric from gap/4 near y = 0, then width `far`."""
    e = [0.0]
    w = max(gap / 4, 1e-3)
    while e[-1] < height:
        e.append(min(e[-1] + w, height))
        w = min(w * 1.3, far)
    return np.array(e)


def vertical_integral(F, c: float, gap: float, height: float = 2000.0, far: float = 0.5,
                      order: int = 16, rel_tol: float = 1e-10, block: float = 25.0) -> ContourResult:
    """(1/2 pi i) int_{c - iH}^{c + iH} F(s) ds with H grown in blocks until negligible.

    `gap` is the distance from the line to the nearest singularity (sets the
    panel grading near Im s = 0).  The quadrature error compares Gauss rules of
    orders `order` and `order - 4` on the same panels; the tail extrapolates the
    last two blocks geometrically.
    """
    xs, ws = gauss_nodes(order)
    xs2, ws2 = gauss_nodes(order - 4)
    edges = _panel_edges(gap, height, far)

    def panel_sum(e0, e1, xs, ws):
        lo, hi = e0, e1
        y = (lo[:, None] + (hi - lo)[:, None] * xs[None, :]).ravel()
        w = ((hi - lo)[:, None] * ws[None, :]).ravel()
        y = np.concatenate([y, -y])
        w = np.concatenate([w, w])
        return (F(c + 1j * y) * w).sum() / (2 * math.pi)

    total = 0j
    alt = 0j
    prev_blocks = []
    start = 0
    nodes = 0
    Hreached = 0.0
    while start < edges.size - 1:
        top = edges[start] + block
        stop = int(np.searchsorted(edges, top, side="right")) - 1
        stop = max(stop, start + 1)
        e0, e1 = edges[start:stop], edges[start + 1 : stop + 1]
        part = panel_sum(e0, e1, xs, ws)
        alt += panel_sum(e0, e1, xs2, ws2)
        total += part
        nodes += 2 * e0.size * (2 * order - 4)
        Hreached = float(e1[-1])
        prev_blocks.append(abs(part))
        start = stop
        if len(prev_blocks) >= 3 and max(prev_blocks[-2:]) <= rel_tol * abs(total):
            break
    if len(prev_blocks) >= 2 and prev_blocks[-2] > 0:
        rho = min(prev_blocks[-1] / prev_blocks[-2], 0.9)
        tail = prev_blocks[-1] * rho / (1 - rho)
    else:
        tail = prev_blocks[-1] if prev_blocks else 0.0
    if Hreached >= height - 1e-9 and prev_blocks[-1] > rel_tol * abs(total):
        tail = max(tail, prev_blocks[-1])
    return ContourResult(complex(total), float(abs(total - alt)), float(tail), Hreached, nodes)


def _m0_abscissa(cfg: MomentConfig) -> float:
    return min(0.5, max(4 * cfg.delta, 0.05))


def m0_contour(cfg: MomentConfig, c: float | None = None, rel_tol: float = 1e-10,
               return_details: bool = False):
    """(omega_hat(0) / 2 pi i) int_{(c)} K^s Phi_2(s) Z_{I,J}(s) ds."""
    c = _m0_abscissa(cfg) if c is None else c
    a, b = cfg.I.as_array(), cfg.J.as_array()
    poles = [-(ai + bj) for ai in a for bj in b] + [0.0]
    gap = min(c - p.real for p in np.asarray(poles, dtype=complex))
    if gap <= cfg.policy.pole_margin:
        raise PoleError(f"abscissa c = {c} is not clear of the poles (gap {gap:.3g})")
    lnK = math.log(cfg.K)

    def F(s):
        Z, _ = _Z_vec(a, b, s, cfg.policy)
        return np.exp(s * lnK) * phi2(cfg.phi, s) * Z

    res = vertical_integral(F, c, gap, rel_tol=rel_tol)
    w0 = complex(omega_hat(cfg.omega, 0.0))
    out = ContourResult(w0 * res.value, abs(w0) * res.quad_error, abs(w0) * res.tail, res.height, res.nodes)
    return out if return_details else out.value


def shift_constant_pair(a: np.ndarray, b: np.ndarray, i1: int, i2: int) -> complex:
    """prod_{j != i1} zeta(1 - a_i1 + a_j) prod_{j != i2} zeta(1 - b_i2 + b_j)."""
    args = [1 - a[i1] + a[j] for j in range(a.size) if j != i1]
    args += [1 - b[i2] + b[j] for j in range(b.size) if j != i2]
    return complex(np.prod(zeta(np.array(args)))) if args else 1 + 0j


def m1_swap_term(cfg: MomentConfig, i1: int, i2: int, c: float | None = None, rel_tol: float = 1e-10):
    """One (i1, i2) term of M1 with the t-integral taken inside:

        c_{i1,i2} (2 pi)^{a+b} (1/2 pi i) int_{(c)} Phi_2(s) (2 pi K)^s W(1 - a - b - s)
            Z_{I - a, J - b}(s) zeta(1 - a - b - s) A(I', J') ds,

    with W(z) = int omega(t) t^{z-1} dt, a = a_i1, b = b_i2, and the swapped
    sets I' = (I - a) + {-b - s}, J' = (J - b) + s + {-a}.
    """
    a, b = cfg.I.as_array(), cfg.J.as_array()
    ai, bi = a[i1], b[i2]
    ao, bo = np.delete(a, i1), np.delete(b, i2)
    c = 4 * cfg.delta if c is None else c
    poles = [-(x + y) for x in ao for y in bo] + [-(ai + bi), 0.0]
    gap = min(c - complex(p).real for p in poles)
    if gap <= cfg.policy.pole_margin:
        raise PoleError(f"abscissa c = {c} is not clear of the poles (gap {gap:.3g})")
    cst = shift_constant_pair(a, b, i1, i2)
    ln2piK = math.log(2 * math.pi * cfg.K)

    def F(s):
        Z, _ = _Z_vec(ao, bo, s, cfg.policy)
        Ix = np.concatenate([np.repeat(ao[:, None], s.size, axis=1), (-bi - s)[None, :]])
        Jy = np.concatenate([bo[:, None] + s[None, :], np.full((1, s.size), -ai)])
        A, _ = _A_vec(Ix, Jy, cfg.policy)
        Wm = omega_mellin(cfg.omega, 1 - ai - bi - s)
        return phi2(cfg.phi, s) * np.exp(s * ln2piK) * Wm * Z * zeta(1 - ai - bi - s) * A

    res = vertical_integral(F, c, gap, rel_tol=rel_tol)
    pref = cst * (2 * math.pi) ** (ai + bi)
    return ContourResult(pref * res.value, abs(pref) * res.quad_error, abs(pref) * res.tail, res.height, res.nodes)


def m1_contour(cfg: MomentConfig, c: float | None = None, rel_tol: float = 1e-10, return_details: bool = False):
    """Sum of the single-swap terms; with return_details also the per-(i1, i2) results."""
    for S in (cfg.I, cfg.J):
        S.require_distinct()
    parts = {}
    for i1 in range(cfg.I.k):
        for i2 in range(cfg.J.k):
            parts[(i1, i2)] = m1_swap_term(cfg, i1, i2, c, rel_tol)
    total = complex(sum(p.value for p in parts.values()))
    return (total, parts) if return_details else total


def consistency_report(cfgs) -> list[MomentReport]:
    """direct vs M0 + M1 for each configuration, in the given order."""
    out = []
    for cfg in cfgs:
        d, diag, off, derr = direct_moment(cfg, return_split=True)
        m0 = m0_contour(cfg, return_details=True)
        m1, parts = m1_contour(cfg, return_details=True)
        tails = {
            "direct_quad": derr,
            "m0_quad": m0.quad_error,
            "m0_tail": m0.tail,
            "m1_quad": sum(p.quad_error for p in parts.values()),
            "m1_tail": sum(p.tail for p in parts.values()),
            "lint": cfg.lint(),
        }
        out.append(MomentReport(cfg.T, d, diag, m0.value, m1, d - (m0.value + m1),
                                {k: v.value for k, v in parts.items()}, tails))
    return out


# ---------------------------------------------------------------------------
# exact rational layer


def _binom(n: int, k: int) -> int:
    """Binomial coefficient; zero for k < 0 or k > n (with n >= 0)."""
    if k < 0 or n < 0 or k > n:
        return 1 if (n == k == 0) else 0
    return math.comb(n, k)


def gamma_kl(k: int, l: int, n: int) -> Fraction:
    """gamma_{k,l}(n) from its double binomial sum (separate formula at n = 0)."""
    tot = 0
    for i in range(1, l + 1):
        for j in range(1, k + 1):
            last = _binom(i + j - 2, i + k - l - 1)
            if n == 0:
                tot += (-1) ** (k + l + i + j) * math.comb(l, i) * math.comb(k, j) * last
            else:
                tot += math.comb(l, i) * math.comb(k, j) * _binom(n - 1, i + j - 2) * last
    return Fraction(tot)


def _poly_eval(coeffs, x):
    """coeffs[i] is the coefficient of x^i."""
    tot = Fraction(0) if isinstance(x, (int, Fraction)) else 0
    for cf in reversed(coeffs):
        tot = tot * x + cf
    return tot


@dataclass
class CGPolynomials:
    k: int
    l: int
    gamma_values: list
    w_coeffs: list  # ascending powers of x

    def w(self, x):
        return _poly_eval(self.w_coeffs, x)

    @property
    def degree(self) -> int:
        return max(i for i, c in enumerate(self.w_coeffs) if c != 0)


def w_kl(k: int, l: int) -> CGPolynomials:
    """w_{k,l}(x) = x^{kl} (1 - sum_n C(kl, n+1) gamma(n) (-1)^{n+l+k} (1 - x^{-n-1}))."""
    if not (1 <= k <= 6 and 1 <= l <= 6):
        raise ValueError("w_kl is limited to k, l <= 6")
    kl = k * l
    gam = [gamma_kl(k, l, n) for n in range(kl)]
    coef = [Fraction(0)] * (kl + 1)
    coef[kl] += 1
    for n in range(kl):
        t = math.comb(kl, n + 1) * gam[n] * (-1) ** (n + l + k)
        coef[kl] -= t
        coef[kl - n - 1] += t
    return CGPolynomials(k, l, gam, coef)


def g_k(k: int) -> Fraction:
    """(k^2)! prod_{j<k} j! / (j+k)!."""
    out = Fraction(math.factorial(k * k))
    for j in range(k):
        out *= Fraction(math.factorial(j), math.factorial(j + k))
    return out


def a_kl(k: int, l: int, policy: TruncationPolicy = DEFAULT_POLICY) -> ProductResult:
    """prod_p (1 - 1/p)^{kl} sum_alpha tau_k(p^alpha) tau_l(p^alpha) p^{-alpha}."""
    from .eulerprod import _tail_length

    if not (1 <= k <= 6 and 1 <= l <= 6):
        raise ValueError("a_kl is limited to k, l <= 6")
    primes = _primes(policy.prime_cutoff)
    mult = math.comb(k, 2) * math.comb(l, 2)

    def local(pb):
        p = pb.astype(float)
        L, _ = _tail_length(1.0 / p[0], k + l - 1, 0, policy.target_tol, 8, 2000)
        al = np.arange(L + 1)
        tt = np.array([math.comb(x + k - 1, k - 1) * math.comb(x + l - 1, l - 1) for x in al.tolist()], dtype=float)
        ser = (tt[:, None] * np.exp(-np.outer(al, np.log(p)))).sum(axis=0)
        fac = (1 - 1 / p) ** (k * l) * ser
        # leading deviation -C(k,2) C(l,2) p^{-2}
        return fac[:, None], (-mult * p**-2.0)[:, None]

    alphas = np.full((mult, 1), 2.0 + 0j) if mult else np.zeros((0, 1), dtype=complex)
    val, tail = _euler_product(local, primes, alphas, -1.0, 1)
    return ProductResult(complex(val[0].real), policy.prime_cutoff, float(tail[0]))


def quartic_numerator() -> dict:
    """y^4 w_{2,2}(x/y) as {(deg_x, deg_y): coefficient}."""
    w = w_kl(2, 2)
    return {(i, 4 - i): c for i, c in enumerate(w.w_coeffs) if c != 0}


W33_REFERENCE = [1479, -8343, 19764, -25452, 19278, -8694, 2268, -324, 27, -2]
Q4_REFERENCE = {(4, 0): -1, (3, 1): 8, (2, 2): -24, (1, 3): 32, (0, 4): -14}


class IdentityViolation(AssertionError):
    pass


def _poly_shift_sum(coeffs) -> list:
    """Coefficients in eta of w(1 + eta) + w(2 - eta) (ascending)."""
    n = len(coeffs)
    out = [Fraction(0)] * n
    for i, c in enumerate(coeffs):
        for j in range(i + 1):
            b = math.comb(i, j)
            out[j] += c * b  # (1 + eta)^i
            out[j] += c * b * 2 ** (i - j) * (-1) ** j  # (2 - eta)^i
    return out


def cg_identity_checks(raise_on_failure: bool = False) -> dict:
    """Exact checks of the w_{3,3}, w_{4,4}, g_k and quartic identities."""
    w33 = w_kl(3, 3)
    shifted = _poly_shift_sum(w33.w_coeffs)
    checks = {
        "w33_reference": [int(c) for c in w33.w_coeffs] == W33_REFERENCE and all(c.denominator == 1 for c in w33.w_coeffs),
        "w33_symmetric_sum_42": shifted[0] == 42 and all(c == 0 for c in shifted[1:]),
        "w44_at_2": w_kl(4, 4).w(Fraction(2)) == 24024,
        "w44_at_2_doubled_is_g4": 2 * w_kl(4, 4).w(Fraction(2)) == g_k(4),
        "g3": g_k(3) == 42,
        "g4": g_k(4) == 24024,
        "quartic_numerator": quartic_numerator() == Q4_REFERENCE,
    }
    if raise_on_failure and not all(checks.values()):
        raise IdentityViolation(", ".join(k for k, v in checks.items() if not v))
    return checks
