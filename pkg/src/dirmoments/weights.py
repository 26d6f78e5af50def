"""Smooth cutoffs and their transforms.

omega is a smoothed indicator of [c1 T, c2 T] with ramps of width T0, phi is
a cutoff equal to one on [0, 1] and zero beyond 1 + rho, and W0 is a dyadic
bump giving a partition of unity in steps of sqrt(2). All three are built
from the exp(-1/x) smoothstep S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import expit, roots_legendre


class QuadratureError(RuntimeError):
    def __init__(self, msg: str, achieved: float):
        super().__init__(f"{msg} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


@dataclass(frozen=True)
class QuadratureSpec:
    scheme: str = "adaptive-gauss"
    max_depth: int = 8
    tol: float = 1e-12

    def __post_init__(self):
        if self.scheme != "adaptive-gauss":
            raise ValueError(f"unsupported quadrature scheme {self.scheme!r}")
        if self.tol < 1e-13:
            raise ValueError("quadrature tol below 1e-13 is not supported")


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=64)
def gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = roots_legendre(n)
    return (x + 1) / 2, w / 2


def _ramp_logit(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    xc = np.where(inside, x, 0.5)
    L = 1.0 / (1.0 - xc) - 1.0 / xc
    return inside, xc, L


def smoothstep(x):
    """S(x): 0 for x <= 0, 1 for x >= 1, exp(-1/x)/(exp(-1/x)+exp(-1/(1-x))) between."""
    inside, _, L = _ramp_logit(x)
    x = np.asarray(x, dtype=float)
    out = np.where(inside, expit(L), np.where(x >= 1, 1.0, 0.0))
    return out if out.ndim else float(out)


def smoothstep_deriv(x):
    inside, xc, L = _ramp_logit(x)
    d = (1.0 / xc**2 + 1.0 / (1.0 - xc) ** 2) * expit(L) * expit(-L)
    out = np.where(inside, d, 0.0)
    return out if out.ndim else float(out)


def _adaptive(integrate, n0: int, q: QuadratureSpec, what: str):
    """Run `integrate(n) -> (values, abs_scale)` with doubling n until converged."""
    n = n0
    prev, _ = integrate(n)
    for _ in range(q.max_depth):
        n *= 2
        cur, scale = integrate(n)
        err = np.abs(cur - prev)
        tol = np.maximum(q.tol * np.abs(cur), 1e-14 * scale)
        if np.all(err <= tol):
            return cur, err
        prev = cur
    raise QuadratureError(f"{what} did not converge", float(np.max(err)))


# ---------------------------------------------------------------------------
# omega


@dataclass(frozen=True)
class OmegaWeight:
    T: float
    T0: float
    c1: float = 1.0
    c2: float = 2.0
    b_exponent: float = 0.8

    def __post_init__(self):
        if not (0 < self.c1 < self.c2):
            raise ValueError("need 0 < c1 < c2")
        if not (0 < self.b_exponent <= 1):
            raise ValueError("b_exponent must lie in (0, 1]")
        if self.T0 < self.T**self.b_exponent * (1 - 1e-12) or self.T0 > self.T * (1 + 1e-12):
            raise ValueError("need T^b <= T0 <= T")

    @classmethod
    def from_T(cls, T: float, b: float = 0.8, c1: float = 1.0, c2: float = 2.0) -> "OmegaWeight":
        return cls(float(T), float(T) ** b, c1, c2, b)

    @property
    def support(self) -> tuple[float, float]:
        return self.c1 * self.T, self.c2 * self.T

    def pieces(self):
        """Breakpoints of omega split into (lo, hi, is_plateau)."""
        lo, hi = self.support
        a, b = lo + self.T0, hi - self.T0
        if a >= b:
            return [(lo, hi, False)]
        return [(lo, a, False), (a, b, True), (b, hi, False)]

    def __call__(self, t):
        return omega_eval(self, t)


def omega_eval(w: OmegaWeight, t):
    t = np.asarray(t, dtype=float)
    lo, hi = w.support
    out = smoothstep((t - lo) / w.T0) * smoothstep((hi - t) / w.T0)
    return out if np.ndim(out) else float(out)


def omega_deriv(w: OmegaWeight, t):
    t = np.asarray(t, dtype=float)
    lo, hi = w.support
    x1, x2 = (t - lo) / w.T0, (hi - t) / w.T0
    return (smoothstep_deriv(x1) * smoothstep(x2) - smoothstep(x1) * smoothstep_deriv(x2)) / w.T0


def _omega_pieces_integral(w: OmegaWeight, kernel, n: int, use_deriv: bool):
    """Sum over non-plateau pieces of int f(t) kernel(lo, t - lo) dt, f = omega or omega'.

    The kernel receives the piece origin separately so that large phases can
    be split off exactly once per piece.
    """
    xs, ws = gauss_nodes(n)
    total = 0.0
    scale = 0.0
    for lo, hi, plateau in w.pieces():
        if plateau:
            continue
        dt = (hi - lo) * xs
        t = lo + dt
        f = omega_deriv(w, t) if use_deriv else omega_eval(w, t)
        kv = kernel(lo, dt)
        total = total + (kv * (f * ws * (hi - lo))).sum(axis=-1)
        scale = scale + np.abs(f * ws * (hi - lo)).sum()
    return total, scale


def _fourier_kernel(u, lo, dt):
    return np.exp(-2j * math.pi * u * lo) * np.exp(-2j * math.pi * u * dt)


def omega_hat(w: OmegaWeight, u, q: QuadratureSpec = DEFAULT_QUAD):
    """Fourier transform int omega(t) exp(-2 pi i u t) dt (vectorised in u).

    Plateau pieces are integrated in closed form. For |u| (c2-c1) T > 1 the
    transform is taken from omega' by one integration by parts, which keeps
    the tiny high-frequency values free of cancellation.
    """
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    out = np.empty(u.shape, dtype=complex)
    width = (w.c2 - w.c1) * w.T
    low = np.abs(u) * width <= 1.0
    span = max(hi - lo for lo, hi, p in w.pieces() if not p)
    if low.any():
        ul = u[low][:, None]
        plateau = 0.0
        for lo, hi, p in w.pieces():
            if p:
                plateau = (hi - lo) * np.exp(-1j * math.pi * u[low] * (lo + hi)) * np.sinc(u[low] * (hi - lo))

        def direct(n):
            v, sc = _omega_pieces_integral(w, lambda lo, dt: _fourier_kernel(ul, lo, dt), n, False)
            return v + plateau, sc + width

        n0 = 64 + 8 * int(math.ceil(np.max(np.abs(u[low])) * span))
        out[low], _ = _adaptive(direct, n0, q, "omega_hat")
    if (~low).any():
        uh = u[~low]
        for start in range(0, uh.size, 4096):
            chunk = uh[start : start + 4096][:, None]

            def byparts(n, chunk=chunk):
                v, sc = _omega_pieces_integral(w, lambda lo, dt: _fourier_kernel(chunk, lo, dt), n, True)
                fac = 1.0 / (2j * math.pi * chunk[:, 0])
                return v * fac, sc * np.max(np.abs(fac))

            n0 = 64 + 8 * int(math.ceil(np.max(np.abs(chunk)) * span))
            idx = np.nonzero(~low)[0][start : start + 4096]
            out[idx], _ = _adaptive(byparts, n0, q, "omega_hat")
    return complex(out[0]) if scalar else out


def omega_mellin(w: OmegaWeight, z, q: QuadratureSpec = DEFAULT_QUAD):
    """int omega(t) t^{z-1} dt, via -(1/z) int omega'(t) t^z dt (ramps only)."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) < 1e-12):
        raise ValueError("omega_mellin is not set up for z = 0")
    out = np.empty(z.shape, dtype=complex)
    lo, hi = w.support
    for start in range(0, z.size, 2048):
        zz = z[start : start + 2048][:, None]
        osc = float(np.max(np.abs(zz.imag))) * math.log1p(w.T0 / lo)

        def f(n, zz=zz):
            v, sc = _omega_pieces_integral(
                w, lambda lo, dt: np.exp(zz * math.log(lo)) * np.exp(zz * np.log1p(dt / lo)), n, True)
            return -v / zz[:, 0], sc * hi ** float(np.max(zz.real)) / float(np.min(np.abs(zz)))

        out[start : start + 2048], _ = _adaptive(f, 64 + 4 * int(math.ceil(osc)), q, "omega_mellin")
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# phi and its Mellin transforms


@dataclass(frozen=True)
class PhiCutoff:
    rho: float = 0.1

    def __post_init__(self):
        if not (0 < self.rho < 0.5):
            raise ValueError("rho must lie in (0, 1/2)")

    def __call__(self, t):
        return phi_eval(self, t)


def phi_eval(p: PhiCutoff, t):
    t = np.asarray(t, dtype=float)
    out = smoothstep((1.0 + p.rho - t) / p.rho)
    return out if np.ndim(out) else float(out)


def phi_deriv(p: PhiCutoff, t):
    t = np.asarray(t, dtype=float)
    return -smoothstep_deriv((1.0 + p.rho - t) / p.rho) / p.rho


def _ramp_transform(p: PhiCutoff, s, q: QuadratureSpec, squared: bool):
    """int_0^1 S'(x) (1 + rho x)^s dx, optionally weighted by 2 S(1 - x)."""
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.empty(s.shape, dtype=complex)
    for start in range(0, s.size, 4096):
        ss = s[start : start + 4096][:, None]
        osc = float(np.max(np.abs(ss.imag))) * math.log1p(p.rho) / (2 * math.pi)

        def f(n, ss=ss):
            xs, ws = gauss_nodes(n)
            wt = smoothstep_deriv(xs) * ws
            if squared:
                wt = wt * 2.0 * smoothstep(1.0 - xs)
            kern = np.exp(ss * np.log1p(p.rho * xs))
            scale = (1 + p.rho) ** max(0.0, float(np.max(ss.real)))
            return (kern * wt).sum(axis=1), scale

        out[start : start + 4096], _ = _adaptive(f, 32 + 8 * int(math.ceil(osc)), q, "phi transform")
    return complex(out[0]) if scalar else out


def psi(p: PhiCutoff, s, q: QuadratureSpec = DEFAULT_QUAD):
    """Psi(s) = -int phi'(t) t^s dt; entire, Psi(0) = 1."""
    return _ramp_transform(p, s, q, squared=False)


def psi2(p: PhiCutoff, s, q: QuadratureSpec = DEFAULT_QUAD):
    """The same construction applied to phi^2."""
    return _ramp_transform(p, s, q, squared=True)


def _check_nonzero(s):
    if np.any(np.abs(np.asarray(s)) == 0):
        raise ZeroDivisionError("Mellin transforms of phi have a pole at s = 0")


def mellin_phi(p: PhiCutoff, s, q: QuadratureSpec = DEFAULT_QUAD):
    """Phi(s) = int phi(t) t^{s-1} dt = Psi(s)/s."""
    _check_nonzero(s)
    return psi(p, s, q) / np.asarray(s, dtype=complex)


def phi2(p: PhiCutoff, s, q: QuadratureSpec = DEFAULT_QUAD):
    """Phi_2(s) = int phi(t)^2 t^{s-1} dt."""
    _check_nonzero(s)
    return psi2(p, s, q) / np.asarray(s, dtype=complex)


def phi_residue(p: PhiCutoff, radius: float, n: int = 64, squared: bool = False) -> complex:
    """Residue of Phi (or Phi_2) at 0 from the trapezoid rule on |s| = radius."""
    th = 2 * math.pi * np.arange(n) / n
    s = radius * np.exp(1j * th)
    f = phi2(p, s) if squared else mellin_phi(p, s)
    return complex(np.mean(f * s))


def phi2_convolution(p: PhiCutoff, s: complex, c: float = 1.0, height: float = 200.0,
                     panel: float = 0.5, order: int = 24) -> complex:
    """(1/2 pi i) int_{(c)} Phi(s1) Phi(s - s1) ds1 truncated at |Im s1| <= height."""
    xs, ws = gauss_nodes(order)
    edges = np.arange(-height, height + 1e-9, panel)
    u = (edges[:-1, None] + panel * xs[None, :]).ravel()
    wu = np.tile(ws * panel, edges.size - 1)
    s1 = c + 1j * u
    vals = mellin_phi(p, s1) * mellin_phi(p, s - s1)
    return complex((vals * wu).sum() / (2 * math.pi))


# ---------------------------------------------------------------------------
# dyadic partition


def bump_h(y):
    y = np.asarray(y, dtype=float)
    out = smoothstep(4 * (y - 1)) * smoothstep(4 * (2 - y))
    return np.where((y > 1) & (y < 2), out, 0.0)


def w0(y):
    """W0(y) = h(y) / sum_j h(y / 2^{j/2}); sum_k W0(x / 2^{k/2}) = 1 for x >= 1."""
    y = np.asarray(y, dtype=float)
    pos = y > 0
    yc = np.where(pos, y, 1.0)
    jc = np.floor(2 * np.log2(yc)).astype(int)
    den = np.zeros(y.shape)
    for dj in range(-3, 2):
        den = den + bump_h(yc / 2.0 ** ((jc + dj) / 2.0))
    num = bump_h(yc)
    out = np.where(pos & (num > 0), num / np.where(den > 0, den, 1.0), 0.0)
    return out if out.ndim else float(out)


def dyadic_window(u):
    """W(u) = u^{-1/2} W0(u)."""
    u = np.asarray(u, dtype=float)
    out = np.where(u > 0, w0(u) / np.sqrt(np.where(u > 0, u, 1.0)), 0.0)
    return out if out.ndim else float(out)


def w0_partition(x: float) -> list[tuple[float, float]]:
    """Scales M = 2^{k/2} (k >= -1) with W0(x/M) > 0, and their weights."""
    if x < 1:
        raise ValueError("w0_partition needs x >= 1")
    kc = int(math.floor(2 * math.log2(x)))
    out = []
    for k in range(max(kc - 3, -1), kc + 2):
        M = 2.0 ** (k / 2)
        wv = float(w0(x / M))
        if wv > 0:
            out.append((M, wv))
    return out
