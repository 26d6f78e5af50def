"""Exact polynomials in the elementary symmetric functions e_1..e_m.

Builds the coefficients q_{a,j} of the polynomial identity

    F_a(Y; Z) = sum_i Y_i^a prod_{l != i} (1 - Z Y_l) / (1 - Y_l / Y_i)
              = sum_{j < m} q_{a,j}(Y) Z^j

from the c/theta recurrence, and checks the identity numerically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .arithcore import elementary_symmetric

MAX_A = 8
MAX_M = 8


class BudgetError(ValueError):
    pass


@dataclass
class SymPolynomial:
    """Integer polynomial in e_1..e_m; keys are exponent vectors (n_1, ..., n_m)."""

    m: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        self.terms = {k: v for k, v in self.terms.items() if v != 0}
        for k in self.terms:
            if len(k) != self.m:
                raise ValueError("exponent vector length must equal m")

    @classmethod
    def const(cls, m: int, c: int) -> "SymPolynomial":
        return cls(m, {(0,) * m: c})

    @classmethod
    def e(cls, m: int, j: int) -> "SymPolynomial":
        """The polynomial e_j, with e_0 = 1 and e_j = 0 for j > m."""
        if j == 0:
            return cls.const(m, 1)
        if j > m or j < 0:
            return cls(m)
        key = [0] * m
        key[j - 1] = 1
        return cls(m, {tuple(key): 1})

    def __add__(self, other: "SymPolynomial") -> "SymPolynomial":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return SymPolynomial(self.m, out)

    def __neg__(self) -> "SymPolynomial":
        return SymPolynomial(self.m, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c: int) -> "SymPolynomial":
        return SymPolynomial(self.m, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other: "SymPolynomial") -> "SymPolynomial":
        out: dict = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return SymPolynomial(self.m, out)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymPolynomial) and self.m == other.m and self.terms == other.terms

    def degrees(self) -> set:
        """Y-degrees of the monomials (deg e_j = j)."""
        return {sum((j + 1) * n for j, n in enumerate(k)) for k in self.terms}

    def evaluate(self, evals) -> complex:
        """Substitute numeric values e_1..e_m (sequence indexed from e_1)."""
        ev = list(evals)
        tot = 0j
        for k, v in self.terms.items():
            term = complex(v)
            for j, n in enumerate(k):
                if n:
                    term *= ev[j] ** n
            tot += term
        return tot

    def evaluate_at(self, Y) -> complex:
        """Substitute the symmetric functions of the point Y."""
        e = elementary_symmetric(np.asarray(Y, dtype=complex))
        return self.evaluate(e[1:])

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k, v in sorted(self.terms.items()):
            mono = "*".join(f"e{j + 1}" + (f"^{n}" if n > 1 else "") for j, n in enumerate(k) if n)
            parts.append(f"{v}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


def elem_sym(values) -> list:
    """e_0..e_m of the given numbers (coefficients of prod (1 + x Y_i))."""
    vals = list(values)
    if not vals:
        return [1]
    e = elementary_symmetric(np.asarray(vals, dtype=complex))
    return [complex(v) for v in e]


def c_sequence(a: int, m: int) -> dict:
    """c_a, c_{a-1}, ..., c_1 from c_a = 1 and the triangular recurrence."""
    E = [SymPolynomial.e(m, u) for u in range(a + 1)]
    c = {a: SymPolynomial.const(m, 1)}
    for i in range(1, a):
        acc = SymPolynomial(m)
        for u in range(1, i + 1):
            term = E[u] * c[a - (i - u)]
            acc = acc + term.scale((-1) ** u)
        c[a - i] = -acc
    return c


def q_coefficients(a: int, m: int) -> list:
    """q_{a,0}, ..., q_{a,m-1} as SymPolynomials in e_1..e_m."""
    if not (1 <= a <= MAX_A and 1 <= m <= MAX_M):
        raise BudgetError(f"q_coefficients supports 1 <= a <= {MAX_A}, 1 <= m <= {MAX_M}")
    c = c_sequence(a, m)
    out = []
    for j in range(m):
        i = a + j
        theta = SymPolynomial(m)
        for u in range(0, m + 1):
            v = i - u
            if 0 <= v <= a - 1:
                theta = theta + (SymPolynomial.e(m, u) * c[a - v]).scale((-1) ** u)
        out.append(-theta)
    return out


def f_direct(a: int, Y, Z: complex, min_dist: float = 1e-6) -> complex:
    """F_a(Y; Z) evaluated termwise from its rational definition."""
    Y = [complex(y) for y in Y]
    if any(y == 0 for y in Y):
        raise ValueError("F_a needs nonzero Y")
    for y1, y2 in itertools.combinations(Y, 2):
        if abs(y1 - y2) < min_dist:
            raise ValueError("F_a direct evaluation needs well separated Y")
    tot = 0j
    for i, yi in enumerate(Y):
        term = yi**a
        for l, yl in enumerate(Y):
            if l != i:
                term *= (1 - Z * yl) / (1 - yl / yi)
        tot += term
    return tot


def f_poly(qs: list, Y, Z: complex) -> complex:
    e = elementary_symmetric(np.asarray(Y, dtype=complex))[1:]
    return sum(q.evaluate(e) * Z**j for j, q in enumerate(qs))


def q_numeric(a: int, Y, Z: complex) -> complex:
    """sum_j q_{a,j}(Y) Z^j via q_{a,j} = (-1)^j sum_t (-1)^t e_{j-t} h_{a+t}.

    Division-free and valid for any a, which the table-driven form is not.
    Y may carry trailing axes (vectorised evaluation).
    """
    from .arithcore import complete_homogeneous

    Y = np.asarray(Y, dtype=complex)
    m = Y.shape[0]
    e = elementary_symmetric(Y)
    h = complete_homogeneous(Y, a + m)
    tot = 0
    Zp = 1.0
    for j in range(m):
        q = 0
        for t in range(j + 1):
            q = q + (-1) ** t * e[j - t] * h[a + t]
        tot = tot + (-1) ** j * q * Zp
        Zp = Zp * Z
    return tot


@dataclass
class CombReport:
    a: int
    m: int
    trials: int
    max_discrepancy: float
    passed: bool


def verify_comb_identity(a: int, m: int, trials: int = 100, seed: int = 0,
                         tol: float = 1e-9, zero_Z: bool = False) -> CombReport:
    """Random trials of F_a(Y; Z) = sum_j q_{a,j} Z^j with |Y_i| in [0.5, 2], |Z| <= 2."""
    qs = q_coefficients(a, m)
    rng = np.random.default_rng([seed, a, m])
    worst = 0.0
    for _ in range(trials):
        while True:
            Y = rng.uniform(0.5, 2, m) * np.exp(2j * np.pi * rng.uniform(0, 1, m))
            if m < 2 or min(abs(y1 - y2) for y1, y2 in itertools.combinations(Y, 2)) > 1e-3:
                break
        Z = 0j if zero_Z else rng.uniform(0, 2) * np.exp(2j * np.pi * rng.uniform())
        fd = f_direct(a, Y, Z)
        disc = abs(fd - f_poly(qs, Y, Z)) / (1 + abs(fd))
        worst = max(worst, disc)
    return CombReport(a, m, trials, worst, worst <= tol)
