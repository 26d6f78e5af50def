"""Integer arithmetic and sieves for the multiplicative functions used everywhere else.

Shift sets, factorization, Mobius/phi, the k-fold divisor function, shifted
divisor sums sigma_I(n) and Ramanujan sums c_q(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

UINT64_MAX = 2**64 - 1

# default memory cap for bulk tables (complex128 => 16 bytes per entry)
DEFAULT_SIEVE_CAP = 50_000_000


class CoincidentShiftError(ValueError):
    """Raised when a shift set violates its minimum-separation requirement."""


class BudgetError(ValueError):
    """Raised when a requested table or sum exceeds the configured size cap."""


@dataclass(frozen=True)
class ShiftSet:
    """An ordered multiset of small complex shifts.

    Args:
        shifts: the shifts a_1, ..., a_k.
        delta_bound: every shift must satisfy |a| <= delta_bound.
        min_separation: if positive, distinct indices must be at least this far apart.
        label: free text carried into reports.
    """

    shifts: tuple
    delta_bound: float = 0.04
    min_separation: float = 0.0
    label: str = ""

    def __post_init__(self):
        vals = tuple(complex(a) for a in self.shifts)
        object.__setattr__(self, "shifts", vals)
        if len(vals) < 1:
            raise ValueError("a shift set needs at least one element")
        if self.delta_bound < 0 or self.min_separation < 0:
            raise ValueError("delta_bound and min_separation must be non-negative")
        for a in vals:
            if abs(a) > self.delta_bound * (1 + 1e-12):
                raise ValueError(f"shift {a} exceeds delta_bound {self.delta_bound}")
        if self.min_separation > 0:
            sep = self.separation()
            if sep < self.min_separation * (1 - 1e-12):
                raise CoincidentShiftError(
                    f"shifts closer than {self.min_separation} (closest pair {sep:.3g})"
                )

    @classmethod
    def of(cls, shifts: Iterable, delta_bound: float | None = None,
           min_separation: float = 0.0, label: str = "") -> "ShiftSet":
        """Build a set whose delta bound defaults to the largest shift modulus."""
        vals = tuple(complex(a) for a in shifts)
        if delta_bound is None:
            delta_bound = max(abs(a) for a in vals)
        return cls(vals, delta_bound, min_separation, label)

    @classmethod
    def zeros(cls, k: int) -> "ShiftSet":
        return cls((0j,) * k, 0.0)

    @property
    def k(self) -> int:
        return len(self.shifts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.shifts, dtype=complex)

    def separation(self) -> float:
        vals = self.shifts
        if len(vals) < 2:
            return math.inf
        return min(abs(vals[i] - vals[j]) for i in range(len(vals)) for j in range(i))

    def require_distinct(self, margin: float = 0.0) -> None:
        """Raise unless all shifts are pairwise separated by more than `margin`."""
        sep = self.separation()
        if sep <= margin:
            raise CoincidentShiftError(f"coincident shifts in {self.shifts} (closest pair {sep:.3g})")

    def same_multiset(self, other: "ShiftSet") -> bool:
        key = lambda z: (round(z.real, 15), round(z.imag, 15))
        return sorted(map(key, self.shifts)) == sorted(map(key, other.shifts))


def factorize(n: int) -> list[tuple[int, int]]:
    """Prime factorization as a list of (p, e) with increasing p; [] for n = 1."""
    if n < 1:
        raise ValueError("factorize needs n >= 1")
    out = []
    m = n
    for p in (2, 3):
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    p = 5
    step = 2
    while p * p <= m:
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
        p += step
        step = 6 - step
    if m > 1:
        out.append((m, 1))
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == [(n, 1)]


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    out = 1
    for p, e in factorize(n):
        out *= (p - 1) * p ** (e - 1)
    return out


def omega_distinct(n: int) -> int:
    return len(factorize(n))


def _check_width(v: int) -> int:
    if v > UINT64_MAX:
        raise OverflowError(f"value {v} exceeds 64-bit width")
    return v


def tau_k(k: int, n: int) -> int:
    """Number of ordered k-tuples of positive integers with product n."""
    if k < 1 or n < 1:
        raise ValueError("tau_k needs k >= 1 and n >= 1")
    out = 1
    for _, e in factorize(n):
        out = _check_width(out * math.comb(e + k - 1, k - 1))
    return out


def primes_upto(n: int) -> np.ndarray:
    """Primes <= n by an Eratosthenes sieve."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    mark = np.ones(n + 1, dtype=bool)
    mark[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if mark[p]:
            mark[p * p :: p] = False
    return np.nonzero(mark)[0].astype(np.int64)


def complete_homogeneous(x: np.ndarray, L: int) -> np.ndarray:
    """h_0..h_L of the variables along axis 0 of `x`.

    These are the power-series coefficients of prod_i (1 - x_i t)^{-1}; the
    remaining axes of `x` are carried along (vectorised over primes, s, ...).
    """
    x = np.asarray(x, dtype=complex)
    shape = (L + 1,) + x.shape[1:]
    h = np.zeros(shape, dtype=complex)
    h[0] = 1.0
    for xi in x:
        # multiply the running series by 1/(1 - xi t)
        for j in range(1, L + 1):
            h[j] = h[j] + xi * h[j - 1]
    return h


def elementary_symmetric(x: np.ndarray) -> np.ndarray:
    """e_0..e_m of the variables along axis 0, vectorised over trailing axes."""
    x = np.asarray(x, dtype=complex)
    m = x.shape[0]
    e = np.zeros((m + 1,) + x.shape[1:], dtype=complex)
    e[0] = 1.0
    for i, xi in enumerate(x):
        for j in range(i + 1, 0, -1):
            e[j] = e[j] + xi * e[j - 1]
    return e


def sigma_prime_powers(shifts: Sequence[complex] | np.ndarray, p, L: int) -> np.ndarray:
    """sigma_I(p^j) for j = 0..L.

    `p` may be an array of primes; the result then has shape (L+1, len(p)).
    """
    a = np.asarray(shifts, dtype=complex)
    pp = np.asarray(p, dtype=float)
    x = np.exp(-np.multiply.outer(a, np.log(pp)))
    return complete_homogeneous(x, L)


def sigma_shift(I: ShiftSet | Sequence[complex], n: int) -> complex:
    """Shifted divisor sum sum_{d_1...d_k = n} prod d_i^{-a_i}, computed multiplicatively."""
    shifts = I.shifts if isinstance(I, ShiftSet) else tuple(I)
    out = 1 + 0j
    for p, e in factorize(n):
        out *= complex(sigma_prime_powers(shifts, p, e)[e])
    return out


def ramanujan_sum(q: int, r: int) -> int:
    """c_q(r) = sum_{d | (q, r)} d mu(q/d); c_q(0) = phi(q)."""
    if q < 1:
        raise ValueError("ramanujan_sum needs q >= 1")
    if r == 0:
        return euler_phi(q)
    g = math.gcd(q, r)
    return sum(d * mobius(q // d) for d in divisors(g))


@dataclass
class DivisorTable:
    """sigma_I(n) for 1 <= n <= upper; index 0 is unused and set to zero."""

    shift_set: ShiftSet
    upper: int
    values: np.ndarray = field(repr=False)

    def __getitem__(self, n):
        return self.values[n]


def sieve_sigma(I: ShiftSet, N: int, cap: int = DEFAULT_SIEVE_CAP) -> DivisorTable:
    """Tabulate sigma_I(n) for n <= N with a prime-power sieve.

    Each prime p <= N multiplies the entries with exact p-valuation e by
    sigma_I(p^e); entries are written once per (p, e) in a fixed order, so the
    table does not depend on any chunking.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N > cap:
        raise BudgetError(f"sieve size {N} above cap {cap}")
    vals = np.zeros(N + 1, dtype=complex)
    vals[1:] = 1.0
    a = I.as_array()
    primes = primes_upto(N)
    small = primes[primes * primes <= N]
    large = primes[primes * primes > N]
    for p in small:
        p = int(p)
        emax = int(math.log(N) / math.log(p)) + 1
        while p**emax > N:
            emax -= 1
        loc = sigma_prime_powers(a, p, emax)
        idx = np.arange(p, N + 1, p)
        e = np.ones(idx.size, dtype=np.int64)
        rest = idx // p
        while True:
            more = rest % p == 0
            if not more.any():
                break
            e[more] += 1
            rest[more] //= p
        vals[idx] *= loc[e]
    if large.size:
        # exponent is always 1 for p > sqrt(N)
        sig1 = np.exp(-np.multiply.outer(np.log(large.astype(float)), a)).sum(axis=1)
        for p, v in zip(large.tolist(), sig1.tolist()):
            vals[p::p] *= v
    return DivisorTable(I, N, vals)


def tau_table(k: int, N: int) -> np.ndarray:
    """tau_k(n) for n <= N as exact int64 values (index 0 unused)."""
    t = sieve_sigma(ShiftSet.zeros(k), N)
    return np.rint(t.values.real).astype(np.int64)
