"""Verification suites shared by the command line and the acceptance tests.

Each suite returns a CheckResult holding a pass flag, scalar diagnostics (every
compared quantity next to its tail or tolerance) and per-grid-point rows for CSV
output.  Wall-clock timings are kept out of the result so reports are
reproducible byte for byte.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .arithcore import ShiftSet
from .divisorsums import AdcHypothesis, KernelSpec, adc_main_term, brute_D, desk_shifts
from .eulerprod import (
    A_product,
    B_closed_22,
    G_cap,
    G_closed,
    G_first_shift,
    G_first_shift_table,
    H_direct,
    H_eval,
    TruncationPolicy,
    Z_eval,
    Z_series,
    pole_residue_probe,
)
from .moments import (
    MomentConfig,
    cg_identity_checks,
    consistency_report,
    g_k,
    m0_contour,
    diag_direct,
    w_kl,
)
from .specfun import stirling_constant
from .sympoly import verify_comb_identity
from .weights import OmegaWeight, PhiCutoff, mellin_phi, omega_hat, phi_residue, w0

# default shift sets for the Dirichlet-series checks (complex, |a| <= 0.03)
EULER_I = [[0.01, 0.005], [-0.02, 0.0]]
EULER_J = [[0.03, 0.0], [0.015, -0.01]]
CLOSED_I = [[0.03, 0.0], [0.02, 0.0]]
CLOSED_J = [[0.01, 0.0], [0.025, 0.0]]


@dataclass
class CheckResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    columns: list = field(default_factory=list)


def pairs_to_complex(pairs) -> list[complex]:
    """[[re, im], ...] (or bare reals) to complex numbers."""
    out = []
    for p in pairs:
        if isinstance(p, (list, tuple)):
            if len(p) != 2:
                raise ValueError(f"shift {p!r} is not a [re, im] pair")
            out.append(complex(float(p[0]), float(p[1])))
        else:
            out.append(complex(float(p)))
    return out


def _cx(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _frac(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# ---------------------------------------------------------------------------
# exact polynomial layer


def polys(k: int = 3, l: int = 3) -> CheckResult:
    """w_{k,l} coefficients and gamma values, with the identities that apply to (k, l)."""
    cg = w_kl(k, l)
    rows = [{"n": n, "gamma": _frac(g), "w_coeff": _frac(cg.w_coeffs[n])} for n, g in enumerate(cg.gamma_values)]
    rows.append({"n": k * l, "gamma": "", "w_coeff": _frac(cg.w_coeffs[k * l])})
    full = cg_identity_checks()
    applicable = {
        (3, 3): ["w33_reference", "w33_symmetric_sum_42", "g3"],
        (4, 4): ["w44_at_2", "w44_at_2_doubled_is_g4", "g4"],
        (2, 2): ["quartic_numerator"],
    }.get((k, l), [])
    verdicts = {name: full[name] for name in applicable}
    metrics = {
        "k": k,
        "l": l,
        "w_coeffs_ascending": [_frac(c) for c in cg.w_coeffs],
        "w_at_2": {"value": _frac(cg.w(Fraction(2))), "tolerance": 0},
        "identities": verdicts,
    }
    if k == l:
        metrics["g_k"] = {"value": _frac(g_k(k)), "tolerance": 0}
    return CheckResult("polys", all(verdicts.values()), metrics, rows, ["n", "gamma", "w_coeff"])


def exact_layer() -> CheckResult:
    """All exact identities (zero tolerance)."""
    checks = cg_identity_checks()
    w44 = w_kl(4, 4).w(Fraction(2))
    rows = [{"identity": k, "passed": v} for k, v in checks.items()]
    metrics = {"identities": checks, "w44_at_2": {"value": _frac(w44), "tolerance": 0},
               "g3": _frac(g_k(3)), "g4": _frac(g_k(4))}
    return CheckResult("exact-layer", all(checks.values()), metrics, rows, ["identity", "passed"])


def sym_verify(a_max: int = 4, m_max: int = 5, trials: int = 100, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    rows = []
    for a in range(1, a_max + 1):
        for m in range(1, m_max + 1):
            rep = verify_comb_identity(a, m, trials, seed, tol)
            rows.append({"a": a, "m": m, "trials": trials, "max_discrepancy": rep.max_discrepancy,
                         "tolerance": tol, "passed": rep.passed})
    worst = max(r["max_discrepancy"] for r in rows)
    return CheckResult("sym-verify", all(bool(r["passed"]) for r in rows),
                       {"max_discrepancy": {"value": worst, "tolerance": tol}}, rows,
                       ["a", "m", "trials", "max_discrepancy", "tolerance", "passed"])


# ---------------------------------------------------------------------------
# Euler products and Dirichlet series


def _random_shifts(rng, k: int, radius: float = 0.04, sep: float = 0.005) -> np.ndarray:
    while True:
        a = radius * np.sqrt(rng.uniform(0, 1, k)) * np.exp(2j * np.pi * rng.uniform(0, 1, k))
        if k < 2 or min(abs(x - y) for i, x in enumerate(a) for y in a[:i]) > sep:
            return a


def g_triple(n_sets: int = 20, primes=(2, 3, 5), max_power: int = 4, k_max: int = 4,
             seed: int = 1, tol: float = 1e-10) -> CheckResult:
    """Definitional G against the closed form and the q-polynomial form at s = 1 - a_{i1}."""
    rng = np.random.default_rng(seed)
    rows = []
    for trial in range(n_sets):
        k = int(rng.integers(2, k_max + 1))
        a = _random_shifts(rng, k)
        for p in primes:
            for n in range(1, max_power + 1):
                for i1 in range(k):
                    s = 1 - a[i1]
                    gc = G_cap(a, s, p**n)
                    gm = G_closed(a, s, p, n)
                    gq = G_first_shift(a, i1, p, n)
                    gt = G_first_shift_table(a, i1, [p], n)[n, 0]
                    scale = max(abs(gc), 1e-300)
                    disc = max(abs(gc - gm), abs(gc - gq), abs(gq - gt)) / scale
                    rows.append({"set": trial, "k": k, "p": p, "power": n, "i1": i1,
                                 "G_cap_re": gc.real, "G_cap_im": gc.imag,
                                 "rel_discrepancy": disc, "tolerance": tol})
    worst = max(r["rel_discrepancy"] for r in rows)
    return CheckResult("g-triple", bool(worst <= tol), {"max_rel_discrepancy": {"value": worst, "tolerance": tol}},
                       rows, list(rows[0]))


def euler_check(N: int = 10**6, s_values=(1.5, 0.8, 0.3), I=EULER_I, J=EULER_J,
                closed_I=CLOSED_I, closed_J=CLOSED_J, prime_cutoff: int = 10_000,
                strict_rel: float = 1e-3, closed_tol: float = 1e-6) -> CheckResult:
    """Truncated Dirichlet series of Z against its zeta-factorised Euler product,
    and the k = l = 2 closed form of B against the Euler product at s = 0."""
    pol = TruncationPolicy(prime_cutoff=prime_cutoff)
    Iv, Jv = ShiftSet.of(pairs_to_complex(I)), ShiftSet.of(pairs_to_complex(J))
    rows = []
    ok = True
    for s in s_values:
        zs = Z_series(Iv, Jv, s, int(N))
        ze = Z_eval(Iv, Jv, s, pol)
        diff = abs(zs.value - ze.value)
        tail = zs.tail_estimate + ze.tail_estimate
        rel, rel_tail = diff / abs(ze.value), tail / abs(ze.value)
        passed = bool(diff <= tail and (s != 1.5 or rel_tail <= strict_rel))
        ok &= passed
        rows.append({"s": s, "N": int(N), "series_re": zs.value.real, "series_im": zs.value.imag,
                     "product_re": ze.value.real, "product_im": ze.value.imag,
                     "rel_diff": rel, "rel_combined_tail": rel_tail, "passed": passed})
    Ic, Jc = ShiftSet.of(pairs_to_complex(closed_I)), ShiftSet.of(pairs_to_complex(closed_J))
    bc = B_closed_22(Ic, Jc)
    bp = Z_eval(Ic, Jc, 0.0, pol)
    closed_rel = abs(bc - bp.value) / abs(bc)
    closed_ok = bool(closed_rel <= closed_tol)
    a0 = A_product([0, 0], [0, 0], 0.0, pol)
    metrics = {
        "closed_form_B": {"closed": _cx(bc), "product": _cx(bp.value), "product_tail": bp.tail_estimate,
                          "rel_diff": closed_rel, "tolerance": closed_tol, "passed": closed_ok},
        "A_at_zero_shifts": {"value": a0.value.real, "tail": a0.tail_estimate,
                             "reference_6_over_pi2": 6 / math.pi**2},
    }
    return CheckResult("euler-check", ok and closed_ok, metrics, rows, list(rows[0]))


def h_check(R: int = 10**4, Q: int = 10**4, s: complex = 1.5, I=EULER_I, J=EULER_J, i1: int = 0, i2: int = 1,
            distances=(1e-2, 1e-3), spread_tol: float = 0.05) -> CheckResult:
    """Double Dirichlet series of H against its factorisation, and the pole-residue probe."""
    a, b = np.array(pairs_to_complex(I)), np.array(pairs_to_complex(J))
    he = H_eval(a, b, i1, i2, s)
    rows = []
    ok = True
    for complete in (False, True):
        hd = H_direct(a, b, i1, i2, s, int(R), int(Q), complete_r=complete, return_tail=True)
        diff = abs(hd.value - he.value)
        tail = hd.tail_estimate + he.tail_estimate
        passed = bool(diff <= tail)
        ok &= passed
        rows.append({"R": int(R), "Q": int(Q), "complete_r": complete, "direct_re": hd.value.real,
                     "direct_im": hd.value.imag, "factorised_re": he.value.real, "factorised_im": he.value.imag,
                     "rel_diff": diff / abs(he.value), "rel_combined_tail": tail / abs(he.value), "passed": passed})
    ests, spread = pole_residue_probe(a, b, i1, i2, tuple(distances))
    metrics = {
        "s": _cx(s),
        "pole": _cx(1 - a[i1] - b[i2]),
        "residue_estimates": [{"distance": d, "value": _cx(e)} for d, e in zip(distances, ests)],
        "residue_spread": {"value": spread, "tolerance": spread_tol},
    }
    return CheckResult("h-check", bool(ok and spread <= spread_tol), metrics, rows, list(rows[0]))


def stirling(ts=(1e3, 1e4), n: int = 50, seed: int = 0) -> CheckResult:
    """Fitted constant of the gamma-ratio asymptotic; stable within a factor 2 across t."""
    cs = [stirling_constant(t, n, seed + i) for i, t in enumerate(ts)]
    ratio = max(cs) / min(cs)
    rows = [{"t": t, "samples": n, "fitted_C": c} for t, c in zip(ts, cs)]
    return CheckResult("stirling", bool(ratio <= 2.0), {"C_ratio": {"value": ratio, "tolerance": 2.0}},
                       rows, ["t", "samples", "fitted_C"])


# ---------------------------------------------------------------------------
# weights


def omega_hat_decay(T: float, doublings: int = 6, points: int = 20_000) -> list[dict]:
    """Envelope ratios of |omega_hat| over successive doublings beyond u0 = T0^{-0.9}."""
    w = OmegaWeight.from_T(T)
    u0 = w.T0**-0.9
    uu = np.linspace(u0, 2**doublings * u0, points)
    env = np.maximum.accumulate(np.abs(omega_hat(w, uu))[::-1])[::-1]
    rows = []
    for j in range(doublings):
        i = np.searchsorted(uu, u0 * 2**j)
        i2 = min(np.searchsorted(uu, u0 * 2 ** (j + 1)), uu.size - 1)
        rows.append({"T": T, "doubling": j, "u_start": float(uu[i]), "envelope": float(env[i]),
                     "ratio": float(env[i2] / env[i])})
    return rows


def partition_sum(x: np.ndarray) -> np.ndarray:
    """sum_{k >= -1} W0(x / 2^{k/2}) for an array of x >= 1 (vectorised w0_partition)."""
    x = np.asarray(x, dtype=float)
    kc = np.floor(2 * np.log2(x)).astype(int)
    tot = np.zeros(x.shape)
    for d in range(-3, 2):
        k = kc + d
        tot += np.where(k >= -1, w0(x / 2.0 ** (k / 2)), 0.0)
    return tot


def weights_probe(T_values=(1e3, 1e4), samples: int = 10_000, seed: int = 0, s_probe: float = 1e-3,
                  doublings: int = 6, partition_tol: float = 1e-12, residue_tol: float = 1e-6) -> CheckResult:
    rng = np.random.default_rng(seed)
    xs = np.exp(rng.uniform(0, math.log(1e8), samples))
    part = float(np.max(np.abs(partition_sum(xs) - 1)))
    p = PhiCutoff()
    literal = abs(s_probe * complex(mellin_phi(p, s_probe)) - 1)
    contour = abs(phi_residue(p, s_probe) - 1)
    rows = []
    for T in T_values:
        rows.extend(omega_hat_decay(T, doublings))
    worst_ratio = max(r["ratio"] for r in rows)
    metrics = {
        "partition_of_unity": {"samples": samples, "max_error": part, "tolerance": partition_tol},
        "phi_residue_literal": {"s": s_probe, "abs_s_phi_minus_1": literal, "tolerance": residue_tol},
        "phi_residue_contour": {"radius": s_probe, "abs_residue_minus_1": contour, "tolerance": residue_tol},
        "omega_hat_decay": {"worst_doubling_ratio": worst_ratio, "tolerance": 1 / 8},
    }
    passed = bool(part <= partition_tol and literal <= residue_tol and worst_ratio <= 1 / 8)
    return CheckResult("weights-probe", passed, metrics, rows, ["T", "doubling", "u_start", "envelope", "ratio"])


# ---------------------------------------------------------------------------
# additive divisor problem


def parse_r_range(spec) -> list[int]:
    """'1..10', '1,3,7' or a list of ints."""
    if isinstance(spec, (list, tuple)):
        vals = [int(v) for v in spec]
    else:
        text = str(spec).strip()
        vals = []
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                vals.extend(range(int(lo), int(hi) + 1))
            elif part:
                vals.append(int(part))
    if not vals or any(v == 0 for v in vals):
        raise ValueError(f"bad r range {spec!r}")
    return sorted(set(vals))


def _adc_point(args):
    X, r, k, l, off_I, off_J = args
    I, J = desk_shifts(X, k, off_I), desk_shifts(X, l, off_J)
    spec = KernelSpec.desk(X).with_r(r)
    br = brute_D(spec, I, J, r)
    mn = adc_main_term(spec, I, J, r)
    return complex(br), complex(mn)


def adc(X_values=(1e4,), r="1..10", k: int = 2, l: int = 2, offset_I: float = 0.0, offset_J: float = 0.3,
        theta: float = 0.75, final_tol: float = 0.10, jobs: int = 1) -> CheckResult:
    """Brute-force shifted convolution sums against the main term, per box and shift.

    Passes when the aggregate relative discrepancy strictly decreases in X and the
    largest box is below final_tol.
    """
    rs = parse_r_range(r)
    hyp = AdcHypothesis(theta=theta)
    Xs = [float(x) for x in X_values]
    for X in Xs:
        if max(rs) > X**hyp.beta:
            raise ValueError(f"|r| must stay below X^beta = {X ** hyp.beta:.3g}")
    tasks = [(X, rr, k, l, offset_I, offset_J) for X in Xs for rr in rs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_adc_point, tasks))
    else:
        results = [_adc_point(t) for t in tasks]
    rows = []
    boxes = []
    for X in Xs:
        sd = sm = 0.0
        for (X2, rr, *_), (br, mn) in zip(tasks, results):
            if X2 != X:
                continue
            d = br - mn
            sd += abs(d)
            sm += abs(mn)
            rows.append({"X": X, "r": rr, "brute_re": br.real, "brute_im": br.imag, "main_re": mn.real,
                         "main_im": mn.imag, "delta_re": d.real, "delta_im": d.imag,
                         "relative": abs(d) / abs(mn)})
        H = max(rs)
        boxes.append({"X": X, "sum_abs_delta": sd, "sum_abs_main": sm, "relative": sd / sm,
                      "hypothesis_ratio": sd / (H * X**hyp.theta)})
    rel = [b["relative"] for b in boxes]
    decreasing = all(b < a for a, b in zip(rel, rel[1:]))
    passed = bool(decreasing and rel[-1] <= final_tol)
    metrics = {"boxes": boxes, "strictly_decreasing": decreasing,
               "final_relative": {"value": rel[-1], "tolerance": final_tol}}
    return CheckResult("adc", passed, metrics, rows, list(rows[0]))


# ---------------------------------------------------------------------------
# moments


def _moment_cfg(T, eta, k, l, I, J):
    if I is None and J is None:
        return MomentConfig.log_scaled_default(T, eta, k, l)
    I = ShiftSet.of(pairs_to_complex(I))
    J = ShiftSet.of(pairs_to_complex(J))
    return MomentConfig(I, J, float(T), eta)


def _moment_one(args):
    rep = consistency_report([_moment_cfg(*args)])[0]
    return rep


def moment(T_values=(1000.0,), eta: float = 0.2, k: int = 2, l: int = 2, I=None, J=None,
           residual_tol: float = 0.15, jobs: int = 1) -> CheckResult:
    """direct vs M0 + M1 for each T.

    Passes when the relative residual at the largest T is within residual_tol and
    every increase of the relative residual between consecutive T is covered by
    the summed error bars of both points.
    """
    Ts = [float(T) for T in T_values]
    tasks = [(T, eta, k, l, I, J) for T in Ts]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reps = list(ex.map(_moment_one, tasks))
    else:
        reps = [_moment_one(t) for t in tasks]
    rows = []
    for rep in reps:
        t = rep.tails
        err = t["direct_quad"] + t["m0_quad"] + t["m0_tail"] + t["m1_quad"] + t["m1_tail"]
        rows.append({"T": rep.T, "eta": eta, "direct_re": rep.direct.real, "direct_im": rep.direct.imag,
                     "diag_re": rep.diag_direct.real, "m0_re": rep.m0.real, "m0_im": rep.m0.imag,
                     "m1_re": rep.m1.real, "m1_im": rep.m1.imag, "residual_re": rep.residual.real,
                     "residual_im": rep.residual.imag, "relative_residual": rep.relative_residual,
                     "m0_vs_diag_relative": abs(rep.m0 / rep.diag_direct - 1),
                     "direct_quad_error": t["direct_quad"], "m0_quad_error": t["m0_quad"],
                     "m0_tail": t["m0_tail"], "m1_quad_error": t["m1_quad"], "m1_tail": t["m1_tail"],
                     "error_bar": err})
    trend = []
    ok = True
    for a, b in zip(rows, rows[1:]):
        rise = b["relative_residual"] - a["relative_residual"]
        cover = a["error_bar"] / abs(a["direct_re"]) + b["error_bar"] / abs(b["direct_re"])
        covered = bool(rise < 0 or rise <= cover)
        ok &= covered
        trend.append({"T_from": a["T"], "T_to": b["T"], "rise": rise, "error_bar_cover": cover, "covered": covered})
    final = rows[-1]["relative_residual"]
    metrics = {
        "trend": trend,
        "final_relative_residual": {"value": final, "tolerance": residual_tol},
        "per_swap_terms": [{"T": rep.T, "terms": [{"i1": i1, "i2": i2, "value": _cx(v)}
                                                  for (i1, i2), v in sorted(rep.per_swap_terms.items())]}
                           for rep in reps],
        "lint": [{"T": rep.T, "warnings": rep.tails["lint"]} for rep in reps],
    }
    return CheckResult("moment", bool(ok and final <= residual_tol), metrics, rows, list(rows[0]))


def m0_identity(T: float = 2000.0, eta: float = 0.2, tol: float = 1e-4) -> CheckResult:
    """Diagonal sum against the M0 contour integral (log-scaled shifts, k = l = 2)."""
    cfg = MomentConfig.log_scaled_default(T, eta)
    diag = diag_direct(cfg)
    m0 = m0_contour(cfg, return_details=True)
    rel = abs(m0.value / diag - 1)
    rows = [{"T": T, "eta": eta, "diag_re": diag.real, "m0_re": m0.value.real, "m0_im": m0.value.imag,
             "relative_gap": rel, "m0_quad_error": m0.quad_error, "m0_tail": m0.tail, "height": m0.height}]
    return CheckResult("m0-identity", bool(rel <= tol), {"relative_gap": {"value": rel, "tolerance": tol}}, rows,
                       list(rows[0]))
