"""Command-line entry point: run verification suites and moment experiments.

Parameters come from built-in defaults, then an optional JSON config, then
flags (flags win).  The resolved parameters are written into report.json next
to the results; per-grid-point tables go to tables/<suite>.csv.

Exit codes: 0 when every assertion passes, 1 on an assertion failure or a
numerical failure (reported as structured text on stderr), 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, checks


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parameter schema


def _float_list(v):
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in str(v).split(",") if x.strip()]


def _shift_pairs(v):
    if v is None:
        return None
    if isinstance(v, str):
        v = json.loads(v)
    checks.pairs_to_complex(v)  # validates
    return [[float(p[0]), float(p[1])] if isinstance(p, (list, tuple)) else [float(p), 0.0] for p in v]


def _r_range(v):
    checks.parse_r_range(v)  # validates
    return v if isinstance(v, str) else [int(x) for x in v]


def _bool(v):
    if isinstance(v, bool):
        return v
    raise ConfigError(f"expected a boolean, got {v!r}")


def _int(v):
    f = float(v)
    if f != int(f):
        raise ConfigError(f"expected an integer, got {v!r}")
    return int(f)


@dataclass(frozen=True)
class Param:
    name: str
    kind: object
    default: object
    help: str


COMMON = [
    Param("out", str, "dm-out", "output directory for report.json and tables/"),
    Param("seed", _int, 0, "seed for every random sample"),
    Param("tables", _bool, True, "write CSV tables"),
]

COMMANDS = {
    "polys": [
        Param("k", _int, 3, "first index"),
        Param("l", _int, 3, "second index"),
    ],
    "sym-verify": [
        Param("a_max", _int, 4, "largest power a"),
        Param("m_max", _int, 5, "largest number of variables m"),
        Param("trials", _int, 100, "random trials per (a, m)"),
        Param("tol", float, 1e-9, "relative discrepancy tolerance"),
    ],
    "euler-check": [
        Param("N", _int, 10**6, "Dirichlet series length"),
        Param("s", _float_list, [1.5, 0.8, 0.3], "real evaluation points"),
        Param("I", _shift_pairs, checks.EULER_I, "first shift set as [[re, im], ...]"),
        Param("J", _shift_pairs, checks.EULER_J, "second shift set as [[re, im], ...]"),
        Param("prime_cutoff", _int, 10_000, "Euler product prime cutoff"),
        Param("g_sets", _int, 20, "random shift sets for the G comparison"),
    ],
    "h-check": [
        Param("R", _int, 10**4, "r truncation of the double series"),
        Param("Q", _int, 10**4, "q truncation of the double series"),
        Param("s", float, 1.5, "real evaluation point"),
        Param("I", _shift_pairs, checks.EULER_I, "first shift set"),
        Param("J", _shift_pairs, checks.EULER_J, "second shift set"),
        Param("i1", _int, 0, "swapped index in I"),
        Param("i2", _int, 1, "swapped index in J"),
        Param("distances", _float_list, [1e-2, 1e-3], "approach distances of the pole probe"),
    ],
    "adc": [
        Param("k", _int, 2, "size of I"),
        Param("l", _int, 2, "size of J"),
        Param("X", _float_list, [1e4], "box sizes"),
        Param("r", _r_range, "1..10", "shifts, e.g. 1..10 or 1,2,5"),
        Param("offset_I", float, 0.0, "offset of the I shifts in units of 1/(10 log X)"),
        Param("offset_J", float, 0.3, "offset of the J shifts in units of 1/(10 log X)"),
        Param("theta", float, 0.75, "hypothesis exponent theta"),
        Param("final_tol", float, 0.10, "bound on the aggregate discrepancy of the largest box"),
    ],
    "moment": [
        Param("T", _float_list, [1000.0], "heights T"),
        Param("eta", float, 0.2, "K = T^(1 + eta)"),
        Param("k", _int, 2, "size of I (log-scaled shifts)"),
        Param("l", _int, 2, "size of J (log-scaled shifts)"),
        Param("I", _shift_pairs, None, "explicit shifts for I (overrides the log-scaled defaults)"),
        Param("J", _shift_pairs, None, "explicit shifts for J"),
        Param("residual_tol", float, 0.15, "bound on the relative residual at the largest T"),
    ],
    "weights-probe": [
        Param("T", _float_list, [1e3, 1e4], "heights for the omega_hat decay probe"),
        Param("samples", _int, 10_000, "partition-of-unity samples"),
        Param("s_probe", float, 1e-3, "distance of the Phi residue probe"),
        Param("doublings", _int, 6, "doublings of u beyond T0^-0.9"),
    ],
    "all-checks": [
        Param("adc_X", _float_list, [1e3, 1e4, 1e5], "ADC box sizes"),
        Param("moment_T", _float_list, [500.0, 1000.0, 2000.0], "moment heights"),
        Param("skip_moment", _bool, False, "skip the slow moment consistency sweep"),
    ],
}
KNOWN = {p.name for ps in COMMANDS.values() for p in ps} | {p.name for p in COMMON} | {"jobs"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dirmoments", description="Verification suites and moment experiments.")
    ap.add_argument("--version", action="version", version=f"dirmoments {__version__}")
    sub = ap.add_subparsers(dest="command", metavar="command")
    for cmd, params in COMMANDS.items():
        sp = sub.add_parser(cmd, help=f"run the {cmd} suite")
        sp.add_argument("--config", help="JSON config file (flags override it)")
        sp.add_argument("--jobs", type=int, default=None, help="worker cap (fallback: DM_JOBS, then 1)")
        for p in COMMON + params:
            flag = "--" + p.name.replace("_", "-")
            if p.kind is _bool:
                sp.add_argument(flag, dest=p.name, action=argparse.BooleanOptionalAction, default=None, help=p.help)
            else:
                sp.add_argument(flag, dest=p.name, default=None, help=f"{p.help} (default {p.default!r})")
    return ap


def resolve(cmd: str, flags: dict, config: dict | None) -> dict:
    """defaults < config (top level, then the block named after the command) < flags."""
    params = {p.name: p for p in COMMON + COMMANDS[cmd]}
    values = {name: p.default for name, p in params.items()}
    if config is not None:
        if not isinstance(config, dict):
            raise ConfigError("config must be a JSON object")
        for key, val in config.items():
            if key in COMMANDS:
                if not isinstance(val, dict):
                    raise ConfigError(f"config block {key!r} must be an object")
            elif key not in KNOWN:
                raise ConfigError(f"unknown config key {key!r}")
            elif key in params:
                values[key] = val
        for key, val in config.get(cmd, {}).items():
            if key not in params and key != "jobs":
                raise ConfigError(f"unknown parameter {key!r} for {cmd}")
            if key in params:
                values[key] = val
    for key, val in flags.items():
        if key in params and val is not None:
            values[key] = val
    out = {}
    for name, p in params.items():
        val = values[name]
        try:
            out[name] = None if val is None else p.kind(val)
        except ConfigError:
            raise
        except (TypeError, ValueError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad value for {name}: {val!r} ({exc})") from None
    return out


def resolve_jobs(flag: int | None, config_jobs=None) -> int:
    """--jobs, then the config, then DM_JOBS, then 1."""
    if flag is not None:
        jobs = flag
    elif config_jobs is not None:
        try:
            jobs = _int(config_jobs)
        except (TypeError, ValueError):
            raise ConfigError(f"jobs must be an integer, got {config_jobs!r}") from None
    else:
        env = os.environ.get("DM_JOBS", "").strip()
        try:
            jobs = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"DM_JOBS must be an integer, got {env!r}") from None
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return jobs


# ---------------------------------------------------------------------------
# execution


def run_suites(cmd: str, cfg: dict, jobs: int) -> list:
    seed = cfg["seed"]
    if cmd == "polys":
        return [checks.polys(cfg["k"], cfg["l"])]
    if cmd == "sym-verify":
        return [checks.sym_verify(cfg["a_max"], cfg["m_max"], cfg["trials"], seed, cfg["tol"])]
    if cmd == "euler-check":
        return [
            checks.g_triple(cfg["g_sets"], seed=seed),
            checks.euler_check(cfg["N"], tuple(cfg["s"]), cfg["I"], cfg["J"], prime_cutoff=cfg["prime_cutoff"]),
        ]
    if cmd == "h-check":
        return [checks.h_check(cfg["R"], cfg["Q"], cfg["s"], cfg["I"], cfg["J"], cfg["i1"], cfg["i2"],
                               tuple(cfg["distances"]))]
    if cmd == "adc":
        return [checks.adc(cfg["X"], cfg["r"], cfg["k"], cfg["l"], cfg["offset_I"], cfg["offset_J"],
                           cfg["theta"], cfg["final_tol"], jobs)]
    if cmd == "moment":
        return [checks.moment(cfg["T"], cfg["eta"], cfg["k"], cfg["l"], cfg["I"], cfg["J"],
                              cfg["residual_tol"], jobs)]
    if cmd == "weights-probe":
        return [checks.weights_probe(tuple(cfg["T"]), cfg["samples"], seed, cfg["s_probe"], cfg["doublings"])]
    if cmd == "all-checks":
        out = [
            checks.exact_layer(),
            checks.sym_verify(seed=seed),
            checks.g_triple(seed=seed + 1),
            checks.euler_check(),
            checks.h_check(),
            checks.weights_probe(seed=seed),
            checks.m0_identity(),
            checks.adc(cfg["adc_X"], jobs=jobs),
            checks.stirling(seed=seed),
        ]
        if not cfg["skip_moment"]:
            out.insert(7, checks.moment(cfg["moment_T"], jobs=jobs))
        return out
    raise ConfigError(f"unknown command {cmd!r}")


def jsonable(x):
    """Plain JSON types; complex as {re, im}, non-finite floats as strings."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        return f if math.isfinite(f) else str(f)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": jsonable(x.real), "im": jsonable(x.imag)}
    if isinstance(x, Fraction):
        return str(x)
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _csv_cell(v):
    v = jsonable(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return "" if v is None else str(v)


def write_outputs(out: Path, cmd: str, cfg: dict, jobs: int, results: list, write_tables: bool) -> None:
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "command": cmd,
        "version": __version__,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "jobs": jobs,
        "passed": all(r.passed for r in results),
        "suites": [{"name": r.name, "passed": r.passed, "metrics": r.metrics} for r in results],
    }
    text = json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"
    (out / "report.json").write_text(text, encoding="utf-8", newline="\n")
    if write_tables:
        tdir = out / "tables"
        tdir.mkdir(exist_ok=True)
        for r in results:
            if not r.rows:
                continue
            with open(tdir / f"{r.name}.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(r.columns)
                for row in r.rows:
                    w.writerow([_csv_cell(row.get(c)) for c in r.columns])


def _summary_line(r) -> str:
    return f"{'PASS' if r.passed else 'FAIL'}  {r.name}"


def _print_polys(r) -> None:
    m = r.metrics
    print(f"w_{{{m['k']},{m['l']}}} coefficients (ascending powers of x):")
    print("  " + ", ".join(m["w_coeffs_ascending"]))
    for name, ok in m["identities"].items():
        print(f"  {name}: {'holds' if ok else 'FAILS'}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    cmd = args.command
    try:
        config = None
        if args.config:
            try:
                config = json.loads(Path(args.config).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        cfg = resolve(cmd, vars(args), config)
        config_jobs = None
        if config is not None:
            config_jobs = config.get(cmd, {}).get("jobs", config.get("jobs"))
        jobs = resolve_jobs(args.jobs, config_jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        results = run_suites(cmd, cfg, jobs)
    except (ValueError, ConfigError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError, MemoryError) as exc:
        print(json.dumps({"numerical_failure": type(exc).__name__, "command": cmd, "message": str(exc)}),
              file=sys.stderr)
        return 1
    out = Path(cfg["out"])
    write_outputs(out, cmd, cfg, jobs, results, cfg["tables"])
    for r in results:
        if r.name == "polys":
            _print_polys(r)
        print(_summary_line(r))
    print(f"report: {out / 'report.json'}  ({time.perf_counter() - t0:.1f} s)", file=sys.stderr)
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
