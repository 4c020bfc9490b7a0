"""Command line entry point: ``divzeta <command> [options]``.

Every run appends one JSON object per experiment to
``<output>/<run_id>-<command>.jsonl`` and one row to the matching ``.csv``
ledger, where run_id hashes the resolved parameters and seed. The CSV
leaves ``runtime_s`` empty so identical runs give identical rows.

Exit status: 0 all hard checks passed, 1 a hard check failed, 2 bad
configuration or arguments, 3 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import cache as table_cache
from . import error_terms, inequalities, moments, voronoi, zeta_line
from .arith_tables import MAX_SIEVE_LIMIT, MAX_TAU_LIMIT, Kind, fit_summatory
from .errors import DivzetaError, InvalidArgumentError, ResourceLimitError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("divzeta")

COMMANDS = ("sieve", "delta", "ecurve", "moment", "jutila", "voronoi-check",
            "quadruples", "large-values", "fit-summatory")
GLOBAL_KEYS = ("seed", "cache_dir", "output", "threads")


@dataclass
class RunConfig:
    command: str
    parameters: dict
    seed: int
    cache_dir: Path
    output: Path
    threads: int = 1

    @property
    def run_id(self):
        blob = json.dumps({"command": self.command, "parameters": self.parameters,
                           "seed": self.seed}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


@dataclass
class Outcome:
    records: list = field(default_factory=list)  # JSON payloads
    rows: list = field(default_factory=list)     # CSV rows (dicts)
    columns: tuple = ()
    summary: str = ""
    checks: dict = field(default_factory=dict)   # name -> bool (hard)


class ConfigError(DivzetaError):
    pass


# --- commands -------------------------------------------------------------

def _table(cfg, kind, limit):
    table, source = table_cache.load_or_build(kind, limit, cfg.cache_dir)
    log.info("%s table to %d from %s", Kind.parse(kind).name, limit, source)
    return table, source


def cmd_sieve(cfg, p):
    table, source = _table(cfg, p["kind"], p["limit"])
    vals = table.values
    checks = {"first_value": int(vals[1]) == (4 if table.kind is Kind.TWO_SQUARES else 1)}
    if table.kind is Kind.TWO_SQUARES:
        checks["divisible_by_4"] = bool(np.all(vals[1:] % 4 == 0))
    rec = {"kind": table.kind.name.lower(), "limit": table.limit, "source": source,
           "square_sum": str(table.square_prefix[-1])}
    return Outcome([rec], [rec], ("kind", "limit", "source", "square_sum"),
                   f"sieve {rec['kind']} to {table.limit} ({source})", checks)


def cmd_delta(cfg, p):
    kind = error_terms.ErrorTermKind.parse(p["kind"])
    xs = [float(x) for x in p["x"]]
    need = max(xs) * (4 if kind is error_terms.ErrorTermKind.ALTERNATING_DELTA_STAR else 1)
    table, _ = _table(cfg, kind.table_kind, int(math.floor(need)) + 1)
    rows = []
    for x in xs:
        if kind is error_terms.ErrorTermKind.ALTERNATING_DELTA_STAR:
            v = error_terms.delta_star(x, table)
            rows.append({"kind": kind.value, "x": x, "value": v.combination,
                         "direct": v.direct})
        else:
            rows.append({"kind": kind.value, "x": x,
                         "value": error_terms.evaluate(kind, x, table), "direct": ""})
    return Outcome(rows, rows, ("kind", "x", "value", "direct"),
                   f"{kind.value} at {len(xs)} point(s)")


def _quad_config(p):
    return zeta_line.QuadratureConfig(step=p["step"], tolerance=p["tolerance"],
                                      rs_correction_order=p["rs_order"],
                                      small_t_cutoff=p["cutoff"])


def cmd_ecurve(cfg, p):
    qc = _quad_config(p)
    curve = zeta_line.cached_e_curve(p["t_min"], p["t_max"], qc, cfg.cache_dir,
                                     check=not p["no_check"])
    g, e = curve.t_grid, curve.e_values
    mean = float(np.trapezoid(e, g) / (g[-1] - g[0]))
    rec = {"t_min": curve.t_min, "t_max": curve.t_max, "points": int(g.size),
           "mean_e": mean, "min_e": float(e.min()), "max_e": float(e.max()),
           "config": qc.digest()}
    path = zeta_line.e_curve_cache_path(cfg.cache_dir, p["t_min"], p["t_max"], qc)
    rec["curve_csv"] = str(path)
    return Outcome([rec], [rec], tuple(rec), f"E curve [{curve.t_min}, {curve.t_max}] "
                   f"mean {mean:.4f}", {"finite": bool(np.all(np.isfinite(e)))})


def cmd_moment(cfg, p):
    kind = p["kind"].lower()
    T, U, k = p["T"], p["U"], p["k"]
    cols = moments.MomentReport.JSON_FIELDS
    if kind == "e":
        hi = 2 * T + U
        lo = T - U if k == 4 else T
        curve = zeta_line.cached_e_curve(max(lo, 0.0), hi, zeta_line.DEFAULT_CONFIG,
                                         cfg.cache_dir, check=False)
        if k == 4:
            rep = moments.fourth_moment_probe("E", T, U, e_curve=curve)
        else:
            rep = moments.e_diff_sq_integral(T, U, curve)
    else:
        Ti, Ui = int(T), int(U)
        if kind == "delta":
            table, _ = _table(cfg, Kind.DIVISOR, 2 * Ti + Ui)
            rep = (moments.fourth_moment_probe("delta", Ti, Ui, divisor_table=table)
                   if k == 4 else moments.delta_diff_sq_sum(Ti, Ui, table))
        elif kind == "circle":
            table, _ = _table(cfg, Kind.TWO_SQUARES, 2 * Ti + Ui)
            rep = moments.circle_diff_sq_integral(Ti, Ui, table)
        elif kind == "cusp":
            table, _ = _table(cfg, Kind.RAMANUJAN_TAU, 2 * Ti + Ui)
            rep = moments.cusp_diff_sq_integral(Ti, Ui, table)
        else:
            raise ConfigError(f"unknown moment kind {kind!r}")
    rep = _with_seed(rep, cfg.seed)
    rec = rep.to_dict()
    row = dict(rec, runtime_s="")
    return Outcome([rec], [row], cols,
                   f"moment {kind} T={T:g} U={U:g} k={k}: {rep.moment:.6g} "
                   f"(ratio {rep.ratio if rep.ratio is None else format(rep.ratio, '.4g')})",
                   {"non_negative": rep.moment >= 0})


def _with_seed(rep, seed):
    from dataclasses import replace
    return replace(rep, seed=seed)


def cmd_jutila(cfg, p):
    T, H, U = p["T"], p["H"] or p["T"], p["U"]
    table, _ = _table(cfg, Kind.DIVISOR, T + H + U)
    res = moments.jutila_identity_check(T, H, U, table)
    rec = {"T": T, "H": H, "U": U, "lhs": res.lhs, "rhs": res.rhs, "ratio": res.ratio}
    return Outcome([rec], [rec], tuple(rec),
                   f"jutila T={T} U={U}: lhs/rhs = {res.ratio:.4f}",
                   {"non_negative": res.lhs >= 0 and res.rhs >= 0})


def cmd_voronoi_check(cfg, p):
    kind = error_terms.ErrorTermKind.parse(p["kind"])
    n_values = p["N"]
    x_hi = p["x_max"]
    need = max(max(n_values), int(x_hi * (4 if kind is error_terms.ErrorTermKind.ALTERNATING_DELTA_STAR else 1)) + 2)
    table, _ = _table(cfg, kind.table_kind, need)
    study = voronoi.truncation_study(kind, table, n_values, p["samples"],
                                     (p["x_min"], x_hi), cfg.seed)
    rows = [{"kind": kind.value, "N": n, "rms": r, "slope": study.slope}
            for n, r in zip(study.n_values, study.rms_errors)]
    in_band = -0.7 <= study.slope <= -0.3
    return Outcome([{"kind": kind.value, "N": list(study.n_values),
                     "rms": list(study.rms_errors), "slope": study.slope,
                     "seed": cfg.seed}],
                   rows, ("kind", "N", "rms", "slope"),
                   f"voronoi {kind.value}: slope {study.slope:.3f}",
                   {"slope_in_band": in_band})


def cmd_quadruples(cfg, p):
    res = inequalities.count_close_quadruples(p["N"], p["k"], p["delta"])
    rec = res.to_dict()
    checks = {"at_most_N4": res.count <= res.N**4}
    if res.k == 2:
        checks["diagonal_lower_bound"] = res.count >= 2 * res.N**2 - res.N
    return Outcome([rec], [rec], ("N", "k", "delta", "count", "bound_scale"),
                   f"quadruples N={res.N} k={res.k} delta={res.delta:g}: count {res.count}",
                   checks)


def cmd_large_values(cfg, p):
    T, V = p["T"], p["V"]
    peaks = inequalities.scan_peaks(T, V, p["grid_step"])
    G = p["A"] * (V / math.log(T)) ** 2
    curve = zeta_line.cached_e_curve(T / 3 - 2 * G - 1, 3 * T + 2 * G + 1,
                                     zeta_line.DEFAULT_CONFIG, cfg.cache_dir, check=False)
    rep = inequalities.large_value_report(peaks, p["k"], p["A"], curve)
    rec = rep.to_dict()
    return Outcome([rec], [rec], tuple(rec),
                   f"large values T={T:g} V={V:g}: R={rep.R}, implied {rep.implied_constant:.4g}",
                   {"rhs_non_negative": rep.rhs >= 0})


def cmd_fit_summatory(cfg, p):
    kind = Kind.parse(p["kind"])
    grid = np.unique(np.round(np.geomspace(p["x_min"], p["x_max"], p["points"])))
    table, _ = _table(cfg, kind, int(grid[-1]))
    fit = fit_summatory(kind, grid, table)
    rec = {"kind": kind.name.lower(), "degree": fit.degree, "leading_coeff": fit.leading_coeff,
           "reference_coeff": fit.reference_coeff, "relative_error": fit.relative_error,
           "coeffs": list(fit.coeffs), "constant_relative_error": fit.constant_relative_error,
           "spread": fit.spread}
    row = dict(rec, coeffs=" ".join(f"{c:.17g}" for c in fit.coeffs))
    return Outcome([rec], [row], tuple(rec),
                   f"fit {rec['kind']}: leading {fit.leading_coeff:.6g}")


def _require(cond, message):
    if not cond:
        raise InvalidArgumentError(message)


def validate(command, p):
    """Check numeric preconditions before any table or curve is built."""
    if command == "sieve":
        Kind.parse(p["kind"])
        _require(p["limit"] >= 1, "limit must be >= 1")
        _require(p["limit"] <= MAX_SIEVE_LIMIT, f"limit above {MAX_SIEVE_LIMIT}")
        if Kind.parse(p["kind"]) is Kind.RAMANUJAN_TAU and p["limit"] > MAX_TAU_LIMIT:
            raise ResourceLimitError(f"tau limit above {MAX_TAU_LIMIT}")
    elif command == "delta":
        error_terms.ErrorTermKind.parse(p["kind"])
        _require(all(x >= 0 and math.isfinite(x) for x in p["x"]), "x must be finite and >= 0")
    elif command == "ecurve":
        _require(0 <= p["t_min"] < p["t_max"] <= zeta_line.MAX_T, "need 0 <= t_min < t_max <= 1e6")
        _quad_config(p)
    elif command == "moment":
        _require(p["kind"].lower() in ("delta", "circle", "cusp", "e"), "unknown moment kind")
        _require(p["T"] > 0 and p["U"] >= 0, "need T > 0 and U >= 0")
        _require(p["k"] == 2 or p["kind"].lower() in ("delta", "e"),
                 "k = 4 only for delta and E")
        if p["kind"].lower() != "e":
            _require(p["T"] == int(p["T"]) and p["U"] == int(p["U"]),
                     "T and U must be integers for discrete kinds")
    elif command == "jutila":
        _require(p["T"] >= 1 and p["U"] >= 1 and p["H"] >= 0, "need T, U >= 1 and H >= 0")
    elif command == "voronoi-check":
        error_terms.ErrorTermKind.parse(p["kind"])
        _require(len(p["N"]) >= 2 and min(p["N"]) >= 1, "need at least two N >= 1")
        _require(p["samples"] >= 1, "samples must be positive")
        _require(1 <= p["x_min"] < p["x_max"], "need 1 <= x_min < x_max")
    elif command == "quadruples":
        _require(p["N"] >= 1 and p["k"] >= 2 and p["delta"] >= 0,
                 "need N >= 1, k >= 2, delta >= 0")
        if p["N"] > inequalities.MAX_QUADRUPLE_N:
            raise ResourceLimitError(f"N above {inequalities.MAX_QUADRUPLE_N}")
    elif command == "large-values":
        _require(p["T"] > 1 and p["V"] > 0 and p["A"] > 0, "need T > 1, V > 0, A > 0")
        _require(3 * p["T"] <= zeta_line.MAX_T, "3T must not exceed 1e6")
        _require(p["k"] in (1, 2, 3, 4), "k must be 1..4")
    elif command == "fit-summatory":
        Kind.parse(p["kind"])
        _require(1 <= p["x_min"] < p["x_max"] and p["points"] >= 2,
                 "need 1 <= x_min < x_max and points >= 2")


HANDLERS = {"sieve": cmd_sieve, "delta": cmd_delta, "ecurve": cmd_ecurve,
            "moment": cmd_moment, "jutila": cmd_jutila,
            "voronoi-check": cmd_voronoi_check, "quadruples": cmd_quadruples,
            "large-values": cmd_large_values, "fit-summatory": cmd_fit_summatory}


# --- argument handling ----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="divzeta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="TOML file; flags override its values")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed")
    parser.add_argument("--cache-dir", default=None,
                        help=f"table/curve cache; falls back to ${table_cache.CACHE_ENV}, then ~/.cache/divzeta")
    parser.add_argument("--output", default="reports", help="report directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker threads for compiled kernels")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sieve", help="build or load an arithmetic table")
    s.add_argument("--kind", default="d", help="d, r or tau")
    s.add_argument("--limit", type=int, default=10**6, help="table limit")

    s = sub.add_parser("delta", help="evaluate an error term exactly")
    s.add_argument("--kind", default="delta", help="delta, delta_star, circle or cusp")
    s.add_argument("--x", type=float, nargs="+", default=[1000.5], help="evaluation points")

    s = sub.add_parser("ecurve", help="build E(t) on a range")
    s.add_argument("--t-min", type=float, default=1e4, help="start of range")
    s.add_argument("--t-max", type=float, default=1.01e4, help="end of range")
    s.add_argument("--step", type=float, default=0.25, help="panel width")
    s.add_argument("--tolerance", type=float, default=1e-7, help="per unit length")
    s.add_argument("--rs-order", type=int, default=2, help="Riemann-Siegel corrections 0..2")
    s.add_argument("--cutoff", type=float, default=100.0, help="Euler-Maclaurin below this t")
    s.add_argument("--no-check", action="store_true", help="skip the half-step check")

    s = sub.add_parser("moment", help="short-interval moment")
    s.add_argument("--kind", default="delta", help="delta, circle, cusp or E")
    s.add_argument("--T", type=float, default=1000, help="start of [T, 2T]")
    s.add_argument("--U", type=float, default=5, help="interval length (G for k = 4)")
    s.add_argument("--k", type=int, default=2, choices=(2, 4), help="moment order")

    s = sub.add_parser("jutila", help="both sides of the mean-square formula")
    s.add_argument("--T", type=int, default=10**6, help="start of [T, T + H]")
    s.add_argument("--H", type=int, default=0, help="0 means H = T")
    s.add_argument("--U", type=int, default=50, help="interval length")

    s = sub.add_parser("voronoi-check", help="truncation RMS against exact values")
    s.add_argument("--kind", default="delta", help="delta, delta_star, circle or cusp")
    s.add_argument("--N", type=int, nargs="+", default=[100, 1000, 10000], help="truncation lengths")
    s.add_argument("--samples", type=int, default=1000, help="half-integer samples")
    s.add_argument("--x-min", type=float, default=1e5, help="sample range start")
    s.add_argument("--x-max", type=float, default=2e5, help="sample range end")

    s = sub.add_parser("quadruples", help="count close quadruples of k-th roots")
    s.add_argument("--N", type=int, default=20, help="roots taken over (N, 2N]")
    s.add_argument("--k", type=int, default=2, help="root order")
    s.add_argument("--delta", type=float, default=0.0, help="closeness, 0 = exact equality")

    s = sub.add_parser("large-values", help="peak count against E-difference moments")
    s.add_argument("--T", type=float, default=1e4, help="scan [T, 2T]")
    s.add_argument("--V", type=float, default=3.0, help="peak threshold")
    s.add_argument("--k", type=int, default=2, help="moment power 1..4")
    s.add_argument("--A", type=float, default=1.0, help="G = A (V/log T)^2")
    s.add_argument("--grid-step", type=float, default=0.05, help="scan grid spacing")

    s = sub.add_parser("fit-summatory", help="fit sums of squares of d, r or tau")
    s.add_argument("--kind", default="d", help="d, r or tau")
    s.add_argument("--x-min", type=float, default=1e3, help="smallest x")
    s.add_argument("--x-max", type=float, default=1e6, help="largest x")
    s.add_argument("--points", type=int, default=9, help="geometric grid points")
    return parser


def _load_config_file(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def parse_config(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        data = _load_config_file(args.config)
        top = {k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)}
        section = {k.replace("-", "_"): v
                   for k, v in data.get(args.command, {}).items()}
        parser = build_parser()
        unknown = set(top) - set(GLOBAL_KEYS)
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
        parser.set_defaults(**top)
        for action in parser._subparsers._group_actions:
            action.choices[args.command].set_defaults(**section)
        args = parser.parse_args(argv)
    params = {k: v for k, v in vars(args).items()
              if k not in GLOBAL_KEYS + ("config", "command", "verbose")}
    cache_dir = Path(args.cache_dir) if args.cache_dir else table_cache.default_cache_dir()
    cfg = RunConfig(args.command, params, int(args.seed), cache_dir, Path(args.output),
                    max(1, int(args.threads)))
    return cfg, args.verbose


def _append_reports(cfg, outcome, error=None):
    cfg.output.mkdir(parents=True, exist_ok=True)
    stem = f"{cfg.run_id}-{cfg.command}"
    with open(cfg.output / f"{stem}.jsonl", "a") as fh:
        for rec in outcome.records:
            fh.write(json.dumps(dict(rec, run_id=cfg.run_id), default=str) + "\n")
        if outcome.checks:
            fh.write(json.dumps({"run_id": cfg.run_id, "checks": outcome.checks}) + "\n")
        if error is not None:
            fh.write(json.dumps({"run_id": cfg.run_id, "error": error}) + "\n")
    if outcome.rows:
        path = cfg.output / f"{stem}.csv"
        new = not path.exists()
        with open(path, "a", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(outcome.columns), extrasaction="ignore")
            if new:
                w.writeheader()
            for row in outcome.rows:
                w.writerow({k: _csv_value(v) for k, v in row.items()})


def _csv_value(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, (list, tuple)):
        return " ".join(_csv_value(x) for x in v)
    return "" if v is None else v


def run(cfg):
    """Execute one configured command; returns the exit status."""
    try:
        import numba
        with warnings.catch_warnings():
            # probing threading layers warns about an old TBB; workqueue is fine
            warnings.simplefilter("ignore")
            numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
    except (ImportError, ValueError):
        pass
    start = time.perf_counter()
    try:
        validate(cfg.command, cfg.parameters)
        outcome = HANDLERS[cfg.command](cfg, cfg.parameters)
    except ResourceLimitError as exc:
        _append_reports(cfg, Outcome(), {"type": "resource_limit", "message": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DivzetaError as exc:
        _append_reports(cfg, Outcome(), {"type": type(exc).__name__, "message": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = sorted(name for name, ok in outcome.checks.items() if not ok)
    error = {"type": "assertion", "failed": failed} if failed else None
    _append_reports(cfg, outcome, error)
    status = "FAIL " + ",".join(failed) if failed else "ok"
    print(f"[{cfg.run_id}] {outcome.summary} [{status}] "
          f"({time.perf_counter() - start:.2f}s)")
    return 1 if failed else 0


def main(argv=None):
    try:
        cfg, verbose = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
