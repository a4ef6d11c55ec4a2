"""Command-line entry point: fit, simulate, replicate, diagnose.

Exit codes: 0 ok, 2 configuration, 3 data, 4 convergence, 5 internal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import re
import sys
from importlib import resources

import numpy as np

from .core import CaseControlData, PrevalenceSpec, RiskSpec
from .diagnostics import independence_screen
from .errors import (
    CovarianceError,
    DataError,
    DegenerateScoreError,
    DimensionError,
    ExcessiveBootstrapFailure,
    InsufficientData,
    NonConvergence,
    PrevalenceError,
    ReplicationFailure,
    ScenarioError,
    SeparationError,
)
from .estimators import Method, fit_methods
from .simgen import gen_case_control, get_scenario, load_scenario_config, run_replication

SCHEMA_VERSION = "1"

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CONVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4, 5

log = logging.getLogger("gxesym")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# CSV I/O

_G_COL = re.compile(r"g(\d+)$")
_X_COL = re.compile(r"x(\d+)$")


def load_csv(path) -> CaseControlData:
    """Read a `d, g1..gq, x1..xp` CSV. Data rows are numbered from 1 in errors."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0]:
        raise DataError(f"{path}: empty file, expected a header row", row=0)
    header = [h.strip().lower() for h in rows[0]]
    if header[0] != "d":
        raise DataError(f"{path}: header must start with column 'd', got {rows[0][0]!r}", row=0, column=rows[0][0])
    q = 0
    while 1 + q < len(header) and _G_COL.match(header[1 + q]):
        q += 1
    p_x = len(header) - 1 - q
    expected = ["d"] + [f"g{k + 1}" for k in range(q)] + [f"x{j + 1}" for j in range(p_x)]
    if header != expected or q == 0 or p_x == 0:
        raise DataError(f"{path}: header must be d, g1..gq, x1..xp; got {','.join(rows[0])}", row=0)

    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    vals = np.empty((len(body), len(header)))
    for i, r in enumerate(body, start=1):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i} has {len(r)} fields, header has {len(header)}", row=i)
        for j, cell in enumerate(r):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {i}, column {header[j]}: cannot parse {cell!r} as a number",
                                row=i, column=header[j]) from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {i}, column {header[j]}: non-finite value", row=i, column=header[j])
            if j == 0 and v not in (0.0, 1.0):
                raise DataError(f"{path}: row {i}, column d: disease status must be 0 or 1, got {cell!r}",
                                row=i, column="d")
            vals[i - 1, j] = v
    return CaseControlData(vals[:, 0].astype(np.int8), vals[:, 1:1 + q], vals[:, 1 + q:])


def _fmt(v: float) -> str:
    # integers print plainly; -0.0 keeps its sign through repr
    if v.is_integer() and abs(v) < 1e15 and not (v == 0 and math.copysign(1.0, v) < 0):
        return str(int(v))
    return repr(v)


def write_csv(data: CaseControlData, path_or_file) -> None:
    header = ["d"] + [f"g{k + 1}" for k in range(data.q)] + [f"x{j + 1}" for j in range(data.p_x)]
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for d, g, x in zip(data.d, data.g, data.x):
            w.writerow([str(int(d))] + [_fmt(float(v)) for v in g] + [_fmt(float(v)) for v in x])
    finally:
        if own:
            fh.close()


# ---------------------------------------------------------------------------
# JSON helpers


def _clean(obj):
    """Make an object JSON-safe: arrays to lists, NaN/inf to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _dump(obj, out) -> None:
    text = json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def output_schema() -> dict:
    """JSON Schema that every JSON document written by this CLI satisfies."""
    text = resources.files("gxesym").joinpath("data").joinpath("output.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _prevalence_json(prev: PrevalenceSpec):
    return {"mode": "rare"} if prev.is_rare else {"mode": "known", "pi1": prev.pi1}


def fit_result_json(fr, seed) -> dict:
    names = fr.param_names
    est = fr.omega_hat.to_array()
    se = fr.se
    lo, hi = fr.ci_lo, fr.ci_hi
    ci_kind = "wald"
    pct = fr.notes.get("percentile_ci")
    if pct is not None:
        lo, hi = pct
        ci_kind = "percentile"
    out = {
        "omega_hat": dict(zip(names, est)),
        "se": dict(zip(names, se)),
        "ci": {nm: [a, b] for nm, a, b in zip(names, lo, hi)},
        "ci_kind": ci_kind,
        "cov": fr.cov.ravel(),
        "cov_source": fr.cov_source,
        "converged": bool(fr.converged),
        "iterations": int(fr.iterations),
        "score_norm": fr.final_score_norm,
        "B": fr.bootstrap_B,
        "seed": seed,
    }
    if "ridge" in fr.notes:
        out["ridge"] = float(fr.notes["ridge"])
    if "bootstrap_failures" in fr.notes:
        out["bootstrap_failures"] = int(fr.notes["bootstrap_failures"])
    return out


# ---------------------------------------------------------------------------
# argument handling


def _methods(text: str) -> list[Method]:
    out = []
    for tok in text.split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        try:
            out.append(Method(tok))
        except ValueError:
            raise ConfigError(f"unknown method {tok!r}; choose from {', '.join(m.value for m in Method)}") from None
    if not out:
        raise ConfigError("--methods is empty")
    return list(dict.fromkeys(out))


def _prevalence(args, required: bool) -> PrevalenceSpec | None:
    if args.rare:
        return PrevalenceSpec.rare()
    if args.pi1 is not None:
        return PrevalenceSpec.known(args.pi1)
    if required:
        raise ConfigError("one of --pi1 or --rare is required")
    return None


def _scenario(args):
    if args.config:
        return load_scenario_config(args.config)
    if args.scenario:
        return get_scenario(args.scenario)
    raise ConfigError("one of --scenario or --config is required")


def _positive(name):
    def conv(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {s!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1, got {v}")
        return v
    return conv


def _available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _add_prevalence(p, required):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--pi1", type=float, help="known population disease rate, in (0, 1)")
    g.add_argument("--rare", action="store_true", help="rare-disease approximation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gxesym", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    default_workers = _available_cpus()

    f = sub.add_parser("fit", help="fit estimators to a case-control CSV")
    f.add_argument("--input", required=True)
    f.add_argument("--methods", default="logistic,spmle_x,spmle_g,composite,symmetric")
    _add_prevalence(f, required=True)
    f.add_argument("--B", type=_positive("--B"), default=200)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--workers", type=_positive("--workers"), default=default_workers)
    f.add_argument("--ci", choices=("wald", "percentile"), default="wald")
    f.add_argument("--lambda-source", choices=("bootstrap", "sandwich"), default="bootstrap")
    f.add_argument("--out")

    s = sub.add_parser("simulate", help="draw one case-control dataset from a scenario")
    s.add_argument("--scenario")
    s.add_argument("--config")
    s.add_argument("--n0", type=_positive("--n0"), default=1000)
    s.add_argument("--n1", type=_positive("--n1"), default=1000)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")

    r = sub.add_parser("replicate", help="Monte Carlo study over a scenario")
    r.add_argument("--scenario")
    r.add_argument("--config")
    r.add_argument("--methods", default="logistic,spmle_x,symmetric")
    _add_prevalence(r, required=False)
    r.add_argument("--R", type=_positive("--R"), default=200)
    r.add_argument("--n0", type=_positive("--n0"), default=1000)
    r.add_argument("--n1", type=_positive("--n1"), default=1000)
    r.add_argument("--B", type=_positive("--B"), default=200)
    r.add_argument("--seed", type=int, required=True)
    r.add_argument("--workers", type=_positive("--workers"), default=default_workers)
    r.add_argument("--out")
    r.add_argument("--estimates-csv", help="also write per-replication estimates here")

    d = sub.add_parser("diagnose", help="independence screen on controls")
    d.add_argument("--input", required=True)
    d.add_argument("--g-kind", default="snp", help="snp, continuous, or a comma list per G column")
    d.add_argument("--no-merge", action="store_true", help="keep sparse genotype-2 cells separate")
    d.add_argument("--out")
    return ap


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args) -> int:
    prev = _prevalence(args, required=True)
    methods = _methods(args.methods)
    data = load_csv(args.input)
    spec = RiskSpec(data.q, data.p_x)
    fits = fit_methods(data, spec, prev, methods, B=args.B, seed=args.seed, workers=args.workers,
                       lambda_source=args.lambda_source, ci=args.ci)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "n0": data.n0,
        "n1": data.n1,
        "prevalence": _prevalence_json(prev),
        "param_names": spec.param_names(),
        "methods": {m.value: fit_result_json(fr, args.seed) for m, fr in fits.items()},
    }
    _dump(doc, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    data = gen_case_control(sc, args.n0, args.n1, seed=args.seed)
    write_csv(data, sys.stdout if args.out in (None, "-") else args.out)
    return EXIT_OK


def cmd_replicate(args) -> int:
    sc = _scenario(args)
    prev = _prevalence(args, required=False)
    rep = run_replication(sc, _methods(args.methods), R=args.R, n0=args.n0, n1=args.n1, B=args.B,
                          seed=args.seed, prevalence_assumed=prev, workers=args.workers)
    _dump(rep.to_dict(), args.out)
    if args.estimates_csv:
        header, rows = rep.estimates_table()
        with open(args.estimates_csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    data = load_csv(args.input)
    kinds = [k.strip() for k in args.g_kind.split(",")]
    kind = kinds[0] if len(kinds) == 1 else kinds
    report = independence_screen(data, kind, merge_small=not args.no_merge)
    _dump(report.to_dict(), args.out)
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "replicate": cmd_replicate, "diagnose": cmd_diagnose}

_CONFIG_ERRORS = (ConfigError, PrevalenceError, ScenarioError, FileNotFoundError, IsADirectoryError)
_DATA_ERRORS = (DataError, DimensionError, InsufficientData, DegenerateScoreError)
_CONVERGENCE_ERRORS = (NonConvergence, SeparationError, CovarianceError, ExcessiveBootstrapFailure,
                       ReplicationFailure)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _CONVERGENCE_ERRORS as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
