"""Command-line front end.

Usage::

    abelprop {solve,reference,roots,validate,compare} --config scenario.cfg
             [--order N] [--branch +|-] [--out DIR] [--trig]

Exit codes: 0 success, 1 configuration error, 2 pipeline or domain error,
3 a diagnostic residual family exceeded its tolerance.
"""
import argparse
import csv
import json
import math
import os
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cubic import depress, solve_cubic
from .exceptions import AbelPropError, ConfigError, ConvergenceWarning
from .model import ModelParams, conservation_drift, initial_state, integrate_reference
from .reduction import cubic_from_abel, lienard_coeffs
from .solution import evaluate, fit_constants, solve_series, validate

EXIT_OK, EXIT_CONFIG, EXIT_PIPELINE, EXIT_DIAGNOSTIC = 0, 1, 2, 3

REQUIRED = ("d1", "d2", "d3", "b1", "b2", "k1", "k2", "x1_0", "x2_0", "x3_0")
DEFAULTS = {"N": None, "t0": 0.0, "horizon": 1.0, "step": 1e-3, "order": 24, "C": 1.0,
            "branch": None, "tol_hard": 1e-6, "tol_diag": 1e-6, "out_dir": "."}
KEYS = REQUIRED + tuple(DEFAULTS)
RATIONAL_KEYS = ("d1", "d2", "d3", "b1", "b2", "k1", "k2", "N", "x1_0", "x2_0", "x3_0", "t0", "C")


def rational_mode():
    return os.environ.get("ABELPROP_RATIONAL", "") == "1"


def _number(key, text, exact):
    try:
        if exact and key in RATIONAL_KEYS:
            return Fraction(text)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"key {key!r}: not a number: {text!r}")


def parse_config(text, exact=False):
    """Parse flat ``key = value`` lines into a config dict."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r} on line {lineno}")
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} on line {lineno}")
        raw[key] = value
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    cfg = dict(DEFAULTS)
    for key, value in raw.items():
        if key == "out_dir":
            cfg[key] = value
        elif key == "branch":
            cfg[key] = _branch(value)
        elif key == "order":
            try:
                cfg[key] = int(value)
            except ValueError:
                raise ConfigError(f"key 'order': not an integer: {value!r}")
            if cfg[key] < 1:
                raise ConfigError("key 'order' must be positive")
        else:
            cfg[key] = _number(key, value, exact)
    if cfg["N"] is None:
        cfg["N"] = cfg["x1_0"] + cfg["x2_0"] + cfg["x3_0"]
    for key in ("horizon", "step"):
        if not cfg[key] > 0:
            raise ConfigError(f"key {key!r} must be positive")
    return cfg


def _branch(value):
    if value not in ("+", "-"):
        raise ConfigError(f"branch must be '+' or '-', got {value!r}")
    return value


def load_config(path, exact=False):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}")
    return parse_config(text, exact)


def scenario(cfg):
    try:
        p = ModelParams(**{k: cfg[k] for k in ("d1", "d2", "d3", "b1", "b2", "k1", "k2", "N")})
        s0 = initial_state((cfg["x1_0"], cfg["x2_0"], cfg["x3_0"]))
    except AbelPropError as exc:
        raise ConfigError(str(exc))
    return p, s0


def fmt(x):
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def sample_times(cfg):
    t0, horizon, step = float(cfg["t0"]), float(cfg["horizon"]), float(cfg["step"])
    n = max(1, math.ceil(horizon / step - 1e-9))
    t = t0 + step * np.arange(n + 1)
    t[-1] = t0 + horizon
    return t


def _solve(cfg, trig):
    p, s0 = scenario(cfg)
    return p, s0, solve_series(p, s0, t0=cfg["t0"], C=cfg["C"], order=cfg["order"],
                               branch=cfg["branch"], trig_fallback=trig)


def cmd_solve(cfg, trig=False, out=sys.stdout):
    p, s0, sol = _solve(cfg, trig)
    out_dir = Path(cfg["out_dir"])
    n = len(sol.x2_coeffs)
    rows = [(k, sol.x1_coeffs[k], sol.x2_coeffs[k], sol.x3_coeffs[k]) for k in range(n)]
    write_csv(out_dir / "coefficients.csv", ["n", "x1", "x2", "x3"], rows)
    t = sample_times(cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        x = evaluate(sol, t)
    write_csv(out_dir / "series.csv", ["t", "x1", "x2", "x3"], np.column_stack([t, x]))
    print(f"branch {sol.branch}  order {sol.order}  radius {sol.radius:.6g}  "
          f"t_off {sol.t_off:.17g}", file=out)
    outside = int(np.sum(np.abs(t - sol.t_off) > sol.radius))
    if outside:
        print(f"note: {outside} of {len(t)} samples lie outside the estimated radius", file=out)
    print(f"wrote {out_dir / 'coefficients.csv'} and {out_dir / 'series.csv'}", file=out)
    return EXIT_OK


def cmd_reference(cfg, trig=False, out=sys.stdout):
    p, s0 = scenario(cfg)
    t0, horizon = float(cfg["t0"]), float(cfg["horizon"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RuntimeWarning)
        traj = integrate_reference(p, s0, t0, t0 + horizon, float(cfg["step"]))
    for w in caught:
        print(f"warning: {w.message}", file=out)
    drift = conservation_drift(traj, p)[:, 1]
    path = Path(cfg["out_dir"]) / "reference.csv"
    write_csv(path, ["t", "x1", "x2", "x3", "drift"],
              np.column_stack([traj.t, traj.states, drift]))
    print(f"wrote {path} ({len(traj)} samples)", file=out)
    return EXIT_OK


def roots_report(cd, trig=False):
    """Lines describing the cubic, its depressed form, roots and shifts."""
    dc = depress(cd)
    show = (lambda v: str(v)) if isinstance(dc.H, Fraction) else fmt
    lines = [f"{k} = {show(v)}" for k, v in
             (("D", cd.D), ("E", cd.E), ("F", cd.F), ("G", cd.G),
              ("H", dc.H), ("I", dc.I), ("delta1", dc.delta1))]
    roots = solve_cubic(cd, trig_fallback=trig)
    ys = roots.roots
    lines += [f"method = {roots.method}", f"delta2 = {fmt(roots.delta2)}"]
    lines += [f"y{k} = {fmt(y)}" for k, y in enumerate(ys, start=1)]
    lines += [f"theta{k} = {fmt(t)}" for k, t in enumerate(roots.thetas, start=1)]
    lines += [
        f"vieta_sum = {fmt(sum(ys))}  (expected 0)",
        f"vieta_pairs = {fmt(ys[0] * ys[1] + ys[0] * ys[2] + ys[1] * ys[2])}  (expected H = {fmt(dc.H)})",
        f"vieta_product = {fmt(ys[0] * ys[1] * ys[2])}  (expected -I = {fmt(-dc.I)})",
    ]
    distinct = len({round(y, 6) for y in ys})
    if distinct < 3:
        lines.append(f"repeated root: {3 - distinct + 1}-fold")
    return lines


def cmd_roots(cfg, trig=False, out=sys.stdout):
    p, s0 = scenario(cfg)
    consts = fit_constants(p, s0, cfg["t0"], cfg["C"], cfg["branch"])
    cd = cubic_from_abel(lienard_coeffs(p), cfg["C"], consts.Cp, consts.Cpp)
    for line in roots_report(cd, trig):
        print(line, file=out)
    return EXIT_OK


def cmd_validate(cfg, trig=False, out=sys.stdout):
    p, s0, sol = _solve(cfg, trig)
    report = validate(sol, p, s0, horizon=float(cfg["horizon"]), tol_hard=cfg["tol_hard"],
                      tol_diag=cfg["tol_diag"], step=float(cfg["step"]))
    print(report.to_text(), file=out)
    path = Path(cfg["out_dir"]) / "validate.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    print(f"wrote {path}", file=out)
    if not report.hard_passed:
        print("error: an identity check failed", file=out)
        return EXIT_PIPELINE
    return EXIT_OK if report.diagnostic_passed else EXIT_DIAGNOSTIC


def cmd_compare(cfg, trig=False, out=sys.stdout):
    p, s0, sol = _solve(cfg, trig)
    t0, horizon, step = float(cfg["t0"]), float(cfg["horizon"]), float(cfg["step"])
    traj = integrate_reference(p, s0, t0, t0 + horizon, step)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        x = evaluate(sol, traj.t)
    dev = np.abs(x - traj.states)
    path = Path(cfg["out_dir"]) / "compare.csv"
    write_csv(path, ["t", "x1_series", "x2_series", "x3_series", "x1_ref", "x2_ref",
                     "x3_ref", "deviation"],
              np.column_stack([traj.t, x, traj.states, dev.max(axis=1)]))
    inside = np.abs(traj.t - sol.t_off) <= sol.radius
    if inside.any():
        print(f"max deviation inside radius: {dev[inside].max():.6g}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "reference": cmd_reference, "roots": cmd_roots,
            "validate": cmd_validate, "compare": cmd_compare}


def build_parser():
    parser = argparse.ArgumentParser(prog="abelprop", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="scenario file (key = value lines)")
    parser.add_argument("--order", type=int, help="series truncation order")
    parser.add_argument("--branch", choices=["+", "-"], help="sign branch of the Abel solution")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--trig", action="store_true",
                        help="use the trigonometric roots when Cardano's discriminant is negative")
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, exact=rational_mode())
        if args.order is not None:
            if args.order < 1:
                raise ConfigError("--order must be positive")
            cfg["order"] = args.order
        if args.branch is not None:
            cfg["branch"] = args.branch
        if args.out is not None:
            cfg["out_dir"] = args.out
        return COMMANDS[args.command](cfg, trig=args.trig, out=out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AbelPropError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
