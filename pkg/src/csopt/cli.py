"""Command-line front end: seeded experiment runs emitting plot-ready CSV.

Subcommands:
  optimize     one seeded run (sm1 | sm2 | adaptive | gd), trace CSV
  table        limiting/optimal GD stepsizes for the bundled ranges
  gd-analysis  per-iteration spectral radius of the GD step map
  verify       structure-preservation certification suite

Exit codes: 0 converged / all checks pass, 1 invalid configuration,
2 max-iterations, 3 step-failure, 4 verification bound violated.

Flags override values from an optional key=value config file (--config),
which in turn overrides the built-in defaults. All randomness is seeded.
"""

from __future__ import annotations

import argparse
import sys
from typing import IO

import numpy as np

from .adaptive import AdaptiveConfig, adaptive_optimize, default_h0
from .conformal import IntegratorConfig, RunReport, StoppingRule, optimize
from .errors import CsoptError, InvalidInputError
from .gd import GdConfig, gd_analysis, gd_optimize, stepsize_table
from .geometry import SphereConstraint
from .model import SpectrumRange, eigen_oracle, generate_matrix, standard_initial_state
from .verify import run_certification

_EXIT = {"converged": 0, "max-iterations": 2, "step-failure": 3}

_DEFAULTS = {
    "method": "sm1",
    "dim": 10,
    "lmin": -1.0,
    "lmax": 1.0,
    "seed": 0,
    "h": 0.1,
    "gamma": 1.0,
    "tol": 1e-6,
    "max_iterations": 100_000,
    "r": 0.06,
    "theta": 0.001,
    "h0": None,
    "h_min": 1e-6,
    "h_max": 1.0,
}


def _fmt(x) -> str:
    if isinstance(x, (bool, int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def _parse_config_file(path: str) -> dict:
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in _DEFAULTS:
                raise InvalidInputError(f"{path}:{lineno}: unknown key {key!r}")
            default = _DEFAULTS[key]
            if key == "method":
                values[key] = value.strip()
            elif isinstance(default, int) and not isinstance(default, bool):
                values[key] = int(value)
            else:
                values[key] = float(value)
    return values


def _resolve(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        cfg.update(_parse_config_file(path))
    for key in _DEFAULTS:
        if hasattr(args, key):
            cfg[key] = getattr(args, key)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg["method"] not in ("sm1", "sm2", "adaptive", "gd"):
        raise InvalidInputError(f"invalid method: {cfg['method']!r}")
    if cfg["dim"] < 2:
        raise InvalidInputError(f"invalid dim: {cfg['dim']} (need >= 2)")
    if not cfg["lmin"] < cfg["lmax"]:
        raise InvalidInputError(
            f"invalid lmin/lmax: need lmin < lmax, got ({cfg['lmin']}, {cfg['lmax']})")
    if cfg["h"] <= 0:
        raise InvalidInputError(f"invalid h: {cfg['h']} (need > 0)")
    if cfg["gamma"] < 0:
        raise InvalidInputError(f"invalid gamma: {cfg['gamma']} (need >= 0)")
    if cfg["tol"] <= 0:
        raise InvalidInputError(f"invalid tol: {cfg['tol']} (need > 0)")
    if cfg["max_iterations"] < 0:
        raise InvalidInputError(f"invalid max_iterations: {cfg['max_iterations']}")


def _write_comments(out: IO[str], cfg: dict) -> None:
    for key in sorted(cfg):
        value = cfg[key]
        out.write(f"# {key}={'' if value is None else _fmt(value)}\n")


def _write_trace(out: IO[str], cfg: dict, report: RunReport) -> None:
    _write_comments(out, cfg)
    out.write(f"# status={report.status}\n")
    out.write("iter,t,f,H,g_resid,tangency_resid,h\n")
    for row in report.trace:
        out.write(",".join([str(int(row["iteration"]))] +
                           [_fmt(row[k]) for k in
                            ("t", "f", "H", "g_resid", "tangency_resid", "h")]) + "\n")


def _open_out(args) -> tuple[IO[str], bool]:
    path = getattr(args, "out", None)
    if path:
        return open(path, "w", encoding="utf-8", newline="\n"), True
    return sys.stdout, False


def cmd_optimize(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    _validate(cfg)
    spectrum = SpectrumRange(cfg["lmin"], cfg["lmax"])
    prob = generate_matrix(spectrum, cfg["dim"], cfg["seed"])
    f_ref = eigen_oracle(prob)[0]
    s0 = standard_initial_state(cfg["dim"])
    stop = StoppingRule.oracle(f_ref, cfg["tol"], cfg["max_iterations"])
    h0 = cfg["h0"] if cfg["h0"] is not None else default_h0(spectrum.width)

    method = cfg["method"]
    if method == "gd":
        report = gd_optimize(prob, s0.q, GdConfig(cfg["h"], cfg["tol"],
                                                  cfg["max_iterations"]), f_ref)
    else:
        man = SphereConstraint(cfg["dim"])
        ham = prob.hamiltonian()
        if method == "adaptive":
            acfg = AdaptiveConfig(cfg["r"], cfg["theta"], h0, cfg["h_min"], cfg["h_max"])
            icfg = IntegratorConfig(h0, cfg["gamma"])
            report = adaptive_optimize(man, ham, s0, acfg, icfg, stop)
        else:
            report = optimize(man, ham, s0, IntegratorConfig(cfg["h"], cfg["gamma"]),
                              method, stop)

    out, close = _open_out(args)
    try:
        _write_trace(out, {**cfg, "h0": h0, "f_ref": f_ref}, report)
    finally:
        if close:
            out.close()
    return _EXIT[report.status]


def cmd_table(args: argparse.Namespace) -> int:
    rows = stepsize_table(args.seed, dim=args.dim, run_gd=not args.no_gd,
                          tol=args.tol, max_iterations=args.max_iterations)
    out, close = _open_out(args)
    try:
        _write_comments(out, {"seed": args.seed, "dim": args.dim, "tol": args.tol,
                              "max_iterations": args.max_iterations,
                              "gd_runs": 0 if args.no_gd else 1})
        out.write("lambda_min,lambda_max,h_l,h_opt,status,iterations\n")
        for row in rows:
            out.write(",".join([_fmt(row["lambda_min"]), _fmt(row["lambda_max"]),
                                _fmt(row["h_l"]), row["h_opt_str"],
                                row["status"], str(row["iterations"])]) + "\n")
    finally:
        if close:
            out.close()
    return 0


def cmd_gd_analysis(args: argparse.Namespace) -> int:
    cfg = _resolve(args)
    cfg["h"] = 1.0  # list handled separately; keep scalar validation happy
    _validate(cfg)
    if any(h < 0 for h in args.h):
        raise InvalidInputError(f"invalid h: {args.h} (need >= 0)")
    spectrum = SpectrumRange(cfg["lmin"], cfg["lmax"])
    prob = generate_matrix(spectrum, cfg["dim"], cfg["seed"])
    q0 = standard_initial_state(cfg["dim"]).q
    out, close = _open_out(args)
    try:
        _write_comments(out, {k: cfg[k] for k in
                              ("dim", "lmin", "lmax", "seed", "tol", "max_iterations")})
        out.write(f"# h_list={','.join(_fmt(h) for h in args.h)}\n")
        out.write("h,iter,rho,f\n")
        for h in args.h:
            for rec in gd_analysis(prob, q0, h, cfg["tol"], cfg["max_iterations"]):
                out.write(f"{_fmt(h)},{rec.iteration},{_fmt(rec.rho)},{_fmt(rec.f_value)}\n")
    finally:
        if close:
            out.close()
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.samples < 1:
        raise InvalidInputError(f"invalid samples: {args.samples} (need >= 1)")
    if args.states < 1:
        raise InvalidInputError(f"invalid states: {args.states} (need >= 1)")
    spectrum = SpectrumRange(args.lmin, args.lmax)
    prob = generate_matrix(spectrum, args.dim, args.seed)
    man = SphereConstraint(args.dim)
    results = run_certification(man, prob.hamiltonian(), seed=args.seed,
                                states=args.states, samples=args.samples,
                                eps=args.eps)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.ok else 'FAIL'}  {r.detail}")
    failing = [r.name for r in results if not r.ok]
    if failing:
        print(f"verification failed: {', '.join(failing)}", file=sys.stderr)
        return 4
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dim", type=int, default=argparse.SUPPRESS)
    sub.add_argument("--lmin", type=float, default=argparse.SUPPRESS)
    sub.add_argument("--lmax", type=float, default=argparse.SUPPRESS)
    sub.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    sub.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    sub.add_argument("--max-iterations", dest="max_iterations", type=int,
                     default=argparse.SUPPRESS)
    sub.add_argument("--config", type=str, default=None)
    sub.add_argument("--out", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csopt",
        description="Optimization on embedded manifolds via conformal symplectic "
                    "splitting integrators, with a projected-gradient baseline.")
    subs = parser.add_subparsers(dest="command", required=True)

    opt = subs.add_parser("optimize", help="run one seeded optimization")
    opt.add_argument("--method", choices=("sm1", "sm2", "adaptive", "gd"),
                     default=argparse.SUPPRESS)
    opt.add_argument("--h", type=float, default=argparse.SUPPRESS)
    opt.add_argument("--gamma", type=float, default=argparse.SUPPRESS)
    opt.add_argument("--r", type=float, default=argparse.SUPPRESS)
    opt.add_argument("--theta", type=float, default=argparse.SUPPRESS)
    opt.add_argument("--h0", type=float, default=argparse.SUPPRESS)
    opt.add_argument("--h-min", dest="h_min", type=float, default=argparse.SUPPRESS)
    opt.add_argument("--h-max", dest="h_max", type=float, default=argparse.SUPPRESS)
    _add_common(opt)
    opt.set_defaults(func=cmd_optimize)

    tab = subs.add_parser("table", help="limiting/optimal stepsize table")
    tab.add_argument("--seed", type=int, default=0)
    tab.add_argument("--dim", type=int, default=10)
    tab.add_argument("--tol", type=float, default=1e-6)
    tab.add_argument("--max-iterations", dest="max_iterations", type=int, default=100_000)
    tab.add_argument("--no-gd", action="store_true",
                     help="emit only the stepsize columns (skip GD runs)")
    tab.add_argument("--out", type=str, default=None)
    tab.set_defaults(func=cmd_table)

    ana = subs.add_parser("gd-analysis", help="spectral-radius evolution of GD")
    ana.add_argument("--h", type=float, nargs="+", required=True)
    _add_common(ana)
    ana.set_defaults(func=cmd_gd_analysis)

    ver = subs.add_parser("verify", help="structure-preservation certification")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--dim", type=int, default=10)
    ver.add_argument("--lmin", type=float, default=-1.0)
    ver.add_argument("--lmax", type=float, default=1.0)
    ver.add_argument("--samples", type=int, default=10)
    ver.add_argument("--states", type=int, default=10)
    ver.add_argument("--eps", type=float, default=1e-5)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CsoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main_entry() -> None:
    sys.exit(main())
