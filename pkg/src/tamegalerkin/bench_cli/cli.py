"""Command line: ``params``, ``run``, ``threshold``, ``invariants``, ``nls-residual``.

Exit codes: 0 for success and for reported numerical failures, 1 when an
invariant check fails, 2 for usage, configuration and infeasibility errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import platform
import sys
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .. import __version__
from ..param_solver import InfeasibleError, constraint_margins
from ..problems import NlsResidualProblem
from ..surjection_solver import PreconditionError
from .config import ConfigError, ExperimentConfig, config_hash, from_mapping, load_config, lookup
from .experiments import (
    galerkin_run,
    iteration_params,
    make_problem,
    p1_profile,
    solve_config_params,
    threshold_sweep,
    worker_count,
)
from .invariants import SUITES, run_suites

__all__ = ["main", "build_parser", "write_csv"]

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return "" if x is None else str(x)


def write_csv(rows: Sequence[dict], chash: str, out: str | None, meta: dict | None = None) -> str:
    """Write rows (each prefixed with the config hash) to ``out`` or stdout.

    A ``.meta`` JSON sidecar is written next to a file output.  Returns the CSV
    text.
    """
    columns = ["config_hash"]
    for r in rows:
        for k in r:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        full = {"config_hash": chash, **r}
        w.writerow([_fmt(full.get(c)) for c in columns])
    text = buf.getvalue()
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        sidecar = {
            "config_hash": chash,
            "package_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            **(meta or {}),
        }
        Path(str(path) + ".meta").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)
    return text


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _params_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
        raw = cfg.raw
    else:
        raw = {}
    raw = json.loads(json.dumps(raw))
    sig = raw.setdefault("signature", {})
    tgt = raw.setdefault("targets", {})
    for name in ("s0", "m", "ell", "ell_p", "g"):
        val = getattr(args, name)
        if val is not None:
            sig[name] = val
    for name in ("s1", "delta", "g_p"):
        val = getattr(args, name)
        if val is not None:
            tgt[name] = val
    params = raw.setdefault("params", {})
    if args.variant:
        params["variant"] = args.variant
    if args.eta is not None:
        params["eta"] = args.eta
    for name in ("s0", "m", "ell", "ell_p", "g"):
        lookup(raw, f"signature.{name}")
    return from_mapping(raw)


def cmd_params(args) -> int:
    cfg = _params_config(args)
    p = solve_config_params(cfg)
    rows = [{"kind": "param", "name": k, "value": v} for k, v in p.as_dict().items() if k != "variant"]
    rows.append({"kind": "param", "name": "variant", "value": p.variant})
    for k, m in constraint_margins(cfg.signature, cfg.targets, p).items():
        rows.append({"kind": "margin", "name": k, "value": m})
    write_csv(rows, cfg.hash, args.output or cfg.output, {"command": "params", "seed": cfg.seed})
    return EXIT_OK


def _eps_list(value) -> list[float]:
    return [float(value)] if isinstance(value, (int, float)) else [float(e) for e in value]


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if cfg.problem != "p1":
        raise ConfigError("problem.name", "run supports the p1 problem")
    eps_values = _eps_list(args.eps if args.eps is not None else lookup(cfg.raw, "run.eps"))
    c = float(args.amplitude if args.amplitude is not None else lookup(cfg.raw, "amplitude.c"))
    for e in eps_values:
        if not 0.0 < e <= 1.0:
            raise ConfigError("run.eps", f"value {e} outside (0, 1]")
    problem = make_problem(cfg)
    ip = iteration_params(cfg)
    profile = p1_profile(problem, ip.delta, cfg.profile_modes, cfg.profile_decay, cfg.seed)
    rows = []
    for eps in eps_values:
        amp = c * eps**cfg.amplitude_gamma
        rep = galerkin_run(problem, profile * amp, ip, eps, enforce_regime=ip.r is not None)
        for s in rep.steps:
            rows.append({"kind": "step", "eps": eps, "amplitude": amp, **s.row()})
        rows.append({"kind": "summary", "eps": eps, "amplitude": amp, "verdict": rep.verdict, "n": rep.n,
                     "residual": rep.residual, "u_s1": rep.u_s1, "message": rep.message})
    write_csv(rows, cfg.hash, args.output or cfg.output, {"command": "run", "seed": cfg.seed})
    return EXIT_OK


def cmd_threshold(args) -> int:
    cfg = load_config(args.config)
    eps = sorted(cfg.eps_grid)
    if len(eps) < 4 or eps[-1] / eps[0] < 8.0 - 1e-12:
        raise ConfigError("sweep.eps", "need at least 4 points spanning 3 octaves")
    workers = args.workers if args.workers is not None else worker_count()
    points, fits = threshold_sweep(cfg, workers)
    rows = [{"kind": "point", "scheme": p.scheme, "eps": p.eps, "c_star": p.c_star, "c_fail": p.c_fail,
             "status": p.status, "bracket_verified": p.bracket_verified} for p in points]
    for s, f in sorted(fits.items()):
        rows.append({"kind": "fit", "scheme": s, "exponent": f.exponent, "ci_low": f.ci_low,
                     "ci_high": f.ci_high, "points": f.points})
    if "galerkin" in fits and "newton" in fits:
        rows.append({"kind": "gap", "scheme": "newton-galerkin",
                     "exponent": fits["newton"].exponent - fits["galerkin"].exponent})
    write_csv(rows, cfg.hash, args.output or cfg.output, {"command": "threshold", "seed": cfg.seed})
    return EXIT_OK


def _parse_inject(items: Iterable[str]) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError("inject", f"expected NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def cmd_invariants(args) -> int:
    opts: dict = {}
    raw: dict = {}
    if args.config:
        raw = load_config(args.config, need_targets=False).raw
        opts.update(raw.get("invariants", {}))
    opts.update(_parse_inject(args.inject))
    names = args.filter or None
    if names:
        bad = [n for n in names if n not in SUITES]
        if bad:
            raise ConfigError("filter", f"unknown suite(s) {bad}; choose from {sorted(SUITES)}")
    results = run_suites(names, opts)
    rows = [{"suite": r.suite, "check": r.name, "passed": r.passed, "detail": r.detail} for r in results]
    write_csv(rows, config_hash({"config": raw, "options": opts}), args.output, {"command": "invariants"})
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAIL {r.suite}.{r.name}: {r.detail}", file=sys.stderr)
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_nls_residual(args) -> int:
    raw: dict = {}
    if args.config:
        raw = load_config(args.config, need_targets=False).raw
    kw = dict(lookup(raw, "problem.p2", {}))
    eps = _eps_list(lookup(raw, "nls.eps", [2.0**-j for j in range(2, 7)]))
    s1 = float(lookup(raw, "nls.s1", 5.5))
    prob = NlsResidualProblem(**kw)
    scaling = prob.residual_scaling(eps, s1)
    rows = [{"kind": "point", **r} for r in scaling.rows()]
    rows.append({"kind": "fit", "slope": scaling.slope, "predicted": scaling.predicted})
    write_csv(rows, config_hash(raw), args.output, {"command": "nls-residual"})
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tamegalerkin", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="solve for a feasible exponent tuple")
    p.add_argument("--config")
    for name in ("s0", "m", "ell", "ell-p", "g", "s1", "delta", "g-p", "eta"):
        p.add_argument(f"--{name}", type=float, dest=name.replace("-", "_"))
    p.add_argument("--variant", choices=("full", "galerkin"))
    p.add_argument("--output")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("run", help="run the Galerkin scheme on the configured problem")
    p.add_argument("--config", required=True)
    p.add_argument("--eps", type=float)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("threshold", help="critical amplitudes for the Galerkin scheme and Newton")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("invariants", help="run the invariant suites")
    p.add_argument("--config")
    p.add_argument("--filter", action="append", help=f"suite name, one of {', '.join(SUITES)}")
    p.add_argument("--inject", action="append", metavar="NAME=VALUE",
                   help="override a suite constant, e.g. A2=0.5")
    p.add_argument("--output")
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("nls-residual", help="residual scaling of the NLS ansatz")
    p.add_argument("--config")
    p.add_argument("--output")
    p.set_defaults(func=cmd_nls_residual)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InfeasibleError, PreconditionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
