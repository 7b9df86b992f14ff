"""Experiment configuration: a TOML file with nested sections.

Unknown sections are ignored.  Required fields raise :class:`ConfigError`
naming the dotted path of the missing field.
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from ..param_solver import TameSignature, UserTargets

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "from_mapping", "config_hash", "lookup"]


class ConfigError(ValueError):
    """Malformed or incomplete configuration; ``field`` is the dotted path."""

    def __init__(self, field_name: str, message: str = "missing required field"):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


_MISSING = object()


def lookup(data: dict, path: str, default: Any = _MISSING) -> Any:
    """Value at a dotted path; raises ConfigError when absent and no default."""
    node: Any = data
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is _MISSING:
                raise ConfigError(path)
            return default
        node = node[part]
    return node


def config_hash(data: dict) -> str:
    """Short stable hash of a configuration mapping."""
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ExperimentConfig:
    """Resolved experiment settings.

    ``problem`` holds the problem name and its keyword arguments, the
    amplitude rule is ``||v||'_delta = c eps^gamma_v`` on a fixed profile.
    """

    raw: dict
    problem: str = "p1"
    problem_kwargs: dict = field(default_factory=dict)
    signature: TameSignature | None = None
    targets: UserTargets | None = None
    eta: float | None = None
    variant: str = "full"
    eps_grid: tuple[float, ...] = (0.5, 0.25, 0.125, 0.0625, 0.03125)
    amplitude_c: float = 1e-8
    amplitude_gamma: float = 0.0
    profile_modes: int = 2
    profile_decay: float = 0.25
    K: float = 2.0
    tol_final: float = 1e-8
    relative_tol: bool = True
    n_max: int = 8
    r: float | None = None
    bisection_steps: int = 12
    bracket_lo: float = 1e-12
    bracket_hi: float = 1e3
    newton_budget: int = 50
    newton_radius: float = 1.0
    schemes: tuple[str, ...] = ("galerkin", "newton")
    output: str | None = None
    seed: int = 0

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def validate(self) -> None:
        if not self.eps_grid:
            raise ConfigError("sweep.eps", "empty grid")
        for e in self.eps_grid:
            if not 0.0 < e <= 1.0:
                raise ConfigError("sweep.eps", f"value {e} outside (0, 1]")
        if self.variant not in ("full", "galerkin"):
            raise ConfigError("params.variant", f"unknown variant {self.variant!r}")
        if self.problem not in ("p1", "p2"):
            raise ConfigError("problem.name", f"unknown problem {self.problem!r}")
        for s in self.schemes:
            if s not in ("galerkin", "newton"):
                raise ConfigError("sweep.schemes", f"unknown scheme {s!r}")


def _signature(data: dict, problem: str) -> TameSignature:
    defaults = {"p1": dict(s0=1.0, m=1.0, ell=1.0, ell_p=1.0, g=1.0),
                "p2": dict(s0=3.5, m=2.0, ell=2.0, ell_p=0.0, g=2.0)}[problem]
    if problem == "p1":
        p1 = data.get("problem", {}).get("p1", {})
        defaults.update(g=float(p1.get("g", 1.0)), ell_p=float(p1.get("ell", 1.0)),
                        s0=float(p1.get("s0", 1.0)))
    section = data.get("signature", {})
    return TameSignature(**{k: float(section.get(k, v)) for k, v in defaults.items()})


def from_mapping(data: dict, *, need_targets: bool = True) -> ExperimentConfig:
    problem = str(lookup(data, "problem.name", "p1"))
    pk = dict(lookup(data, f"problem.{problem}", {}))
    if problem == "p1" and "ell" in pk:
        pk["ell_p"] = pk.pop("ell")
    sig = _signature(data, problem)
    targets = None
    if need_targets:
        targets = UserTargets(float(lookup(data, "targets.s1")), float(lookup(data, "targets.delta")),
                              float(lookup(data, "targets.g_p")))
    sweep = data.get("sweep", {})
    solver = data.get("solver", {})
    amp = data.get("amplitude", {})
    cfg = ExperimentConfig(
        raw=data,
        problem=problem,
        problem_kwargs=pk,
        signature=sig,
        targets=targets,
        eta=lookup(data, "params.eta", None),
        variant=str(lookup(data, "params.variant", "full")),
        eps_grid=tuple(float(e) for e in sweep.get("eps", ExperimentConfig.eps_grid)),
        amplitude_c=float(amp.get("c", ExperimentConfig.amplitude_c)),
        amplitude_gamma=float(amp.get("gamma", ExperimentConfig.amplitude_gamma)),
        profile_modes=int(amp.get("profile_modes", ExperimentConfig.profile_modes)),
        profile_decay=float(amp.get("profile_decay", ExperimentConfig.profile_decay)),
        K=float(solver.get("K", 2.0)),
        tol_final=float(solver.get("tol_final", 1e-8)),
        relative_tol=bool(solver.get("relative_tol", True)),
        n_max=int(solver.get("n_max", 8)),
        r=solver.get("r"),
        bisection_steps=int(sweep.get("bisection_steps", 12)),
        bracket_lo=float(sweep.get("bracket_lo", 1e-12)),
        bracket_hi=float(sweep.get("bracket_hi", 1e3)),
        newton_budget=int(sweep.get("newton_budget", 50)),
        newton_radius=float(sweep.get("newton_radius", 1.0)),
        schemes=tuple(sweep.get("schemes", ("galerkin", "newton"))),
        output=lookup(data, "output.csv", None),
        seed=int(data.get("seed", 0)),
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path, *, need_targets: bool = True) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError("config", f"file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"parse error: {exc}") from exc
    return from_mapping(data, need_targets=need_targets)
