import csv
import io
import json
import shutil
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from tamegalerkin.bench_cli import cli
from tamegalerkin.bench_cli.config import ConfigError, config_hash, from_mapping, load_config
from tamegalerkin.bench_cli.experiments import (
    WORKERS_ENV,
    bisect_threshold,
    fit_exponent,
    threshold_sweep,
    worker_count,
)
from tamegalerkin.param_solver import TameSignature, UserTargets, check_constraints, solve_params

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

NLS_FLAGS = ["--s0", "3.5", "--m", "2", "--ell", "2", "--ell-p", "0", "--g", "2",
             "--s1", "5.5", "--delta", "6", "--g-p", "2.5"]

SMALL_SWEEP = """
seed = 0
[problem]
name = "p1"
[problem.p1]
N = 16
[targets]
s1 = 2.0
delta = 10.0
g_p = 1.25
[sweep]
eps = [0.5, 0.25, 0.125, 0.0625]
schemes = ["newton"]
bisection_steps = 4
bracket_lo = 1e-6
"""


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def call(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write_config(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- params ------------------------------------------------------------------


def test_params_nls_feasible(tmp_path, capsys):
    out = tmp_path / "params.csv"
    code, _, _ = call(["params", *NLS_FLAGS, "--output", out], capsys)
    assert code == 0
    rows = read_rows(out)
    values = {r["name"]: r["value"] for r in rows if r["kind"] == "param"}
    margins = {r["name"]: float(r["value"]) for r in rows if r["kind"] == "margin"}
    assert all(m > 0 for m in margins.values())
    sig = TameSignature(3.5, 2, 2, 0, 2)
    tgt = UserTargets(5.5, 6, 2.5)
    p = solve_params(sig, tgt, float(values["eta"]))
    assert float(values["sigma"]) == pytest.approx(p.sigma)
    assert check_constraints(sig, tgt, p) == []


def test_params_boundary_delta_exit_2(capsys):
    flags = NLS_FLAGS.copy()
    flags[flags.index("--delta") + 1] = "5.5"
    code, _, err = call(["params", *flags], capsys)
    assert code == 2
    assert "delta" in err


def test_params_galerkin_variant(capsys):
    code, out, _ = call(["params", *NLS_FLAGS, "--variant", "galerkin"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    theta = [r for r in rows if r["name"] == "theta"][0]
    assert float(theta["value"]) == 1.0


def test_params_missing_field_names_it(capsys):
    code, _, err = call(["params", "--s1", "2", "--delta", "10", "--g-p", "1.25"], capsys)
    assert code == 2
    assert "signature.s0" in err


# -- run ---------------------------------------------------------------------


def test_run_happy_path_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert call(["run", "--config", CONFIGS / "p1_run.toml", "--output", a], capsys)[0] == 0
    assert call(["run", "--config", CONFIGS / "p1_run.toml", "--output", b], capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_rows(a)
    summaries = [r for r in rows if r["kind"] == "summary"]
    assert len(summaries) == 3
    assert all(r["verdict"] == "converged" for r in summaries)
    chash = load_config(CONFIGS / "p1_run.toml").hash
    assert all(r["config_hash"] == chash for r in rows)
    meta = json.loads(Path(str(a) + ".meta").read_text())
    assert meta["config_hash"] == chash and meta["seed"] == 0


def test_run_above_regime_is_reported(tmp_path, capsys):
    text = (CONFIGS / "p1_run.toml").read_text().replace("[solver]", "[solver]\nr = 1e-9")
    cfg = write_config(tmp_path, text)
    out = tmp_path / "r.csv"
    code, _, _ = call(["run", "--config", cfg, "--eps", "0.5", "--amplitude", "1.0", "--output", out], capsys)
    assert code == 0
    summary = [r for r in read_rows(out) if r["kind"] == "summary"][0]
    assert summary["verdict"] == "rejected"


def test_run_missing_field_exit_2(tmp_path, capsys):
    text = (CONFIGS / "p1_run.toml").read_text().replace("delta = 10.0\n", "")
    code, _, err = call(["run", "--config", write_config(tmp_path, text)], capsys)
    assert code == 2
    assert "targets.delta" in err


def test_run_missing_file_exit_2(tmp_path, capsys):
    code, _, err = call(["run", "--config", tmp_path / "absent.toml"], capsys)
    assert code == 2
    assert "not found" in err


# -- threshold ---------------------------------------------------------------


def test_threshold_small_sweep(tmp_path, capsys):
    out = tmp_path / "t.csv"
    code, _, _ = call(["threshold", "--config", write_config(tmp_path, SMALL_SWEEP), "--output", out], capsys)
    assert code == 0
    rows = read_rows(out)
    points = [r for r in rows if r["kind"] == "point"]
    assert len(points) == 4
    assert all(r["status"] == "ok" and r["bracket_verified"] == "true" for r in points)
    fit = [r for r in rows if r["kind"] == "fit"][0]
    # the chord iteration for P1 has a threshold proportional to eps^2
    assert float(fit["exponent"]) == pytest.approx(2.0, abs=0.1)


def test_threshold_needs_three_octaves(tmp_path, capsys):
    text = SMALL_SWEEP.replace("[0.5, 0.25, 0.125, 0.0625]", "[0.5, 0.4, 0.3, 0.2]")
    code, _, err = call(["threshold", "--config", write_config(tmp_path, text)], capsys)
    assert code == 2
    assert "sweep.eps" in err


def test_threshold_sweep_worker_independent(tmp_path):
    cfg = load_config(write_config(tmp_path, SMALL_SWEEP.replace("bisection_steps = 4", "bisection_steps = 2")))
    serial = threshold_sweep(cfg, workers=1)
    parallel = threshold_sweep(cfg, workers=2)
    assert serial[0] == parallel[0]


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(WORKERS_ENV, "junk")
    assert worker_count() == 1


def test_bisect_threshold_statuses():
    c, c_fail, status = bisect_threshold(lambda c: c <= 3.7, 1.0, 1e3, steps=12)
    assert status == "ok"
    assert c <= 3.7 < c_fail
    assert (c_fail - c) <= 2.0**-12 * 2 * c
    assert bisect_threshold(lambda c: False, 1.0, 1e3)[2] == "unusable"
    assert bisect_threshold(lambda c: True, 1.0, 1e3)[2] == "capped"


def test_fit_exponent_power_law():
    eps = np.array([0.5, 0.25, 0.125, 0.0625])
    fit = fit_exponent(eps, 3.0 * eps**1.7, "x")
    assert fit.exponent == pytest.approx(1.7)
    assert fit.ci_high - fit.ci_low < 1e-8
    noisy = 3.0 * eps**1.7 * np.array([1.1, 0.9, 1.05, 0.97])
    fit = fit_exponent(eps, noisy, "x")
    assert fit.ci_low < fit.exponent < fit.ci_high


# -- invariants and nls-residual ---------------------------------------------


def test_invariants_default_pass(capsys):
    code, out, _ = call(["invariants"], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["suite"] for r in rows} == set(cli.SUITES)
    assert all(r["passed"] == "true" for r in rows)


def test_invariants_filter(capsys):
    code, out, _ = call(["invariants", "--filter", "fourier"], capsys)
    assert code == 0
    assert {r["suite"] for r in csv.DictReader(io.StringIO(out))} == {"fourier"}


def test_invariants_fault_injection(capsys):
    code, out, err = call(["invariants", "--filter", "fourier", "--inject", "A2=0.5"], capsys)
    assert code == 1
    failed = [r for r in csv.DictReader(io.StringIO(out)) if r["passed"] == "false"]
    assert failed and all("approx" in r["check"] for r in failed)
    assert "FAIL" in err


def test_invariants_unknown_suite(capsys):
    assert call(["invariants", "--filter", "nope"], capsys)[0] == 2


def test_nls_residual_command(tmp_path, capsys):
    out = tmp_path / "n.csv"
    code, _, _ = call(["nls-residual", "--config", CONFIGS / "p2_residual.toml", "--output", out], capsys)
    assert code == 0
    fit = [r for r in read_rows(out) if r["kind"] == "fit"][0]
    assert float(fit["slope"]) >= float(fit["predicted"]) - 0.15


# -- config ------------------------------------------------------------------


def test_config_hash_stable_and_sensitive():
    a = {"x": 1, "y": {"z": [1, 2]}}
    b = {"y": {"z": [1, 2]}, "x": 1}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({"x": 2, "y": {"z": [1, 2]}})


def test_config_validation():
    base = {"targets": {"s1": 2, "delta": 10, "g_p": 1.25}}
    assert from_mapping(base).problem == "p1"
    with pytest.raises(ConfigError) as info:
        from_mapping({**base, "sweep": {"eps": [0.5, 1.5]}})
    assert info.value.field == "sweep.eps"
    with pytest.raises(ConfigError) as info:
        from_mapping({**base, "params": {"variant": "x"}})
    assert info.value.field == "params.variant"
    with pytest.raises(ConfigError) as info:
        from_mapping({"targets": {"s1": 2, "g_p": 1.25}})
    assert info.value.field == "targets.delta"


def test_console_script_entry_point(tmp_path):
    exe = shutil.which("tamegalerkin")
    cmd = [exe] if exe else [sys.executable, "-m", "tamegalerkin.bench_cli"]
    res = subprocess.run([*cmd, "params", *NLS_FLAGS], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("config_hash,")
