import subprocess
import sys
from pathlib import Path

import pytest

from snskit.cli import main
from snskit.config import ConfigError, build_config, parse_assignments, parse_config
from snskit.keyrate import evaluate

BASE_CONFIG = """\
# hardware
exp.p_d     = 1.0e-8
exp.e_d     = 0.03
exp.eta_d   = 0.30
exp.f       = 1.1
exp.alpha_f = 0.2
exp.N       = 1.0e12
exp.L_A     = 150
exp.L_B     = 150

src.p_z  = 0.92
src.eps  = 0.28
src.p0   = 0.025
src.p1   = 0.927
src.mu1  = 0.046
src.mu2  = 0.274
src.mu_z = 0.504

opt.distances = 300
opt.restarts  = 2
opt.max_evals = 120
opt.seed      = 7
"""


def _write(tmp_path: Path, text: str, name: str = "run.cfg") -> str:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def _run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "snskit", *args], capture_output=True, text=True
    )


# ---------------------------------------------------------------------------
# Parsing


def test_parse_assignments_happy_path():
    values = parse_assignments("exp.p_d = 1e-8\n# note\n\nsrc.p_z=0.5\n")
    assert values == {"exp.p_d": "1e-8", "src.p_z": "0.5"}


def test_parse_assignments_reports_line_numbers():
    with pytest.raises(ConfigError, match=":3:"):
        parse_assignments("exp.p_d = 1e-8\n\nexp.dark = 2\n")
    with pytest.raises(ConfigError, match=":1:.*section"):
        parse_assignments("mystery.key = 1\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_assignments("exp.p_d = 1\nexp.p_d = 2\n")
    with pytest.raises(ConfigError, match="expected"):
        parse_assignments("exp.p_d 1e-8\n")


def test_build_config_requires_hardware_block():
    with pytest.raises(ConfigError, match="missing required exp"):
        build_config(parse_assignments("exp.p_d = 1e-8\n"))


def test_build_config_partial_src_rejected():
    text = BASE_CONFIG.replace("src.mu_z = 0.504\n", "")
    with pytest.raises(ConfigError, match="missing required src.*mu_z"):
        build_config(parse_assignments(text))


def test_build_config_symmetric_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, BASE_CONFIG))
    assert cfg.src is not None and cfg.src.is_symmetric()
    assert cfg.distances == (300.0,)
    assert cfg.method == "A" and cfg.zigzag == "approx"
    assert cfg.seed == 7  # falls back to opt.seed


def test_build_config_asymmetric_side(tmp_path):
    text = BASE_CONFIG + "src.mu_z_b = 0.45\nsrc.eps_b = 0.35\nsrc.mu1_b = 0.0479\n"
    cfg = parse_config(_write(tmp_path, text))
    assert not cfg.src.is_symmetric()
    assert cfg.src.mu_z_b == 0.45
    assert cfg.src.p_z_b == cfg.src.p_z  # unspecified side fields mirror


def test_parse_config_overrides(tmp_path):
    path = _write(tmp_path, BASE_CONFIG)
    cfg = parse_config(path, overrides=["exp.N=1e11", "run.method=B"])
    assert cfg.exp.N == 1e11
    assert cfg.method == "B"
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(path, overrides=["exp.bogus=1"])


def test_build_config_validates_values():
    with pytest.raises(ConfigError, match="p_d"):
        build_config(parse_assignments(BASE_CONFIG.replace("exp.p_d     = 1.0e-8", "exp.p_d = 2")))
    with pytest.raises(ConfigError, match="parse"):
        build_config(parse_assignments(BASE_CONFIG.replace("= 1.0e12", "= twelve")))


def test_build_config_search_box_keys(tmp_path):
    cfg = parse_config(
        _write(tmp_path, BASE_CONFIG + "opt.mu_hi = 0.5\nopt.p_lo = 1e-3\n")
    )
    assert cfg.box == {"mu_hi": 0.5, "p_lo": 1e-3}
    from snskit.cli import _problem

    problem = _problem(cfg, "A", "approx", 0)
    assert problem.mu_hi == 0.5 and problem.p_lo == 1e-3


# ---------------------------------------------------------------------------
# CLI end to end


def test_cli_help_runs():
    cp = _run_cli("--help")
    assert cp.returncode == 0
    assert "rate" in cp.stdout and "scan" in cp.stdout


def test_cli_rate_fixed_point(tmp_path):
    cp = _run_cli("rate", "--config", _write(tmp_path, BASE_CONFIG))
    assert cp.returncode == 0, cp.stderr
    assert "R             2.65225e-06" in cp.stdout
    assert "eps_tol" in cp.stdout


def test_cli_rate_config_error_names_field(tmp_path):
    path = _write(tmp_path, BASE_CONFIG.replace("exp.p_d     = 1.0e-8", "exp.p_d = 2"))
    cp = _run_cli("rate", "--config", path)
    assert cp.returncode == 2
    assert "p_d" in cp.stderr


def test_cli_rate_zero_rate_exit_code(tmp_path):
    # Fixed source point at a distance far beyond reach: report still prints.
    path = _write(tmp_path, BASE_CONFIG)
    cp = _run_cli("rate", "--config", path, "--set", "exp.L_A=400", "--set", "exp.L_B=400")
    assert cp.returncode == 3
    assert "R             0.00000e+00" in cp.stdout


def test_cli_rate_method_b_flag(tmp_path):
    cp = _run_cli("rate", "--config", _write(tmp_path, BASE_CONFIG), "--method", "B")
    assert cp.returncode == 0
    assert "2.84911e-06" in cp.stdout


def test_cli_scan_empty_grid_writes_header_only(tmp_path):
    path = _write(tmp_path, BASE_CONFIG.replace("opt.distances = 300", "opt.distances ="))
    out = tmp_path / "scan.csv"
    cp = _run_cli("scan", "--config", path, "--out", str(out))
    assert cp.returncode == 0, cp.stderr
    assert out.read_text() == "L_km,R_A,R_B,plob1,plob2,p_z,eps,p0,p1,mu1,mu2,mu_z\n"


def test_cli_scan_unwritable_path_exit_code(tmp_path):
    path = _write(tmp_path, BASE_CONFIG)
    cp = _run_cli("scan", "--config", path, "--out", str(tmp_path / "no" / "dir" / "x.csv"))
    assert cp.returncode == 4


def test_cli_plob_values():
    cp = _run_cli("plob", "250", "440")
    assert cp.returncode == 0
    assert "1.44270e-05" in cp.stdout
    assert "2.28652e-09" in cp.stdout


def test_cli_rate_optimizes_without_fixed_source(tmp_path):
    # Published-hardware configuration solved through the config path: no
    # src block, budget override, optimization kicks in.
    text = (
        "exp.p_d = 3.36e-8\nexp.e_d = 0.07\nexp.eta_d = 0.20\nexp.f = 1.1\n"
        "exp.alpha_f = 0.185\nexp.N = 2.0e13\nexp.L_A = 201\nexp.L_B = 201\n"
        "budget.xi_default = 1.69e-10\n"
        "opt.restarts = 4\nopt.max_evals = 2000\nopt.seed = 1\n"
    )
    cp = _run_cli("rate", "--config", _write(tmp_path, text), "--method", "A")
    assert cp.returncode == 0, cp.stderr
    rate_line = next(l for l in cp.stdout.splitlines() if l.startswith("R "))
    rate = float(rate_line.split()[-1])
    assert 8.5e-8 <= rate <= 1.15e-7  # ~9.98e-8 at the full budget


def test_cli_tables_command_small_budget():
    cp = _run_cli("tables", "--restarts", "1", "--max-evals", "200", "--seed", "1")
    assert cp.returncode == 0, cp.stderr
    assert "plob1" in cp.stdout
    assert cp.stdout.count("Benchmark rates") == 2


def test_cli_scan_deterministic_and_refeedable(tmp_path):
    path = _write(tmp_path, BASE_CONFIG)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["scan", "--config", path, "--out", str(out1)]) == 0
    assert main(["scan", "--config", path, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    header, row = out1.read_text().strip().splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    # Re-feed the emitted parameters as a fixed-point config; the rate must
    # reproduce the optimizer's method-B value to full precision.
    refed = "\n".join(
        line for line in BASE_CONFIG.splitlines() if not line.startswith("src.")
    )
    refed += "\n" + "\n".join(
        f"src.{name} = {cols[name]}" for name in ("p_z", "eps", "p0", "p1", "mu1", "mu2", "mu_z")
    )
    refed_path = _write(tmp_path, refed, name="refed.cfg")
    cfg = parse_config(refed_path)
    rep = evaluate(cfg.exp.at_distance(float(cols["L_km"])), cfg.src, method="B", budget=cfg.budget)
    assert f"{rep.R:.5e}" == cols["R_B"]
    # And literally through the rate command.
    cp = _run_cli("rate", "--config", refed_path, "--method", "B")
    assert cp.returncode == 0, cp.stderr
    assert f"R             {cols['R_B']}" in cp.stdout
    # Separately-optimized curves keep the bounded-difference estimator ahead.
    assert float(cols["R_B"]) >= float(cols["R_A"])