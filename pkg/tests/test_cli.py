import math
import os
import subprocess
import sys

import numpy as np
import pytest

from mlgweibull import cli
from mlgweibull.diagnostics import SUMMARY_COLUMNS
from mlgweibull.errors import NumericalError
from mlgweibull.io import LOSS_COLUMNS, read_draws, read_table, write_draws
from mlgweibull.model import PosteriorDraws
from mlgweibull.simstudy import SimDesign, generate_dataset

FAST = "n_iter = 60\nn_burn = 20\ncoord_mode = planar\nk_grid = 0.3, 0.5, 0.7\nn_pred_per_draw = 5\n"


def write_loss_file(path, n=25, k=0.5, seed=0):
    design = SimDesign(n=n, k=k, beta_true=(0.3, -0.5, -0.2))
    data, _ = generate_dataset(design, np.random.default_rng(seed))
    X = data.X.copy()
    X[:, 1] = X[:, 1] > 0.5
    X[:, 2] = X[:, 2] > 0.3
    lines = [",".join(LOSS_COLUMNS)]
    for i in range(n):
        (x, y), z = data.locs.coords[i], data.Z[i]
        lines.append(f"s{i},{float(x)!r},{float(y)!r},{float(4 + 4 * X[i, 0])!r},{int(X[i, 1])},"
                     f"{int(X[i, 2])},{float(z)!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def workdir(tmp_path):
    write_loss_file(tmp_path / "data.csv")
    (tmp_path / "run.cfg").write_text(FAST, encoding="utf-8")
    return tmp_path


def run(workdir, cmd, out, *extra, config="run.cfg"):
    args = [cmd, "--out", str(workdir / out)]
    if config:
        args += ["--config", str(workdir / config)]
    return cli.run(args + [str(a) for a in extra])


def test_fit_writes_all_artifacts(workdir):
    assert run(workdir, "fit", "o", "--data", workdir / "data.csv") == 0
    out = workdir / "o"
    cols, rows = read_table(out / "summary.csv")
    assert tuple(cols) == SUMMARY_COLUMNS
    assert rows[0]["parameter"] == "beta[magnitude]" and rows[-1]["parameter"] == "phi"
    draws = read_draws(out / "draws.csv")
    assert len(draws) == 40 and draws.meta["k"] == 0.7 and draws.meta["seed"] == 0
    acc = dict(line.split("=") for line in (out / "acceptance.txt").read_text().splitlines())
    assert set(acc) == {"accept_log_sigma", "accept_log_sigma_w", "step_log_sigma", "step_log_sigma_w"}
    assert 0 <= float(acc["accept_log_sigma"]) <= 1
    assert (out / "ingest_report.txt").read_text().startswith("rows=25\nrejected=0")


def test_fit_single_iteration_has_zero_sd(workdir):
    (workdir / "one.cfg").write_text("n_iter = 1\nn_burn = 0\ncoord_mode = planar\n")
    assert run(workdir, "fit", "o", "--data", workdir / "data.csv", config="one.cfg") == 0
    _, rows = read_table(workdir / "o" / "summary.csv")
    assert all(r["sd"] == 0 for r in rows)


def test_seed_flag_overrides_config(workdir):
    run(workdir, "fit", "a", "--data", workdir / "data.csv", "--seed", 5)
    run(workdir, "fit", "b", "--data", workdir / "data.csv")
    assert read_draws(workdir / "a" / "draws.csv").meta["seed"] == 5
    assert (workdir / "a" / "draws.csv").read_bytes() != (workdir / "b" / "draws.csv").read_bytes()


def test_draws_roundtrip_reproduces_summary(workdir):
    assert run(workdir, "fit", "f", "--data", workdir / "data.csv") == 0
    assert run(workdir, "risk", "r", "--data", workdir / "data.csv", "--draws", workdir / "f" / "draws.csv") == 0
    assert (workdir / "f" / "summary.csv").read_bytes() == (workdir / "r" / "summary.csv").read_bytes()
    cols, rows = read_table(workdir / "r" / "risk.csv")
    assert cols == ["level", "var", "es", "tvar"] and [r["level"] for r in rows] == [0.9, 0.95, 0.99]
    assert all(r["var"] <= r["es"] and r["var"] <= r["tvar"] for r in rows)


def test_risk_degenerate_posterior(tmp_path):
    B = 1000
    d = PosteriorDraws(np.tile([0.0, 0.0, 0.0, 0.0, 5.0], (B, 1)), 1, 1, meta={"k": 1.0})
    write_draws(tmp_path / "draws.csv", d)
    (tmp_path / "r.cfg").write_text("x_star = 1\nsite = 0\nn_pred_per_draw = 100\n")
    code = cli.run(["risk", "--draws", str(tmp_path / "draws.csv"), "--config", str(tmp_path / "r.cfg"),
                    "--out", str(tmp_path / "o")])
    assert code == 0
    _, rows = read_table(tmp_path / "o" / "risk.csv")
    assert abs(rows[0]["var"] - math.log(10)) < 0.05


def test_risk_needs_covariates(tmp_path):
    d = PosteriorDraws(np.zeros((3, 5)), 1, 1, meta={"k": 1.0})
    write_draws(tmp_path / "draws.csv", d)
    code = cli.run(["risk", "--draws", str(tmp_path / "draws.csv"), "--out", str(tmp_path / "o")])
    assert code == cli.EXIT_CONFIG


def test_select_flags_one_best(workdir):
    assert run(workdir, "select", "s", "--data", workdir / "data.csv") == 0
    cols, rows = read_table(workdir / "s" / "lpml.csv")
    assert cols == ["k", "lpml", "best", "error"]
    assert [r["k"] for r in rows] == [0.3, 0.5, 0.7]
    assert sum(r["best"] for r in rows) == 1
    best = max(rows, key=lambda r: r["lpml"])
    assert best["best"] == 1


def test_simulate_writes_metrics(workdir):
    (workdir / "sim.cfg").write_text("sim_n = 15\nsim_replicates = 2\nsim_n_iter = 40\nsim_n_burn = 10\n")
    assert run(workdir, "simulate", "m", config="sim.cfg") == 0
    cols, rows = read_table(workdir / "m" / "metrics.csv")
    assert cols == ["setting", "parameter", "bias", "sd", "mse", "cr", "n_ok"]
    assert len(rows) == 5 and all(r["n_ok"] == 2 for r in rows)


# -- failures and exit codes -------------------------------------------------------------

def test_unknown_config_key(workdir, capsys):
    (workdir / "bad.cfg").write_text("priors = 3\n")
    assert run(workdir, "fit", "o", "--data", workdir / "data.csv", config="bad.cfg") == cli.EXIT_CONFIG
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "unknown key" in err[0]


def test_missing_data_flag(workdir):
    assert run(workdir, "fit", "o") == cli.EXIT_CONFIG


def test_ingest_error_code(workdir):
    (workdir / "bad.csv").write_text(",".join(LOSS_COLUMNS) + "\na,1,1,x,0,0,1\n")
    assert run(workdir, "fit", "o", "--data", workdir / "bad.csv") == cli.EXIT_INGEST


def test_numerical_error_code(workdir, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("non-finite chain state at sweep 3")
    monkeypatch.setattr(cli, "run_chain", boom)
    assert run(workdir, "fit", "o", "--data", workdir / "data.csv") == cli.EXIT_NUMERICAL
    assert not (workdir / "o" / "summary.csv").exists()


def test_io_error_codes(workdir):
    assert run(workdir, "fit", "o", "--data", workdir / "missing.csv") == cli.EXIT_IO
    (workdir / "blocker").write_text("")
    assert run(workdir, "fit", "blocker/o", "--data", workdir / "data.csv") == cli.EXIT_IO


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.run(["fit"])
    assert exc.value.code == 2


def test_module_entry_point(workdir):
    env = dict(os.environ, MLGWEIBULL_LOG_LEVEL="INFO")
    proc = subprocess.run([sys.executable, "-m", "mlgweibull", "fit", "--data", str(workdir / "data.csv"),
                           "--config", str(workdir / "run.cfg"), "--out", str(workdir / "m")],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "ingested 25 rows" in proc.stderr
    assert (workdir / "m" / "summary.csv").exists()
