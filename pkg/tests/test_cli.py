import json
import subprocess
import sys

import numpy as np
import pytest

from palmnut.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, build_parser, config_from_args, main
from palmnut.io import read_pgm, read_trace, read_vector

SMALL = ["--size", "16", "--max-iter", "4", "--timing", "off"]


def run(tmp_path, *args):
    return main([*args, *SMALL, "--out", str(tmp_path)])


@pytest.mark.parametrize("solver", ["palm", "palm_ut", "palm_momentum", "palmnut", "am"])
def test_denoise_outputs(tmp_path, capsys, solver):
    assert run(tmp_path, "--scenario", "denoise", "--solver", solver, "--inner-iter", "2") == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["iterations"] == 4 and summary["solver"] == solver
    rows = read_trace(tmp_path / "trace.csv")
    assert [r[0] for r in rows] == list(range(5))
    assert all(r[1] is None for r in rows)
    assert rows[-1][2] == pytest.approx(summary["final_objective"])
    assert read_vector(tmp_path / "result.cvec").shape == (16, 16)
    assert read_vector(tmp_path / "truth.cvec").shape == (16, 16)
    assert read_pgm(tmp_path / "result_mag.pgm").shape == (16, 16)
    assert read_pgm(tmp_path / "result_phase.pgm").shape == (16, 16)
    on_disk = json.loads((tmp_path / "summary.json").read_text())
    assert on_disk["config"]["solver"] == solver


def test_recon_outputs(tmp_path, capsys):
    assert run(tmp_path, "--scenario", "recon", "--coils", "2") == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert np.isfinite(summary["final_nrmse"])
    assert (tmp_path / "trace.csv").exists() and (tmp_path / "result.cvec").exists()


def test_combine_outputs(tmp_path, capsys):
    assert main(["--scenario", "combine", "--size", "16x8", "--reps", "3", "--max-iter", "4", "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert "single_image_nrmse" in summary
    assert read_vector(tmp_path / "result_mag.rvec").shape == (8, 16)
    assert len(list(tmp_path.glob("noisy*.cvec"))) == 3
    assert all(r[1] is not None for r in read_trace(tmp_path / "trace.csv"))


def test_ablation_outputs(tmp_path, capsys):
    assert run(tmp_path, "--scenario", "ablation") == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert set(summary["iters_to_1pct"]) == {"palm", "palm_momentum", "palm_ut", "palmnut"}
    rows = read_trace(tmp_path / "ablation.csv")
    assert len(rows) == 4 * 5
    assert [r[0] for r in rows[::5]] == ["palm", "palm_momentum", "palm_ut", "palmnut"]


@pytest.mark.parametrize(
    "args",
    [
        ["--scenario", "denoise", "--lambda1", "-1"],
        ["--scenario", "denoise", "--xi", "0"],
        ["--scenario", "denoise", "--size", "12"],
        ["--scenario", "denoise", "--size", "abc"],
        ["--scenario", "recon", "--accel", "0.5"],
        ["--scenario", "denoise", "--max-iter", "-3"],
        ["--scenario", "combine", "--reps", "0"],
        ["--scenario", "denoise", "--sigma", "-0.1"],
        ["--lambda1", "0.1"],
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, args):
    assert main([*args, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_numerical_failure_exit_3(tmp_path, capsys, monkeypatch):
    from palmnut import experiments
    from palmnut.errors import NumericalError

    def boom(*a, **k):
        raise NumericalError("non-finite magnitude at iteration 1")

    monkeypatch.setitem(experiments.SOLVERS, "palmnut", boom)
    assert run(tmp_path, "--scenario", "denoise") == EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err


def test_argparse_rejects_unknown_choice(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--scenario", "deblur"])
    assert info.value.code == 2


def test_config_file_and_flag_override(tmp_path):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text('scenario = "denoise"\nlambda1 = 0.5\nxi = 0.2\nmax-iter = 7\n')
    args = build_parser().parse_args(["--config", str(cfg_file), "--xi", "0.3"])
    cfg = config_from_args(args)
    assert (cfg.scenario, cfg.lambda1, cfg.xi, cfg.max_iter) == ("denoise", 0.5, 0.3, 7)


@pytest.mark.parametrize(
    "text",
    ['scenario = "denoise"\nlambda1 = ', 'scenario = "denoise"\nbogus_key = 1\n', 'scenario = "denoise"\nlambda1 = "big"\n'],
)
def test_bad_config_file(tmp_path, capsys, text):
    cfg_file = tmp_path / "c.toml"
    cfg_file.write_text(text)
    assert main(["--config", str(cfg_file), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.toml")]) == EXIT_CONFIG


def test_seed_changes_output(tmp_path):
    run(tmp_path / "a", "--scenario", "denoise", "--seed", "1")
    run(tmp_path / "b", "--scenario", "denoise", "--seed", "2")
    assert (tmp_path / "a" / "trace.csv").read_bytes() != (tmp_path / "b" / "trace.csv").read_bytes()


def test_module_entry_point_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        cmd = [sys.executable, "-m", "palmnut", "--scenario", "denoise", *SMALL, "--out", str(tmp_path / name)]
        proc = subprocess.run(cmd, capture_output=True, text=True, check=True)
        outs.append(proc.stdout)
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()
    assert (tmp_path / "a" / "result.cvec").read_bytes() == (tmp_path / "b" / "result.cvec").read_bytes()
    assert outs[0] == outs[1]
