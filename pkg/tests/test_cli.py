import math
import subprocess
import sys

import numpy as np
import pytest

from oham_damper.cli import EXIT_BLOWUP, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_OK, EXIT_SPAN, main, parse_range
from oham_damper.config import ConfigError, RunConfig, load

QUICK = ["--steps", "2", "--t-end", "1", "--method", "lm", "--max-evals", "400", "--restarts", "0"]


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    return main([*argv, "--out", str(out)]), out


# ---- reference


def test_reference_row_count_and_format(tmp_path):
    code, out = run(tmp_path, "reference", "--h", "1e-3")
    assert code == EXIT_OK
    header, data = read_csv(out / "reference.csv")
    assert header == ["t", "x", "v", "w"]
    assert len(data) == 10001
    assert data[0].tolist() == [0.0, 5.0, 0.1, 0.0]
    assert np.abs(data[:, 1]).max() == pytest.approx(5.0, abs=1e-3)
    raw = (out / "reference.csv").read_bytes()
    assert b"\r" not in raw and b";" not in raw


def test_reference_harmonic_config(tmp_path):
    cfg = tmp_path / "harmonic.toml"
    cfg.write_text("[damper]\nc = 0\nalpha = 0\nbeta = 0\nf0 = 0\nA = 1\nv0 = 0\n[plan]\nboundaries = [0, 3.141592653589793]\n")
    code, out = run(tmp_path, "reference", "--config", str(cfg), "--h", "1e-4")
    assert code == EXIT_OK
    _, data = read_csv(out / "reference.csv")
    assert data[-1, 0] == pytest.approx(math.pi, abs=1e-14)
    assert data[-1, 1] == pytest.approx(-1.0, abs=1e-10)


def test_reference_blow_up_exit_code(tmp_path, capsys):
    cfg = tmp_path / "wild.toml"
    cfg.write_text("[damper]\nalpha = -1\nA = 3\nc = 0\n")
    code, _ = run(tmp_path, "reference", "--config", str(cfg), "--h", "1e-3")
    assert code == EXIT_BLOWUP
    assert "t=" in capsys.readouterr().err


def test_config_errors_exit_two(tmp_path, capsys):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[damper]\nc = 'x'\n")
    code, _ = run(tmp_path, "solve", "--config", str(cfg))
    assert code == EXIT_CONFIG
    assert "damper.c" in capsys.readouterr().err
    assert main(["reference", "--h", "-1", "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["solve", "--steps", "0", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


# ---- solve / compare / residual


def test_solve_outputs(tmp_path):
    code, out = run(tmp_path, "solve", *QUICK)
    assert code == EXIT_OK
    header, data = read_csv(out / "oham.csv")
    assert header == ["t", "x", "v", "step_index"]
    assert len(data) == 2001
    assert set(data[:, 3]) == {1.0, 2.0}
    assert data[0, 1] == 5.0
    report = (out / "params_report.txt").read_text()
    assert report.count("step ") >= 2 and "lambda" in report and "C7" in report
    assert "J           = " in report


def test_single_step_restriction(tmp_path):
    code, out = run(tmp_path, "solve", "--steps", "1", "--t-end", "0.5", "--method", "lm", "--max-evals", "200", "--restarts", "0")
    assert code == EXIT_OK
    assert "step 2" not in (out / "params_report.txt").read_text()


def test_effective_config_round_trips(tmp_path):
    code, out = run(tmp_path, "solve", *QUICK, "--no-memory-carry", "--seed", "11")
    assert code == EXIT_OK
    cfg = load(out / "config.toml")
    assert not cfg.memory_carry
    assert cfg.optimizer.seed == 11
    assert cfg.boundaries == (0.0, 0.5, 1.0)
    assert load(out / "config.toml") == cfg


def test_no_memory_carry_flag_reported(tmp_path):
    _, out = run(tmp_path, "solve", *QUICK, "--no-memory-carry")
    report = (out / "params_report.txt").read_text()
    assert "memory_carry: false" in report
    assert "neglected history forcing" in report


def test_strict_non_convergence(tmp_path):
    code, _ = run(tmp_path, "solve", "--steps", "1", "--t-end", "0.5", "--max-evals", "20", "--restarts", "0", "--strict")
    assert code == EXIT_NONCONVERGED
    code, _ = run(tmp_path, "solve", "--steps", "1", "--t-end", "0.5", "--max-evals", "20", "--restarts", "0", name="lax")
    assert code == EXIT_OK


def test_solve_is_byte_reproducible(tmp_path):
    _, a = run(tmp_path, "solve", *QUICK, "--threads", "1", name="a")
    _, b = run(tmp_path, "solve", *QUICK, "--threads", "1", name="b")
    assert (a / "oham.csv").read_bytes() == (b / "oham.csv").read_bytes()
    assert (a / "params_report.txt").read_bytes() == (b / "params_report.txt").read_bytes()


def test_compare_self_mode(tmp_path):
    code, out = run(tmp_path, "compare", "--self", "--h", "1e-3", "--plot-data")
    assert code == EXIT_OK
    header, data = read_csv(out / "compare.csv")
    assert header == ["t", "x_oham", "x_ref", "abs_err"]
    assert len(data) == 2001
    assert data[0, 0] == 0.0 and data[-1, 0] == 10.0
    assert np.all(data[:, 3] == 0.0)
    assert "max_abs = 0" in (out / "metrics.txt").read_text()
    assert (out / "plot_numerical.dat").exists() and (out / "plot_oham.dat").exists()


def test_compare_end_to_end_and_cached_reference(tmp_path):
    code, ref = run(tmp_path, "reference", "--steps", "1", "--t-end", "1", "--h", "1e-3", name="ref")
    assert code == EXIT_OK
    code, out = run(tmp_path, "compare", *QUICK, "--reference-csv", str(ref / "reference.csv"))
    assert code == EXIT_OK
    _, data = read_csv(out / "compare.csv")
    assert data[0, 0] == 0.0 and data[-1, 0] == 1.0
    np.testing.assert_allclose(data[:, 3], np.abs(data[:, 1] - data[:, 2]))
    metrics = (out / "metrics.txt").read_text()
    assert "rms" in metrics and "step 2" in metrics


def test_compare_span_mismatch(tmp_path):
    _, ref = run(tmp_path, "reference", "--steps", "1", "--t-end", "1", "--h", "1e-2", name="ref")
    code, _ = run(tmp_path, "compare", "--steps", "2", "--t-end", "2", "--reference-csv", str(ref / "reference.csv"))
    assert code == EXIT_SPAN


def test_residual_dump(tmp_path):
    code, out = run(tmp_path, "residual", *QUICK)
    assert code == EXIT_OK
    header, data = read_csv(out / "residual.csv")
    assert header == ["t", "R", "step_index"]
    assert len(data) == 2001 and np.all(np.isfinite(data[:, 1]))


def test_env_var_output_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("OHAM_DAMPER_OUT", str(tmp_path / "env"))
    assert main(["reference", "--steps", "1", "--t-end", "0.1", "--h", "1e-2"]) == EXIT_OK
    assert (tmp_path / "env" / "reference.csv").exists()


# ---- models


def models(tmp_path, *argv):
    path = tmp_path / "table.csv"
    code = main(["models", *argv, "--csv", str(path)])
    return code, (read_csv(path) if code == EXIT_OK else None)


def test_models_field_law_table(tmp_path):
    code, (header, data) = models(tmp_path, "field-law", "--B", "0:2:0.1", "--y0", "10", "--yinf", "2", "--alpha-ys", "1")
    assert code == EXIT_OK and header == ["B", "Y"]
    assert len(data) == 21
    assert data[0, 1] == 10.0
    assert np.all(np.diff(data[:, 1]) < 0) and np.all(data[:, 1] > 2.0)


def test_models_herschel_bulkley_equals_bingham(tmp_path):
    _, (_, hb) = models(tmp_path, "herschel-bulkley", "--m", "1", "--tau-y", "1.5", "--k", "0.7", "--gamma-dot=-3:3:0.25")
    _, (_, bi) = models(tmp_path, "bingham", "--fc", "1.5", "--c0", "0.7", "--v=-3:3:0.25")
    assert np.array_equal(hb, bi)


def test_models_bingham_at_rest_is_offset(tmp_path):
    _, (_, data) = models(tmp_path, "bingham", "--v", "0", "--f0", "0.3")
    assert data.tolist() == [[0.0, 0.3]]


@pytest.mark.parametrize("name", ["bingham-body", "li", "bingmax"])
def test_other_models_tabulate(tmp_path, name):
    code, (header, data) = models(tmp_path, name)
    assert code == EXIT_OK and len(header) == 2 and np.all(np.isfinite(data))


def test_models_stick_regime(tmp_path):
    _, (header, data) = models(tmp_path, "bingham-body", "--regime", "stick", "--k-spring", "5", "--f0", "0.1", "--dx", "0.2")
    assert header == ["dx", "F"] and data[0, 1] == pytest.approx(1.1)


def test_models_errors(tmp_path):
    assert models(tmp_path, "bingham", "--v", "1:0:1")[0] == EXIT_CONFIG
    assert models(tmp_path, "bingham", "--v", "a:b")[0] == EXIT_CONFIG
    assert models(tmp_path, "field-law", "--B=-1:1:0.5")[0] == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["models", "maxwell"])
    assert info.value.code == 2


def test_parse_range_inclusive():
    np.testing.assert_allclose(parse_range("0:1:0.25", "r"), [0, 0.25, 0.5, 0.75, 1.0])
    assert parse_range("3", "r").tolist() == [3.0]
    with pytest.raises(ConfigError):
        parse_range("0:1:0", "r")


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "oham_damper", "models", "li", "--csv", str(tmp_path / "li.csv")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "li.csv").exists()
