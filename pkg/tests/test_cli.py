import json
import subprocess
import sys

import numpy as np
import pytest

from convnorm import cli
from convnorm.grid import Gaussian, GridFunction, save_grid_function
from convnorm.output import read_csv_rows

from reference import REFERENCE_N


def run_cli(args, capsys=None):
    code = cli.main(args)
    out = err = ""
    if capsys is not None:
        captured = capsys.readouterr()
        out, err = captured.out, captured.err
    return code, out, err


def csv_config(text):
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    raise AssertionError("no config line")


def test_bounds_row(capsys):
    code, out, _ = run_cli(["bounds", "--p", "1.5"], capsys)
    assert code == 0
    header, rows = read_csv_rows(out)
    assert header == ["p", "c_rt", "c_f", "c_h", "c_s", "empirical_gap"]
    assert float(rows[0]["c_s"]) == pytest.approx(1.10803, abs=5e-5)
    assert csv_config(out)["options"]["p"] == [1.5]


def test_table1_command(tmp_path):
    out = tmp_path / "t.csv"
    code, _, _ = run_cli(["table1", "--N", "512", "--L", "16", "--tol", "1e-10", "-o", str(out)])
    assert code == 0
    text = out.read_text()
    header, rows = read_csv_rows(text)
    assert {"iterations", "residual", "truncation_bound"} <= set(header)
    for r in rows:
        assert float(r["n_numeric"]) == pytest.approx(REFERENCE_N[float(r["p"])], abs=1e-3)
    cfg = csv_config(text)
    assert cfg["tol"] == 1e-10 and cfg["N"] == 512


def test_solve_on_a_gaussian_kernel_file(tmp_path, capsys):
    path = tmp_path / "k.csv"
    save_grid_function(GridFunction.from_function(Gaussian(1.0), 512, 16.0), path)
    code, out, _ = run_cli(["solve", "--p", "1.5", "--q", "1.5", "--kernel", "file",
                            "--kernel-file", str(path)], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["norm_estimate"] == pytest.approx(rec["beckner_bound"], abs=1e-3)
    assert rec["config"]["options"]["kernel_file"] == str(path)


def test_solve_laplace_with_double_check_and_maximizer(tmp_path, capsys):
    m = tmp_path / "max.csv"
    code, out, _ = run_cli(["solve", "--p", "1.5", "--double-check", "--save-maximizer", str(m)],
                           capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["norm_estimate"] == pytest.approx(REFERENCE_N[1.5], abs=1e-3)
    assert rec["double_check"]["delta_N"] < 1e-3 and rec["double_check"]["delta_L"] < 1e-3
    code, out, _ = run_cli(["diag", "--input", str(m), "--delta", "0.05", "--p", "1.5"], capsys)
    assert code == 0
    d = json.loads(out)
    assert 0 < d["diameter"] < 64
    assert d["near_support"]["a"] < d["near_support"]["b"]


@pytest.mark.parametrize("args", [
    ["table1", "--N", "256", "--p", "1.3,1.6"],
    ["oracle", "--m", "8", "--triple", "1.5,1.5", "--seed", "4", "--restarts", "4"],
    ["validate", "--samples", "5000", "--seed", "2"],
    ["chirp", "--lambdas", "16,32"],
    ["sweep", "--N", "128", "--p-lo", "1.1", "--p-hi", "1.2", "--step", "0.05", "--refine-tol", "1e-3"],
])
def test_outputs_are_byte_identical(tmp_path, args):
    out = tmp_path / "o.txt"
    assert run_cli(args + ["-o", str(out)])[0] == 0
    first = out.read_bytes()
    assert run_cli(args + ["-o", str(out)])[0] == 0
    assert out.read_bytes() == first
    assert [p.name for p in tmp_path.iterdir() if p.name.endswith(".tmp")] == []


def test_json_outputs_embed_the_config(capsys):
    code, out, _ = run_cli(["oracle", "--m", "4", "--triple", "2,1", "--restarts", "3"], capsys)
    assert code == 0
    rec = json.loads(out)
    assert rec["config"]["command"] == "oracle"
    assert rec["config"]["options"]["m"] == 4
    assert rec["agree"] and abs(rec["spectral"] - rec["brute_force"]) < 1e-10


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfgfile = tmp_path / "c.json"
    cfgfile.write_text(json.dumps({"N": 128, "tol": 1e-9, "p": [1.5]}))
    code, out, _ = run_cli(["table1", "--config", str(cfgfile), "--N", "256"], capsys)
    assert code == 0
    cfg = csv_config(out)
    assert cfg["N"] == 256 and cfg["tol"] == 1e-9 and cfg["options"]["p"] == [1.5]


def test_sweep_writes_summary_and_plot_data(tmp_path):
    out, plot = tmp_path / "s.csv", tmp_path / "fig.csv"
    code, _, _ = run_cli(["sweep", "--N", "256", "--p-lo", "1.08", "--p-hi", "1.2", "--step", "0.04",
                          "-o", str(out), "--plot-data", str(plot)])
    assert code == 0
    summary = json.loads((tmp_path / "s.csv.summary.json").read_text())
    assert summary["p_star"] == pytest.approx(1.1307, abs=5e-3)
    header, rows = read_csv_rows(plot.read_text())
    assert header == ["p", "n_numeric", "c_rt", "c_f", "c_h", "c_s"]
    assert len(rows) == 4


def test_table1_double_check_columns(capsys):
    code, out, _ = run_cli(["table1", "--N", "256", "--p", "1.5", "--double-check"], capsys)
    assert code == 0
    header, rows = read_csv_rows(out)
    assert float(rows[0]["delta_N"]) < 1e-3 and float(rows[0]["delta_L"]) < 1e-3


@pytest.mark.parametrize("args, code, kind", [
    (["frobnicate"], cli.EXIT_UNKNOWN_COMMAND, "UsageError"),
    ([], cli.EXIT_UNKNOWN_COMMAND, "UsageError"),
    (["bounds", "--p", "abc"], cli.EXIT_USAGE, "UsageError"),
    (["solve", "--p", "1.5", "--N", "1"], cli.EXIT_USAGE, "UsageError"),
    (["oracle", "--triple", "3,3"], cli.EXIT_INFEASIBLE, "InfeasibleExponentsError"),
    (["solve", "--p", "2.5"], cli.EXIT_DOMAIN, "DomainError"),
    (["diag", "--input", "/nonexistent/f.csv", "--delta", "0.1", "--p", "1"], cli.EXIT_IO,
     "FileNotFoundError"),
    (["chirp", "--N", "256"], cli.EXIT_NUMERICAL, "ResolutionError"),
])
def test_error_records_and_exit_codes(capsys, args, code, kind):
    got, out, err = run_cli(args, capsys)
    assert got == code
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["error"] == kind and rec["exit_code"] == code
    assert out == ""


def test_exit_codes_are_distinct():
    codes = [cli.EXIT_INTERNAL, cli.EXIT_UNKNOWN_COMMAND, cli.EXIT_USAGE, cli.EXIT_INFEASIBLE,
             cli.EXIT_DOMAIN, cli.EXIT_IO, cli.EXIT_NUMERICAL, cli.EXIT_VALIDATION]
    assert len(set(codes)) == len(codes) and cli.EXIT_OK not in codes


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "convnorm", "bounds", "--p", "2", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    rec = json.loads(proc.stdout)
    assert rec["rows"][0]["c_rt"] == pytest.approx(np.sqrt(np.pi), abs=1e-12)


def test_solve_multistart_and_residual_log(capsys):
    code, out, _ = run_cli(["solve", "--p", "1.5", "--multistart", "--log-residuals"], capsys)
    assert code == 0
    rec = json.loads(out)
    starts = rec["multistart"]["starts"]
    assert len(starts) == 6 and all(s["converged"] for s in starts)
    assert rec["multistart"]["spread"] < 1e-9
    assert len(rec["residual_history"]) >= 2
    assert rec["residual_history"][-1] < 1e-6
