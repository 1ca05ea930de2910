import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from emikit.cli import main

DATA = Path(__file__).parent / "data"


def run_cli(*argv, capsys):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------------------
# help output is part of the interface and golden-file tested

@pytest.mark.parametrize("args,name", [
    (["--help"], "help_main.txt"),
    (["eval", "--help"], "help_eval.txt"),
    (["run", "--help"], "help_run.txt"),
    (["convergence", "--help"], "help_convergence.txt"),
    (["export-mms", "--help"], "help_export.txt"),
    (["validate-analytic", "--help"], "help_validate.txt"),
])
def test_help_matches_golden(args, name, capsys):
    with pytest.raises(SystemExit) as exc:
        main(args)
    assert exc.value.code == 0
    out, _ = capsys.readouterr()
    assert out == (DATA / name).read_text()


# ---------------------------------------------------------------------------
# eval

def test_eval_outer_boundary_value(capsys):
    code, out, _ = run_cli("eval", "--preset", "exp1", "--r", "6",
                           "--t", "1.5707963", capsys=capsys)
    assert code == 0
    line = next(ln for ln in out.splitlines() if "u_e" in ln)
    value = float(line.split("=")[1])
    assert value == pytest.approx(10 * math.log(6) + 5, abs=1e-5)


def test_eval_lattice_cell_center(capsys):
    code, out, _ = run_cli("eval", "--preset", "exp3", "--x", "0", "--y", "0",
                           "--z", "0", "--t", "0", "--cell", "1", capsys=capsys)
    assert code == 0
    line = next(ln for ln in out.splitlines() if "u_i[1]" in ln)
    assert float(line.split("=")[1]) == pytest.approx(2.0, abs=1e-12)
    line = next(ln for ln in out.splitlines() if "v[1]" in ln)
    assert float(line.split("=")[1]) == pytest.approx(1.0, abs=1e-12)


def test_eval_out_of_domain_exits_2(capsys):
    code, out, err = run_cli("eval", "--preset", "exp1", "--r", "99", "--t", "0",
                             capsys=capsys)
    assert code == 2
    assert "error:" in err and "outside" in err


def test_eval_gap_point_reports_w(capsys):
    code, out, _ = run_cli("eval", "--preset", "exp2", "--r", "4.5", "--t", "1.0",
                           capsys=capsys)
    assert code == 0
    line = next(ln for ln in out.splitlines() if "w[1,2]" in ln)
    assert float(line.split("=")[1]) == pytest.approx(-20 * math.exp(-1), abs=1e-10)


# ---------------------------------------------------------------------------
# run / convergence

def test_run_prints_error_summary(capsys):
    code, out, _ = run_cli("run", "--preset", "exp1", "--cl", "0.4", "--nf", "7",
                           capsys=capsys)
    assert code == 0
    assert "L2[u_e" in out and "conservation residual" in out


def test_convergence_writes_reports(tmp_path, capsys):
    code, out, _ = run_cli("convergence", "--preset", "exp1",
                           "--schedule", "0.4:7,0.28:14",
                           "--outdir", str(tmp_path), "--tag", "t0",
                           capsys=capsys)
    assert code == 0
    csv_path = tmp_path / "exp1_t0.csv"
    md_path = tmp_path / "exp1_t0.md"
    assert csv_path.exists() and md_path.exists()
    from emikit.verify import parse_report
    report = parse_report(csv_path.read_text())
    assert report.preset == "exp1"
    assert len(report.rows) == 2


def test_convergence_rejects_bad_schedule(tmp_path, capsys):
    code, _, err = run_cli("convergence", "--preset", "exp1",
                           "--schedule", "0.4:7,0.4:14",
                           "--outdir", str(tmp_path), capsys=capsys)
    assert code == 2
    assert "strictly decrease" in err


# ---------------------------------------------------------------------------
# export / validate

def test_export_cli_round_trip(tmp_path, capsys):
    code, out, _ = run_cli("export-mms", "--preset", "exp3", "--spacing", "0.125",
                           "--times", "0,1", "--outdir", str(tmp_path),
                           "--prefix", "x", capsys=capsys)
    assert code == 0
    assert (tmp_path / "x_meta.txt").exists()
    assert (tmp_path / "x_volume_t1.csv").exists()


def test_export_rejects_misaligned_spacing(tmp_path, capsys):
    code, _, err = run_cli("export-mms", "--preset", "exp3", "--spacing", "0.3",
                           "--outdir", str(tmp_path), capsys=capsys)
    assert code == 2
    assert "does not divide" in err


def test_validate_analytic_passes_gate(capsys):
    code, out, _ = run_cli("validate-analytic", "--preset", "exp1",
                           "--samples", "60", capsys=capsys)
    assert code == 0
    assert "within 1.0e-06" in out


def test_installed_entry_point_help():
    proc = subprocess.run([sys.executable, "-m", "emikit.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "emikit" in proc.stdout
