import json
import math
import subprocess
import sys

import pytest

from convexft.checks import CHECKS, format_table, run_suite
from convexft.cli import auto_ppo, main
from convexft.decay import L2_AVERAGE, POINTWISE
from convexft.geometry import make_ball, make_box, make_pball


def test_ft_closed_form(capsys):
    assert main(["ft", "--body", "box:d=2,h=0.5,0.5", "--xi", f"{math.pi},0"]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith("value=0.63661977236758")
    assert "method=closed-form" in out


def test_ft_polytope_file(tmp_path, capsys):
    f = tmp_path / "tri.txt"
    f.write_text("0 -1 0\n-1 0 0\n1 1 1\n")
    assert main(["ft", "--body", f"poly:file={f}", "--xi", "10,10"]) == 0
    out = capsys.readouterr().out
    assert "value=-0.07279282637970" in out and "-0.0784669417987" in out
    assert "method=polytope-exact" in out


def test_ft_writes_header(tmp_path, capsys):
    out = tmp_path / "ft.txt"
    assert main(["ft", "--body", "ball:d=3,r=1", "--xi", "2.5,0,0", "--out", str(out)]) == 0
    header, line = out.read_text().splitlines()
    cfg = json.loads(header[2:])
    assert cfg["body"] == "ball:d=3,r=1" and cfg["xi"] == "2.5,0,0"
    assert line.startswith("value=2.09211467109802")


@pytest.mark.parametrize(
    "argv",
    [
        ["ft", "--body", "ball:d=1,r=1", "--xi", "1"],
        ["ft", "--body", "ball:d=2,r=1", "--xi", "1,2,3"],
        ["ft", "--body", "ball:d=2,r=1", "--xi", "a,b"],
        ["ft", "--body", "ball:d=2,r=1", "--xi", "1,0", "--quad-c", "2"],
        ["avg-decay", "--body", "ball:d=2,r=1", "--rmin", "100", "--rmax", "10"],
        ["pointwise", "--body", "ball:d=2,r=1", "--omega", "0,0"],
        ["lattice", "--body", "ball:d=2,r=1", "--tmin", "10", "--tmax", "5"],
    ],
)
def test_configuration_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "configuration error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["frobnicate"], ["ft", "--xi", "1,0"], ["avg-decay", "--body", "ball:d=2", "--ppo", "2"]])
def test_parse_errors_exit_2(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_evaluation_error_exits_3(capsys):
    assert main(["lattice", "--body", "ball:d=4,r=1", "--tmin", "4", "--tmax", "64", "--nrot", "16"]) == 3
    assert "DimensionUnsupported" in capsys.readouterr().err


def test_pointwise_pass_and_reproducible_output(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["pointwise", "--body", "box:d=2,h=0.5,0.5", "--rmin", "32", "--rmax", "1024"]
    assert main(argv + ["--out", str(a)]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    header = json.loads(a.read_text().splitlines()[0][2:])
    assert header["quantity"] == "pointwise" and header["target"] == -1.0
    assert a.read_text().splitlines()[1] == "R,value,se,ok"


def test_tolerance_miss_exits_4(capsys):
    argv = ["avg-decay", "--body", "ball:d=2,r=1", "--rmin", "32", "--rmax", "1024", "--fit", "direct", "--ppo", "4"]
    code = main(argv + ["--tol", "1e-6"])
    assert code == 4
    assert "FAIL" in capsys.readouterr().err


def test_avg_decay_stdout_csv(capsys):
    assert main(["avg-decay", "--body", "ball:d=2,r=1"]) == 0
    cap = capsys.readouterr()
    assert cap.out.splitlines()[1] == "R,value,se,ok"
    assert "exponent=-1.5" in cap.err and "PASS" in cap.err


def test_lattice_writes_summary(tmp_path, capsys):
    out = tmp_path / "lat.csv"
    argv = ["lattice", "--body", "ball:d=2,r=1", "--tmin", "64", "--tmax", "1024", "--nrot", "16", "--out", str(out)]
    assert main(argv) == 0
    assert (tmp_path / "lat_summary.csv").read_text().splitlines()[1] == "t,rms,se"
    assert "PASS" in capsys.readouterr().out


def test_auto_ppo():
    assert auto_ppo(make_ball(2, 1.0), L2_AVERAGE, 1024) > 1000
    assert auto_ppo(make_box([0.5, 0.5, 0.5]), L2_AVERAGE, 1024) == 128
    assert auto_ppo(make_pball(3, 3.0, 1.0), L2_AVERAGE, 1024) == 8
    assert auto_ppo(make_pball(2, 4.0, 1.0), POINTWISE, 4096) == 512


def test_check_quick(capsys):
    assert main(["check", "--quick", "--only", "Bessel"]) == 0
    assert "checks passed" in capsys.readouterr().out


def test_check_unknown_filter_fails(capsys):
    assert main(["check", "--quick", "--only", "no such check"]) == 5


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "convexft", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "convexft" in r.stdout


def test_quick_suite_passes():
    results = run_suite(quick=True)
    assert len(results) == len(CHECKS)
    failed = [r.name for r in results if not r.passed]
    assert not failed, failed
    table = format_table(results)
    assert table.count("PASS") == len(CHECKS)


@pytest.mark.parametrize(
    "argv,target,tol",
    [
        (["avg-decay", "--body", "ball:d=2,r=1", "--rmax", "4096"], -1.5, 0.05),
        (["avg-decay", "--body", "box:d=3,h=0.5,0.5,0.5", "--rmax", "1024"], -2.0, 0.15),
        (["pointwise", "--body", "box:d=2,h=0.5,0.5", "--omega", "1,0"], -1.0, 0.05),
        (["surface", "--body", "ball:d=3,r=1"], -1.0, 0.05),
    ],
)
def test_cli_exponents(argv, target, tol, capsys):
    assert main(argv + ["--tol", str(tol)]) == 0
    line = capsys.readouterr().err.strip().splitlines()[-1]
    exponent = float(line.split()[0].split("=")[1])
    assert abs(exponent - target) <= tol


def test_cli_pball_average(capsys):
    argv = ["avg-decay", "--body", "pball:d=2,p=4,r=1", "--rmin", "32", "--rmax", "1024"]
    assert main(argv) == 0
    exponent = float(capsys.readouterr().err.strip().splitlines()[-1].split()[0].split("=")[1])
    assert abs(exponent + 1.5) <= 0.1
