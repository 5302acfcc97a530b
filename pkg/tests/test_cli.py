import csv
import io
import subprocess
import sys

import pytest

from metric_distortion import cli
from metric_distortion.election import load_instance
from metric_distortion.lp import LPError


@pytest.fixture
def fig1_file(tmp_path):
    path = tmp_path / "fig1.txt"
    path.write_text("2 2\n1 0 1\n1 1 0\n")
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_winner_rd(fig1_file, capsys):
    code, out, _ = run(["winner", "--rule", "rd", "--instance", fig1_file], capsys)
    assert code == 0
    assert out == "0: 1/2, 1: 1/2\n"


def test_gen_roundtrip(tmp_path, capsys):
    target = tmp_path / "inst.txt"
    code, out, _ = run(["gen", "radius_lb:beta=7/10,size=5", "-o", str(target)], capsys)
    assert code == 0 and out == ""
    E = load_instance(target.read_text())
    assert E.m == 7


def test_distortion_fig1(fig1_file, capsys):
    code, out, _ = run(["distortion", "--rule", "rd", "--instance", fig1_file], capsys)
    assert code == 0
    value, i_star = out.split()
    assert float(value) == pytest.approx(2, abs=1e-8)
    assert i_star.startswith("i_star=")
    code, out, _ = run(["distortion", "--rule", "pv", "--instance", fig1_file, "--report"], capsys)
    lines = out.splitlines()
    assert float(lines[0].split()[1]) == pytest.approx(3, abs=1e-8)
    assert lines[3] == "metric 2 2"


def test_corpus_ml_bound(capsys):
    argv = ["corpus", "--rule", "ml", "--m", "4", "--n", "5", "--trials", "200", "--seed", "1"]
    code, out, err = run(argv, capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert tuple(rows[0]) == cli.CSV_HEADER
    assert len(rows) == 201
    assert [int(r[0]) for r in rows[1:]] == list(range(200))
    assert max(float(r[2]) for r in rows[1:]) <= 3 + 1e-6
    assert err.startswith("max ")


def test_corpus_byte_identical(capsys):
    argv = ["corpus", "--rule", "rcb:beta=3/5", "--m", "2-4", "--n", "2-5", "--trials", "15", "--seed", "4"]
    _, first, _ = run(argv, capsys)
    _, second, _ = run(argv, capsys)
    assert first == second
    assert first.splitlines()[1].split(",")[1] == "rcb:beta=3/5"


def test_bounds_radius(capsys):
    code, out, _ = run(["bounds", "--kind", "radius", "--B", "0.876353"], capsys)
    assert code == 0
    first = out.splitlines()[0]
    assert first.startswith("radius B=0.876353 bound=")
    assert float(first.rsplit("=", 1)[1]) == pytest.approx(2.75271, abs=1e-4)


def test_bounds_all(capsys):
    _, out, _ = run(["bounds"], capsys)
    lines = out.splitlines()
    assert len(lines) == 2
    assert float(lines[0].rsplit("=", 1)[1]) == pytest.approx(2 * 2 ** 0.5, abs=1e-9)


def test_lowerbound_csv(capsys):
    code, out, _ = run(["lowerbound", "--family", "radius", "--beta", "7/10", "--sizes", "3", "5"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["family", "size", "m", "k", "distortion", "two_level_ratio"]
    values = [float(r[4]) for r in rows[1:]]
    assert values == sorted(values)
    assert float(rows[2][4]) == pytest.approx(3.4571428571, abs=1e-6)


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["winner", "--rule", "rd"],
        ["winner", "--rule", "nope", "--generate", "random:m=3,n=3"],
        ["winner", "--rule", "rd", "--generate", "cube:m=3"],
        ["winner", "--rule", "rd", "--generate", "random:m=3"],
        ["winner", "--rule", "rd", "--instance", "/nonexistent/file"],
        ["winner", "--rule", "rd", "--instance", "a", "--generate", "random:m=3,n=3"],
        ["gen", "radius_lb:beta=1/2,size=5"],
        ["corpus", "--rule", "ml", "--m", "x"],
        ["bounds", "--kind", "rcb", "--B", "1.5"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    code, out, _ = run(argv, capsys)
    assert code == 2
    assert out == ""


def test_bad_instance_file_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("2 1\n1 0 0\n")
    assert run(["winner", "--rule", "rd", "--instance", str(path)], capsys)[0] == 2


def test_computation_failure_exit_1(fig1_file, capsys, monkeypatch):
    def broken(*args, **kwargs):
        raise LPError("solver gave up")

    monkeypatch.setattr(cli, "exact_distortion", broken)
    code, out, err = run(["distortion", "--rule", "rd", "--instance", fig1_file], capsys)
    assert code == 1 and out == ""
    assert "solver gave up" in err


def test_module_entry_point(fig1_file):
    proc = subprocess.run(
        [sys.executable, "-m", "metric_distortion", "winner", "--rule", "pv", "--instance", fig1_file],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    # block order: voter 0 vetoes 1, voter 1 vetoes 0 last
    assert proc.stdout == "0: 1, 1: 0\n"
