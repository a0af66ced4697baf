import json
import subprocess
import sys

import pytest

from conftest import FIXTURES
from partial_oper.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(capsys):
    code, out, err = run(capsys, "validate", "--input", str(FIXTURES / "f1.json"))
    assert code == 0
    data = json.loads(out)
    assert data["valid"] and data["eigenvalues"][0] == ["1/2", "0"]


def test_validate_bad_sum(capsys):
    code, out, err = run(capsys, "validate", "--input", str(FIXTURES / "bad_sum.json"))
    assert code == 1 and "error" in err


def test_missing_file(capsys):
    code, _, err = run(capsys, "limit", "--input", str(FIXTURES / "nope.json"))
    assert code == 1


def test_limit_trace(capsys):
    code, out, err = run(capsys, "limit", "--input", str(FIXTURES / "rank2_dominant.json"))
    assert code == 0
    lines = [json.loads(x) for x in out.splitlines()]
    assert len(lines) == 2 and lines[0]["step"] == 0
    final = lines[-1]
    assert final["final"] and final["signature"]["is_oper"]
    assert "oper=True" in err


def test_limit_budget(capsys):
    code, _, err = run(capsys, "limit", "--budget", "0", "--input", str(FIXTURES / "rank2_dominant.json"))
    assert code == 2


def test_kostov(capsys):
    code, out, err = run(capsys, "kostov", "--eigen", "1/5,-1/5;1/7,-1/7;2/35,-2/35")
    assert code == 0 and json.loads(out)["generic"] is False and "false" in err
    code, out, _ = run(capsys, "kostov", "--eigen", "1/5,-1/5;1/7,-1/7;3/35,-3/35")
    assert json.loads(out)["generic"] is True
    code, _, _ = run(capsys, "kostov", "--eigen", "1/5,-1/5;1/7")
    assert code == 1


def test_walls(capsys):
    code, out, _ = run(capsys, "walls", "--points", "3")
    assert code == 0 and len(json.loads(out)["walls"]) == 4


def test_defdim(capsys, tmp_path):
    dest = tmp_path / "d.json"
    code, out, err = run(capsys, "defdim", "--strong-parabolic", "--input", str(FIXTURES / "pvi_generic.json"),
                         "--output", str(dest))
    assert code == 0 and out == ""
    rep = json.loads(dest.read_text())
    assert rep["h1"] == rep["trace_free"]["h1"] == 2
    assert "h1=2" in err and "strong" in err


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--trials", "8", "--seed", "3")
    assert code == 0 and json.loads(out)["agree"]


def test_scan_deterministic_across_threads(capsys):
    args = ["scan", "--points", "3", "--per-chamber", "2", "--min-chambers", "3", "--seed", "5"]
    code, one, _ = run(capsys, *args)
    code2, two, _ = run(capsys, *args, "--threads", "2")
    assert code == code2 == 0 and one == two
    assert len(json.loads(one)["chambers"]) >= 3


def test_reverse_order_same_signature(capsys):
    _, a, _ = run(capsys, "limit", "--input", str(FIXTURES / "pvi_generic.json"))
    _, b, _ = run(capsys, "limit", "--reverse-order", "--input", str(FIXTURES / "pvi_generic.json"))
    assert json.loads(a.splitlines()[-1])["signature"] == json.loads(b.splitlines()[-1])["signature"]


@pytest.mark.slow
def test_console_entry():
    res = subprocess.run([sys.executable, "-m", "partial_oper.cli", "walls", "--points", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "4 walls" in res.stderr
