import json
import subprocess
import sys

import pytest

from fractel.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_examples(capsys):
    code, out, _ = run(capsys, "classify", "--f", "x^2", "--g", "x")
    assert code == 0 and json.loads(out)["class"] == "iv"
    code, out, _ = run(capsys, "classify", "--f", "1", "--g", "1")
    rep = json.loads(out)
    assert code == 0 and rep["class"] == "iii" and rep["lambda2"] == pytest.approx(1.0)
    code, out, _ = run(capsys, "classify", "--f", "1", "--g", "3/(x+2)", "--beta", "0", "--grid", "0,5,5,0.1,1,5")
    rep = json.loads(out)
    assert rep["class"] == "ii"
    assert rep["lambda1"] == pytest.approx(2.0, rel=1e-8) and rep["lambda2"] == pytest.approx(3.0, rel=1e-8)
    assert rep["domain_used"] == [0.0, 5.0]


def test_classify_errors(capsys):
    code, _, err = run(capsys, "classify", "--f", "1/(x", "--g", "x")
    assert code == 2 and "offset 4" in err
    code, _, err = run(capsys, "classify", "--f", "x-3", "--g", "x")
    assert code == 3


def test_solve_csv_shape_and_determinism(capsys, tmp_path):
    argv = ["solve", "--family", "Case2", "--alpha", "0.5", "--f", "x^2", "--a", "1", "--lambda2", "1",
            "--grid", "1,3,5,0.1,1,5"]
    code, out, _ = run(capsys, *argv)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x,t,u,v" and len(lines) == 26
    assert [float(v) for v in lines[1].split(",")[:2]] == [1.0, 0.1]
    assert [float(v) for v in lines[2].split(",")[:2]] == [1.0, 0.325]
    _, again, _ = run(capsys, *argv)
    assert again == out
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(argv + ["--out", str(a)])
    main(argv + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes() == out.encode()


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", "--family", "Case3W5", "--alpha", "0.5", "--a1", "1", "--a2", "0.5",
                       "--format", "json")
    rep = json.loads(out)
    assert code == 0 and rep["columns"] == ["x", "t", "u", "v"] and len(rep["u"]) == 25


def test_solve_errors(capsys):
    code, _, err = run(capsys, "solve", "--family", "Case3W5", "--alpha", "0.5", "--a1", "2", "--a2", "0")
    assert code == 4 and "(+-1, a), (0, +-1), (0, 0)" in err
    code, _, err = run(capsys, "solve", "--family", "Case1LargeAlpha", "--alpha", "1", "--grid", "1,2,3,0.5,3,3")
    assert code == 5 and "Delta = -1" in err
    code, _, _ = run(capsys, "solve", "--family", "Case2", "--alpha", "1.5", "--c1", "1")
    assert code == 4
    code, _, _ = run(capsys, "solve", "--family", "Case2", "--alpha", "0.5", "--f", "1", "--g", "x")
    assert code == 4
    code, _, _ = run(capsys, "solve", "--family", "Case2", "--alpha", "0.5", "--f", "x-1.5")
    assert code == 3
    code, _, _ = run(capsys, "solve", "--family", "Case2", "--alpha", "0.5", "--grid", "1,2,1,0.1,1,5")
    assert code == 2


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "--family", "Case2", "--alpha", "0.5", "--f", "x^2", "--a", "1")
    rep = json.loads(out)
    assert code == 0 and rep["passed"]
    methods = [r["method"] for r in rep["reports"]]
    assert methods == ["termwise", "numeric"]
    assert rep["reports"][0]["relative"] <= 1e-10
    code, out, err = run(capsys, "verify", "--family", "Case2", "--alpha", "0.5", "--f", "x^2", "--a", "1",
                         "--perturb", "0.1")
    assert code == 1 and "termwise residual" in err
    code, out, _ = run(capsys, "verify", "--family", "Case3W4Small", "--alpha", "0.5", "--a1", "0.3",
                       "--a2", "0.3", "--grid", "0.2,2,5,0.2,1,5", "--beta", "0")
    rep = json.loads(out)
    assert code == 0 and rep["reports"][0]["method"] == "numeric"


def test_liealg(capsys):
    code, out, _ = run(capsys, "liealg")
    assert code == 0 and "table matches" in out
    code, _, _ = run(capsys, "liealg", "--alpha", "2")
    assert code == 0
    code, _, err = run(capsys, "liealg", "--negate", "V2")
    assert code == 1 and "(1,2)" in err
    code, out, _ = run(capsys, "liealg", "--representatives")
    assert "W6 = a1 V3 + V4" in out


def test_specfun_eval(capsys):
    code, out, _ = run(capsys, "specfun", "eval", "--function", "ml", "--alpha", "1", "--beta", "1", "--z", "1")
    assert code == 0 and json.loads(out)["value"][0] == pytest.approx(2.718281828459045, rel=1e-14)
    code, out, _ = run(capsys, "specfun", "eval", "--function", "foxh", "--lower", "0,1", "--z", "1,2",
                       "--method", "residues")
    assert json.loads(out)["value"][1] == pytest.approx(0.1353352832366127, rel=1e-13)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fractel", "liealg", "--alpha", "1.5"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and "table matches" in proc.stdout
