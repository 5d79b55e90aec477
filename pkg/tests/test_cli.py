import json
from fractions import Fraction as F

import pytest

from rieszpoly.cli import InputError, main, parse_measure, sweep_grid, verify_polynomial
from rieszpoly.forge import BuildParams, construct, make_q0


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def q0_file(tmp_path):
    path = tmp_path / "q0.json"
    path.write_text(json.dumps(make_q0().to_json()))
    return str(path)


def test_construct_monomial(capsys):
    code, out, _ = run(["construct", "--a", "1", "--b", "1"], capsys)
    report = json.loads(out)
    assert code == 0 and report["step"] == 3
    assert report["expanded"]["terms"] == [{"deg": "1", "re": 1.0, "im": 0.0, "exact": "1"}]


def test_construct_rejects_b_above_a(capsys):
    code, out, err = run(["construct", "--a", "0.5", "--b", "0.8"], capsys)
    assert code == 1 and "b > a" in err and out == ""


def test_bad_usage_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["construct", "--a", "0.5"])
    assert exc.value.code == 1


def test_construct_then_verify_round_trip(tmp_path, capsys):
    out = tmp_path / "s1.json"
    code, stdout, _ = run(["construct", "--a", "0.9", "--b", "0.5", "--tol", "0.02",
                           "--out", str(out)], capsys)
    assert code == 0 and stdout == ""
    report = json.loads(out.read_text())
    assert report["step"] == 1 and report["n"] == 41 and report["run"]["seed"] == 0
    code, stdout, _ = run(["verify", str(out), "--a", "0.9", "--b", "0.5", "--tol", "0.02"],
                          capsys)
    res = json.loads(stdout)
    assert code == 0 and res["ok"]
    assert res["l1"] == {"value": "1", "exact": True}
    assert abs(res["disc"]["lower"] - report["disc"]["lower"]) < 1e-12
    # parsing the file and recomputing matches the in-memory polynomial exactly
    direct = verify_polynomial(construct(F(9, 10), F(1, 2), BuildParams(tol=0.02)).poly,
                               0.9, 0.5, 0.02)
    res.pop("run")
    assert json.dumps(res, sort_keys=True) == json.dumps(direct, sort_keys=True)
    assert abs(res["value_at_one"]["abs"] - 0.5) < 1e-9


def test_verify_q0_against_its_triple(q0_file, capsys):
    code, out, _ = run(["verify", q0_file, "--a", "0.88", "--b", "0.071", "--tol", "0.01"],
                       capsys)
    res = json.loads(out)
    assert code == 0 and res["transform_sup"] == 9 / 128


def test_verify_q0_wrong_disc_target(q0_file, capsys):
    code, _, err = run(["verify", q0_file, "--a", "0.5", "--b", "0.071", "--tol", "0.01"],
                       capsys)
    assert code == 2 and "disc" in err


def test_verify_unreadable_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, out, _ = run(["verify", str(bad), "--a", "0.5", "--b", "0.1"], capsys)
    assert code == 1 and out == ""
    code, _, _ = run(["verify", str(tmp_path / "missing.json"), "--a", "0.5", "--b", "0.1"],
                     capsys)
    assert code == 1


def test_examples_command(capsys):
    code, out, _ = run(["examples"], capsys)
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    assert "||mu^||_inf = 1/4" in lines[0] and "powers-not-singular" in lines[0]
    assert "r = 1," in lines[1]
    assert "||mu|| > r > ||mu^||_inf" in lines[2] and "9/128" in lines[2]


def test_formula_check_q0(capsys):
    code, out, err = run(["formula-check", "--poly", "q0", "--max-n", "64"], capsys)
    rows = out.splitlines()
    assert code == 0 and rows[0] == "n,root_norm,floor_gap" and len(rows) == 65
    assert err.startswith("ok")


def test_formula_check_unit(capsys):
    code, out, _ = run(["formula-check", "--poly", "unit", "--max-n", "4"], capsys)
    assert code == 0
    assert [line.split(",")[1] for line in out.splitlines()[1:]] == ["1.0"] * 4


def test_formula_check_inline_bullet2(capsys):
    code, out, _ = run(["formula-check", "--poly", "0.5z-0.5z^2", "--max-n", "32"], capsys)
    first = out.splitlines()[1].split(",")
    assert code == 0 and first[1] == "1.0" and float(first[2]) == 0.0


def test_formula_check_writes_file(tmp_path, capsys):
    path = tmp_path / "table.csv"
    code, out, _ = run(["formula-check", "--poly", "bullet2", "--max-n", "3", "--out", str(path)],
                       capsys)
    assert code == 0 and out == "" and path.read_text().startswith("n,root_norm")


def test_parse_measure_inline():
    mu = parse_measure("1/4z^5 - 1/4 z^4 + 0.25z^2 - .25z")
    assert mu.poly == make_q0() and mu.haar == 0
    mu = parse_measure("-0.5h + 0.5z")
    assert mu.haar == F(-1, 2) and mu.poly.terms == {1: F(1, 2)}
    assert parse_measure("3").poly.terms == {0: 3}
    for bad in ("0.5z-", "z z", "", "q7"):
        with pytest.raises(InputError):
            parse_measure(bad)


def test_parse_measure_random_uses_seed():
    assert parse_measure("random", 4) == parse_measure("random", 4)
    assert parse_measure("random", 4) != parse_measure("random", 5)


def test_sweep_grid_default():
    grid = sweep_grid()
    assert (F(1, 5), F(1, 20)) in grid and (F(1), F(1)) in grid
    assert all(b <= a for a, b in grid)
    assert len(grid) == 20


def test_sweep_small(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code, _, err = run(["sweep", "--a-values", "0.6", "--b-values", "0.05,0.4,0.6",
                        "--out", str(path)], capsys)
    rows = path.read_text().splitlines()
    assert code == 0 and len(rows) == 4 and "3/3" in err
    assert rows[1].split(",")[2:4] == ["2", "2"]


def test_construct_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        run(["construct", "--a", "0.6", "--b", "0.3", "--out", str(path)], capsys)
    assert a.read_bytes() == b.read_bytes()
