import json

import numpy as np
import pytest

from satprop.cli import main
from satprop.instance import Instance
from satprop.io import parse_dimacs, write_dimacs

EX2_WCNF = """p wcnf 3 6
1 -1 2 0
2 -2 3 0
3 -3 1 0
4 -1 -2 -3 0
5 1 2 3 0
6 1 2 0
"""

TRIVIAL_CNF = "p cnf 3 2\n1 2 0\n2 3 0\n"


@pytest.fixture
def ex2_path(tmp_path):
    p = tmp_path / "ex2.wcnf"
    p.write_text(EX2_WCNF)
    return str(p)


def _parse_output(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    o_line = next(l for l in out if l.startswith("o "))
    v_line = next(l for l in out if l.startswith("v "))
    energy = float(o_line.split()[1])
    lits = [int(t) for t in v_line.split()[1:]]
    model = [0] * len(lits)
    for lit in lits:
        model[abs(lit) - 1] = 1 if lit > 0 else -1
    return energy, model


def test_solve_rsp_worked_example(ex2_path, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = main(
        ["solve", "--alg", "rsp", "--input", ex2_path, "--y", "8", "--seed", "3", "--out", str(report_path)]
    )
    assert code == 0
    energy, model = _parse_output(capsys)
    inst = parse_dimacs(EX2_WCNF)
    assert energy == 1.0
    assert model[0] == 1 and model[1] == -1
    # printed energy is recomputed from the printed model
    assert inst.energy(model) == energy
    report = json.loads(report_path.read_text())
    assert report["final_energy"] == 1.0
    assert report["algorithm"] == "rsp"
    assert isinstance(report["degenerate_cover"], bool)
    assert report["cover"][:2] == [1, -1]


def test_solve_walksat_trivial(tmp_path, capsys):
    p = tmp_path / "triv.cnf"
    p.write_text(TRIVIAL_CNF)
    assert main(["solve", "--alg", "walksat", "--input", str(p), "--seed", "1"]) == 0
    energy, model = _parse_output(capsys)
    assert energy == 0.0
    assert parse_dimacs(TRIVIAL_CNF).energy(model) == 0.0


@pytest.mark.parametrize("alg", ["bp", "sp", "spy"])
def test_solve_other_algorithms_run(alg, tmp_path, capsys):
    p = tmp_path / "triv.cnf"
    p.write_text(TRIVIAL_CNF)
    assert main(["solve", "--alg", alg, "--input", str(p), "--y", "2", "--k", "1", "--seed", "2"]) == 0
    energy, model = _parse_output(capsys)
    assert parse_dimacs(TRIVIAL_CNF).energy(model) == energy == 0.0


def test_solve_spy_rejects_weighted(ex2_path):
    assert main(["solve", "--alg", "spy", "--input", ex2_path]) == 2


def test_solve_missing_file():
    assert main(["solve", "--alg", "rsp", "--input", "/nonexistent.cnf"]) == 2


def test_solve_malformed_dimacs(tmp_path):
    p = tmp_path / "bad.cnf"
    p.write_text("p cnf 2 1\n1 5 0\n")
    assert main(["solve", "--alg", "walksat", "--input", str(p)]) == 2


def test_generate_deterministic_and_counts(tmp_path):
    a, b = tmp_path / "a.cnf", tmp_path / "b.cnf"
    args = ["generate", "--n", "100", "--alpha", "4.7", "--kclause", "3", "--wmax", "1", "--seed", "9"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    inst = parse_dimacs(a.read_text())
    assert inst.num_clauses == 470 and inst.num_vars == 100
    assert not inst.is_weighted


def test_generate_weighted(tmp_path):
    out = tmp_path / "w.wcnf"
    assert main(["generate", "--n", "50", "--alpha", "3.0", "--wmax", "5", "--seed", "2", "--out", str(out)]) == 0
    inst = parse_dimacs(out.read_text())
    weights = {cl.weight for cl in inst.clauses}
    assert weights <= {1.0, 2.0, 3.0, 4.0, 5.0}
    assert max(weights) > 1.0


def test_generate_invalid_params():
    assert main(["generate", "--n", "2", "--alpha", "1.0", "--kclause", "3"]) == 2


def test_sweep_single_point_matches_solve(ex2_path, tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep-y", "--alg", "rsp", "--input", ex2_path, "--ys", "8:8:1", "--seed", "3", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "y,violations,converged,fixed"
    assert len(lines) == 2
    assert lines[1].split(",")[1] == "1"
    code = main(["solve", "--alg", "rsp", "--input", ex2_path, "--y", "8", "--seed", "3"])
    assert code == 0
    energy, _ = _parse_output(capsys)
    assert energy == 1.0


def test_sweep_row_count(tmp_path):
    p = tmp_path / "triv.cnf"
    p.write_text(TRIVIAL_CNF)
    out = tmp_path / "sweep.csv"
    assert main(["sweep-y", "--input", str(p), "--ys", "1:3:1", "--seed", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_oracle_energy_mode(ex2_path, capsys):
    assert main(["oracle", "--input", ex2_path, "--mode", "energy"]) == 0
    out = capsys.readouterr().out
    assert "min=1," in out and "argmin count=2" in out


def test_oracle_covers_mode(ex2_path, capsys):
    assert main(["oracle", "--input", ex2_path, "--mode", "covers"]) == 0
    out = capsys.readouterr().out
    assert "instance optimum m=1" in out
    # under the literal constrainedness rule no cover attains the optimum
    assert "min-cover v=1: none" in out
    assert "v=0: 1 cover(s)" in out


def test_oracle_marginals_mode(ex2_path, capsys):
    assert main(["oracle", "--input", ex2_path, "--mode", "marginals", "--y", "30", "--rho", "1.0"]) == 0
    out = capsys.readouterr().out
    assert "x1:" in out and "P(*)=1" in out


def test_oracle_capacity_guard(tmp_path):
    big = Instance.from_lits(15, [(1.0, [1, 2, 3])])
    p = tmp_path / "big.cnf"
    p.write_text(write_dimacs(big))
    assert main(["oracle", "--input", str(p), "--mode", "covers"]) == 3
