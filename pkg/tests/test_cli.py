import numpy as np
import pytest

from sfwg.cli import run
from sfwg.mesh import build_hexagon_mesh, write_mesh


def test_converge_auto(capsys):
    assert run(["converge", "--field", "sinsin", "--k", "1", "--j", "auto",
                "--levels", "2,4,8"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "# field=sinsin k=1 j=2"
    assert out[1] == "level,h,dofs,energy_err,energy_rate,l2_err,l2_rate,cg_iters,residual"
    assert len(out) == 5


def test_converge_markdown(tmp_path):
    path = tmp_path / "t.md"
    assert run(["converge", "--field", "bubble", "--k", "2", "--j", "3", "--levels", "2,4",
                "--format", "md", "--out", str(path)]) == 0
    assert "| 2 | 1/2 |" in path.read_text()


def test_converge_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert run(["converge", "--field", "bubble", "--k", "1", "--levels", "2,4,8",
                    "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


@pytest.mark.parametrize("argv", [
    ["converge", "--levels", "8,4"],
    ["converge", "--k", "0"],
    ["converge", "--k", "2", "--j", "1"],
    ["converge", "--field", "nope"],
    ["probe", "--mesh", "gen:tri:x"],
    ["probe", "--mesh", "gen:oct:3"],
    ["probe", "--mesh", "/does/not/exist.poly"],
    ["normequiv", "--mesh", "gen:tri:2", "--samples", "0"],
])
def test_config_errors(argv, capsys):
    assert run(argv) == 3
    err = capsys.readouterr().err
    assert err.startswith("sfwg: config error") and err.count("\n") == 1


@pytest.mark.parametrize("argv", [[], ["bogus"], ["converge", "--levels", "a,b"],
                                  ["probe", "--k", "1"]])
def test_usage_errors(argv):
    assert run(argv) == 2


def test_probe(capsys):
    assert run(["probe", "--mesh", "gen:tri:4", "--k", "1", "--j", "2"]) == 0
    assert "verdict=nonsingular" in capsys.readouterr().out
    assert run(["probe", "--mesh", "gen:quad:6", "--k", "1", "--j", "1"]) == 0
    out = capsys.readouterr().out
    assert "verdict=singular" in out and "counting_lower_bound=12" in out


def test_probe_size_limit(capsys):
    assert run(["probe", "--mesh", "gen:tri:64", "--k", "1", "--j", "2"]) == 4
    assert "numerical failure" in capsys.readouterr().err


def test_probe_mesh_file(tmp_path, capsys):
    path = tmp_path / "hex.poly"
    path.write_text(write_mesh(build_hexagon_mesh(3)))
    assert run(["probe", "--mesh", str(path), "--k", "1", "--j", "auto"]) == 0
    out = capsys.readouterr().out
    assert "j=4" in out and "verdict=nonsingular" in out


def test_normequiv(capsys):
    argv = ["normequiv", "--mesh", "gen:quad:3", "--k", "1", "--j", "2", "--samples", "10",
            "--seed", "4"]
    assert run(argv) == 0
    first = capsys.readouterr().out
    assert run(argv) == 0
    assert capsys.readouterr().out == first
    assert "exact_min=" in first


def test_solve_dump(tmp_path):
    path = tmp_path / "sol.csv"
    assert run(["solve", "--mesh", "gen:tri:4", "--field", "bubble", "--k", "1", "--j", "2",
                "--out", str(path)]) == 0
    lines = path.read_text().splitlines()
    assert lines[1] == "index,kind,owner,slot,value"
    rows = [r.split(",") for r in lines[2:]]
    assert rows[0][1] == "interior" and rows[-1][1] == "edge"
    vals = np.array([float(r[4]) for r in rows])
    assert np.all(np.isfinite(vals)) and np.abs(vals).max() < 0.1


def test_solve_nonconvergence(capsys):
    assert run(["solve", "--mesh", "gen:quad:6", "--k", "1", "--j", "1"]) == 4
