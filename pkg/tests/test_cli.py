import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from infolandscape.cli import main
from infolandscape.domain import binary_domain
from infolandscape.io import dump_report
from infolandscape.optimize import minimize_information

FIX = Path(__file__).parent / "fixtures"
LN2 = math.log(2)


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def test_analyze_xor(capsys):
    rep = run_json(capsys, "analyze", FIX / "xor.csv")
    assert rep["schema"] == 1 and rep["command"] == "analyze"
    assert rep["broja"]["ci"]["nats"] == pytest.approx(LN2, abs=1e-6)
    assert rep["broja"]["ci"]["bits"] == pytest.approx(1.0, abs=1e-6)
    for k in ("si", "ui_x", "ui_y"):
        assert abs(rep["broja"][k]["nats"]) < 1e-6


def test_analyze_shuffle_fixture(capsys):
    rep = run_json(capsys, "analyze", FIX / "shuffle.csv")
    assert abs(rep["series"]["i_ci"]["nats"]) < 1e-12
    assert abs(rep["series"]["i_cd"]["nats"]) < 1e-12


def test_malformed_input_reports_line(capsys):
    code, _, err = run(capsys, "analyze", FIX / "malformed.csv")
    assert code == 2
    assert "line 4" in err


def test_missing_file_is_invalid_input(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", tmp_path / "absent.csv")
    assert code == 3 and "cannot read" in err


def test_unnormalised_table_needs_flag(capsys, tmp_path):
    path = tmp_path / "half.csv"
    path.write_text("s,x,y,p\n0,0,0,0.2\n0,1,1,0.2\n1,0,1,0.2\n1,1,0,0.2\n")
    code, _, _ = run(capsys, "analyze", path)
    assert code == 3
    rep = run_json(capsys, "analyze", path, "--renormalize")
    assert rep["broja"]["ci"]["nats"] == pytest.approx(LN2, abs=1e-6)


def _landscape(capsys, *extra):
    code, out, err = run(capsys, "landscape", "--sx", FIX / "indep_sx.csv", "--sy", FIX / "indep_sy.csv", *extra)
    assert code == 0, err
    rows = list(csv.DictReader(io.StringIO(out)))
    return np.array([[float(r["t1"]), float(r["t2"]), float(r["I_nats"])] for r in rows])


def test_landscape_is_zero_on_the_diagonal(capsys):
    grid = _landscape(capsys, "--grid", 101)
    assert grid.shape == (101 * 101, 3)
    vals = grid[:, 2].reshape(101, 101)
    # with X and Y independent of S the box is proportional to P(s), so the diagonal is t_s = lam P(s)
    np.testing.assert_allclose(grid[::102, 0] / 0.3, grid[::102, 1] / 0.7, atol=1e-12)
    assert np.max(np.abs(np.diag(vals))) < 1e-12
    assert np.min(vals[~np.eye(101, dtype=bool)]) > 0


def test_landscape_grid_not_below_optimum(capsys, tmp_path):
    (tmp_path / "sx.csv").write_text("s,x,p\n0,0,0.1\n0,1,0.4\n1,0,0.35\n1,1,0.15\n")
    (tmp_path / "sy.csv").write_text("s,y,p\n0,0,0.3\n0,1,0.2\n1,0,0.1\n1,1,0.4\n")
    code, out, err = run(capsys, "landscape", "--sx", tmp_path / "sx.csv", "--sy", tmp_path / "sy.csv", "--grid", 41)
    assert code == 0, err
    vals = [float(r["I_nats"]) for r in csv.DictReader(io.StringIO(out))]
    d = binary_domain([0.5, 0.5], [0.2, 0.7], [0.6, 0.2])
    i_star = minimize_information(d).i_star
    assert min(vals) >= i_star - 1e-6


def test_landscape_rejects_tiny_grid(capsys):
    code, _, _ = run(capsys, "landscape", "--sx", FIX / "indep_sx.csv", "--sy", FIX / "indep_sy.csv", "--grid", 1)
    assert code == 2


def test_discriminant(capsys):
    rep = run_json(capsys, "discriminant", 0.25, 0.25, "--q", 0.4, 0.45)
    assert rep["slope_intervals"] == ["[-inf, -3)", "(-0.333333333333, 1)", "(1, inf]"]
    assert rep["area"] == pytest.approx(5 / 6)
    assert rep["interior_minimum"] is True
    assert rep["slope"] == pytest.approx(4 / 3)
    half = run_json(capsys, "discriminant", 0.5, 0.5)
    assert half["slope_intervals"] == ["[-inf, -1)", "(-1, 1)", "(1, inf]"]


def test_discriminant_vertex_is_invalid(capsys):
    code, _, _ = run(capsys, "discriminant", 0, 1)
    assert code == 3


def test_volume_is_reproducible(capsys):
    a = run(capsys, "volume", "--seed", 1, "--samples", 1000)
    b = run(capsys, "volume", "--seed", 1, "--samples", 1000)
    assert a == b and a[0] == 0
    rep = json.loads(a[1])
    assert rep["seed"] == 1
    assert rep["exact"] == pytest.approx(2 / 3, abs=1e-6)


def test_volume_requires_seed(capsys):
    code, _, _ = run(capsys, "volume", "--samples", 1000)
    assert code == 2


def test_volume_monte_carlo_estimate(capsys):
    rep = run_json(capsys, "volume", "--seed", 1, "--samples", 10**6)
    assert abs(rep["monte_carlo"]["estimate"] - 2 / 3) <= 0.005


def test_volume_simplex_measure(capsys):
    rep = run_json(capsys, "volume", "--seed", 2, "--samples", 20000, "--measure", "simplex")
    assert rep["exact"] is None
    assert 0 < rep["monte_carlo"]["estimate"] < 1


def test_gaussian_commands(capsys):
    rep = run_json(capsys, "gaussian", 1, 1, 1, 0.5, 0.5)
    assert rep["location"] == "boundary"
    assert rep["interval"] == pytest.approx([-0.5, 1.0])
    rep = run_json(capsys, "gaussian", 1, 1, 1, 0, 0)
    assert rep["location"] == "interior" and rep["t_star"] == 0.0
    assert rep["i_star"]["nats"] == pytest.approx(0.0, abs=1e-15)


def test_gaussian_invalid_covariance(capsys):
    code, _, _ = run(capsys, "gaussian", 1, 1, 0.25, 0, 1)
    assert code == 3
    code, _, _ = run(capsys, "gaussian", 1, 1, 1, 2, 0)
    assert code == 3


def test_json_report_round_trips(capsys):
    for argv in (["analyze", FIX / "shuffle.csv"], ["gaussian", 1, 1, 1, 0.5, 0.5], ["discriminant", 0.2, 0.3]):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        assert dump_report(json.loads(out)) == out


def test_csv_report(capsys):
    code, out, _ = run(capsys, "gaussian", 1, 1, 1, 0.5, 0.5, "--format", "csv")
    assert code == 0
    rows = dict(csv.reader(io.StringIO(out)))
    assert rows["key"] == "value"
    assert json.loads(rows["location"]) == "boundary"
    assert float(rows["i_star.nats"]) == pytest.approx(math.log(4 / 3))
