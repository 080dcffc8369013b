import json
import os

import numpy as np
import pytest

import misstab as mt
from misstab.cli import main

DATA = os.path.join(os.path.dirname(__file__), "data")
T5 = os.path.join(DATA, "table5.json")
T8 = os.path.join(DATA, "table8.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fit_json(capsys):
    code, out, _ = run(capsys, "fit", "--input", T5, "--model", "Y1:Y3")
    assert code == 0
    doc = json.loads(out)
    assert doc["model"] == "Y1:Y3"
    assert doc["boundary"] is False
    np.testing.assert_allclose(doc["odds"]["Y1"], [91 / 1364, 4 / 92])
    assert doc["g2"] == pytest.approx(2.0949, abs=5e-4)
    full = np.asarray(doc["expected"]["obs"])
    np.testing.assert_allclose(
        full, [[[1191.00, 7.87], [8.00, 2.16]],
               [[158.00, 66.88], [7.00, 15.09]]], atol=0.02)


def test_fit_text_rounds_to_two_decimals(capsys):
    code, out, _ = run(capsys, "fit", "--input", T5, "--model", "Y1:Y3",
                       "--format", "text")
    assert code == 0
    assert "G2        2.09" in out
    assert "1191.00" in out


def test_fit_no_boundary_on_double_nmar(capsys):
    code, out, _ = run(capsys, "fit", "--input", T8, "--model",
                       "Y1:self,Y2:self")
    assert code == 0
    assert json.loads(out)["boundary"] is False


def test_fit_unknown_variable_errors(capsys):
    code, _, err = run(capsys, "fit", "--input", T5, "--model", "Z:self")
    assert code == 1
    assert "error:" in err


def test_fit_boundary_exit_code(tmp_path, capsys):
    variables = (mt.Variable("Y1", 2, True), mt.Variable("Y2", 2),
                 mt.Variable("Y3", 2))
    blocks = {(0,): np.array([[[100.0, 80.0], [60.0, 40.0]],
                              [[5.0, 5.0], [5.0, 5.0]]]),
              (1,): np.array([[1.0, 1.0], [1.0, 50.0]])}
    table = mt.IncompleteTable(variables, blocks)
    path = tmp_path / "boundary.json"
    path.write_text(table.to_json())
    code, out, _ = run(capsys, "fit", "--input", str(path), "--model",
                       "Y1:self")
    assert code == 2
    doc = json.loads(out)
    assert doc["boundary"] is True
    assert doc["boundary_detail"]["variable"] == "Y1"


def test_compare_best_models(capsys):
    code, out, _ = run(capsys, "compare", "--input", T5)
    assert code == 0
    assert json.loads(out)["best"] == "Y1:Y3"
    code, out, _ = run(capsys, "compare", "--input", T8)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["rows"]) == 16
    assert all(not row["boundary"] for row in doc["rows"])


def test_compare_rejects_table_without_missing(tmp_path, capsys):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({
        "variables": [{"name": "A", "levels": 2, "missing": False}],
        "blocks": [{"pattern": [], "counts": [1, 2]}]}))
    code, _, err = run(capsys, "compare", "--input", str(path))
    assert code == 1


def test_expected_sums_to_n_for_stationary_fit(capsys):
    code, out, _ = run(capsys, "expected", "--input", T5, "--model",
                       "Y1:Y3")
    assert code == 0
    doc = json.loads(out)
    total = sum(np.asarray(block).sum() for block in doc.values())
    assert total == pytest.approx(1551.0, abs=1e-6)


def test_subtable_round_trip(tmp_path, capsys):
    t4 = os.path.join(DATA, "table4.json")
    out_path = tmp_path / "sub.json"
    code, _, _ = run(capsys, "subtable", "--input", t4, "--keep", "Y1,Y2",
                     "--output", str(out_path))
    assert code == 0
    sub = mt.load_table(str(out_path))
    t8 = mt.load_table(T8)
    for pattern, counts in t8.blocks.items():
        np.testing.assert_array_equal(sub.blocks[pattern], counts)


@pytest.fixture
def sim_params(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(json.dumps({
        "variables": [{"name": "Y1", "levels": 2, "missing": True},
                      {"name": "Y2", "levels": 2, "missing": False}],
        "m": [[250, 250], [250, 250]],
        "odds": {"Y1": 0.1}}))
    return str(path)


def test_simulate_mcar_rate(tmp_path, capsys, sim_params):
    out_path = tmp_path / "sim.json"
    code, _, _ = run(capsys, "simulate", "--model", "Y1:const", "--params",
                     sim_params, "--n", "10000", "--seed", "7",
                     "--output", str(out_path))
    assert code == 0
    table = mt.load_table(str(out_path))
    rate = table.blocks[(1,)].sum() / table.full_block.sum()
    assert rate == pytest.approx(0.1, abs=0.02)


def test_simulate_deterministic_and_refittable(tmp_path, capsys,
                                               sim_params):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        code, _, _ = run(capsys, "simulate", "--model", "Y1:const",
                         "--params", sim_params, "--n", "5000", "--seed",
                         "11", "--output", str(path))
        assert code == 0
    assert a.read_text() == b.read_text()
    code, out, _ = run(capsys, "fit", "--input", str(a), "--model",
                       "Y1:const")
    assert code == 0
    assert json.loads(out)["odds"]["Y1"][0] == pytest.approx(0.1, abs=0.03)
