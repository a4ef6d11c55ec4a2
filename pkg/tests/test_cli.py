import csv
import json
import subprocess
import sys
import tempfile

import jsonschema
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gxesym import cli
from gxesym.cli import load_csv, main, output_schema, write_csv
from gxesym.core import CaseControlData
from gxesym.errors import DataError
from gxesym.simgen import gen_case_control, get_scenario

VALIDATOR = jsonschema.Draft202012Validator(output_schema())


def _validate(path):
    doc = json.loads(path.read_text())
    VALIDATOR.validate(doc)
    return doc


@pytest.fixture(scope="module")
def sample_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "data.csv"
    write_csv(gen_case_control(get_scenario("base"), 150, 150, seed=1), path)
    return path


def test_schema_is_valid_draft():
    jsonschema.Draft202012Validator.check_schema(output_schema())


# ---------------------------------------------------------------------------
# CSV


def test_load_small_file(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("d,g1,x1\n1,0,1\n0,1,0\n1,2,0\n0,1,1\n")
    data = load_csv(p)
    assert (data.n0, data.n1, data.q, data.p_x) == (2, 2, 1, 1)


def test_load_reports_row_and_column(tmp_path):
    rows = ["d,g1,x1"] + [f"{i % 2},{i % 3},{(i // 2) % 2}" for i in range(6)] + ["2,1,1", "0,1,0"]
    p = tmp_path / "bad.csv"
    p.write_text("\n".join(rows) + "\n")
    with pytest.raises(DataError) as e:
        load_csv(p)
    assert e.value.row == 7 and e.value.column == "d"
    assert "row 7" in str(e.value) and "column d" in str(e.value)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("", "empty"),
        ("g1,d,x1\n0,1,1\n", "start with column 'd'"),
        ("d,g1\n0,1\n1,0\n", "header must be"),
        ("d,g1,x1\n0,1,1\n1,abc,0\n", "row 2, column g1"),
        ("d,g1,x1\n0,1,1\n1,inf,0\n", "non-finite"),
        ("d,g1,x1\n0,1,1\n1,1\n", "2 fields"),
        ("d,g1,x1\n0,1,1\n1,2,1\n", "x1 is constant"),
    ],
)
def test_load_errors(tmp_path, text, fragment):
    p = tmp_path / "e.csv"
    p.write_text(text)
    with pytest.raises(DataError, match=fragment):
        load_csv(p)


@given(hnp.arrays(np.float64, st.tuples(st.integers(4, 20), st.just(3)),
                  elements=st.floats(-1e300, 1e300, allow_nan=False, allow_subnormal=True)))
def test_write_load_round_trip_bitwise(vals):
    n = vals.shape[0]
    d = np.arange(n) % 2
    vals = vals.copy()
    vals[:2] = [[0.0, 1.0, 2.0], [0.5, -1.0, 3.0]]  # guarantee non-constant columns
    data = CaseControlData(d, vals[:, :2], vals[:, 2:])
    with tempfile.TemporaryDirectory() as tmp:
        path = f"{tmp}/rt.csv"
        write_csv(data, path)
        back = load_csv(path)
    assert back.g.tobytes() == data.g.tobytes() and back.x.tobytes() == data.x.tobytes()
    assert np.array_equal(back.d, data.d)


# ---------------------------------------------------------------------------
# commands


def test_fit_byte_identical_and_valid(sample_csv, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"fit{k}.json"
        assert main(["fit", "--input", str(sample_csv), "--methods", "symmetric", "--rare",
                     "--B", "20", "--seed", "7", "--workers", str(k + 1), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    doc = _validate(tmp_path / "fit0.json")
    sym = doc["methods"]["symmetric"]
    assert doc["prevalence"] == {"mode": "rare"}
    assert list(sym["omega_hat"]) == doc["param_names"] and doc["param_names"][0] == "kappa"
    assert "beta_x1_g5" in sym["se"] and len(sym["cov"]) == 12 * 12
    assert sym["B"] == 20 and sym["seed"] == 7 and sym["cov_source"] == "bootstrap"


def test_fit_all_methods_schema(sample_csv, tmp_path):
    out = tmp_path / "all.json"
    assert main(["fit", "--input", str(sample_csv), "--pi1", "0.03", "--B", "10", "--ci", "percentile",
                 "--out", str(out)]) == 0
    doc = _validate(out)
    assert set(doc["methods"]) == {"logistic", "spmle_x", "spmle_g", "composite", "symmetric"}
    assert doc["methods"]["symmetric"]["ci_kind"] == "percentile"
    assert doc["methods"]["spmle_x"]["ci_kind"] == "wald"


def test_fit_bad_prevalence_exit_2(sample_csv, capsys):
    assert main(["fit", "--input", str(sample_csv), "--pi1", "1.5"]) == 2
    assert "(0, 1)" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["fit", "--input", "x.csv"],                                  # no prevalence
    ["fit", "--input", "x.csv", "--pi1", "0.1", "--rare"],         # both
    ["fit", "--input", "x.csv", "--rare", "--methods", "magic"],
    ["fit", "--input", "missing.csv", "--rare"],
    ["simulate", "--scenario", "base"],                            # no seed
    ["simulate", "--scenario", "nope", "--seed", "1"],
    ["replicate", "--scenario", "base", "--seed", "1", "--R", "0"],
])
def test_config_errors_exit_2(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "x.csv").write_text("d,g1,x1\n0,0,1\n1,1,0\n0,2,0\n1,1,1\n")
    assert main(argv) == 2


def test_data_error_exit_3(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("d,g1,x1\n0,0,1\n1,1,1\n0,2,1\n")
    assert main(["fit", "--input", str(p), "--rare"]) == 3


def test_convergence_error_exit_4(tmp_path):
    p = tmp_path / "sep.csv"
    p.write_text("d,g1,x1\n0,0,0\n0,1,0\n0,2,0\n1,0,1\n1,1,1\n1,2,1\n")
    assert main(["fit", "--input", str(p), "--rare", "--methods", "logistic"]) == 4


def test_internal_error_exit_5(sample_csv, monkeypatch):
    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "diagnose", boom)
    assert main(["diagnose", "--input", str(sample_csv)]) == 5


def test_simulate_then_diagnose(tmp_path):
    data_path = tmp_path / "sim.csv"
    assert main(["simulate", "--scenario", "base", "--n0", "80", "--n1", "60", "--seed", "3",
                 "--out", str(data_path)]) == 0
    data = load_csv(data_path)
    assert (data.n0, data.n1) == (80, 60)
    direct = gen_case_control(get_scenario("base"), 80, 60, seed=3)
    assert data.g.tobytes() == direct.g.tobytes()
    out = tmp_path / "screen.json"
    assert main(["diagnose", "--input", str(data_path), "--out", str(out)]) == 0
    doc = _validate(out)
    assert doc["n_controls"] == 80 and len(doc["tests"]) == 5


def test_simulate_from_config(tmp_path):
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps({"preset": "base", "name": "half", "target_pi1": 0.5, "alpha0": 0.0}))
    out = tmp_path / "s.csv"
    assert main(["simulate", "--config", str(cfg), "--n0", "20", "--n1", "20", "--seed", "1", "--out", str(out)]) == 0
    assert load_csv(out).n == 40


def test_replicate_outputs_and_worker_independence(tmp_path):
    base = ["replicate", "--scenario", "base", "--methods", "spmle_x,symmetric", "--pi1", "0.03",
            "--R", "3", "--n0", "120", "--n1", "120", "--B", "6", "--seed", "42"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    est = tmp_path / "est.csv"
    assert main(base + ["--workers", "1", "--out", str(a), "--estimates-csv", str(est)]) == 0
    assert main(base + ["--workers", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    doc = _validate(a)
    assert doc["replications_completed"] == 3 and set(doc["methods"]) == {"logistic", "spmle_x", "symmetric"}
    assert all(v == 1.0 for v in doc["methods"]["logistic"]["mse_efficiency"].values())
    rows = list(csv.reader(est.open()))
    assert rows[0] == ["replication", "method", "parameter", "estimate", "se"]
    assert len(rows) == 1 + 3 * 3 * 12


def test_console_entry_point(sample_csv, tmp_path):
    out = tmp_path / "cli.json"
    res = subprocess.run([sys.executable, "-m", "gxesym", "fit", "--input", str(sample_csv), "--rare",
                          "--methods", "logistic,spmle_x", "--out", str(out)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    _validate(out)
