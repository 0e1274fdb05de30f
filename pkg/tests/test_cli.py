import json

import numpy as np
import pytest

from tsfuzzy.cli import dumps, main
from tsfuzzy.data import bundled
from tsfuzzy.inference import TSModel, TSRule
from tsfuzzy.membership import MembershipFunction as MF


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    out = tmp_path_factory.mktemp("fit")
    assert main(["fit", "--dataset", "sugeno-nonlinear", "--output", str(out), "--quiet"]) == 0
    return out


def save_model(path, model):
    path.write_text(dumps(model.to_json()))
    return str(path)


def test_fit_writes_model_and_report(fitted):
    report = json.loads((fitted / "report.json").read_text())
    assert report["accepted_uc_trace"]
    assert report["stages"][0]["stage"] == 1
    TSModel.from_json(json.loads((fitted / "model.json").read_text()))


def test_fit_output_is_byte_identical(fitted, tmp_path, capsys):
    code, _, _ = run(capsys, "fit", "--dataset", "sugeno-nonlinear", "--output", str(tmp_path), "--quiet")
    assert code == 0
    for name in ("model.json", "report.json"):
        assert (tmp_path / name).read_bytes() == (fitted / name).read_bytes()


def test_fit_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "fit", "--dataset", "sugeno-nonlinear", "--output", str(blocker / "out"))
    assert code == 2 and "output directory" in err


def test_fit_max_rules_one(tmp_path, capsys):
    code, _, _ = run(capsys, "fit", "--dataset", "sugeno-nonlinear", "--max-rules", "1",
                     "--output", str(tmp_path), "--quiet")
    assert code == 0
    assert len(json.loads((tmp_path / "report.json").read_text())["stages"]) == 1


def test_fit_then_evaluate_reproduces_metrics(fitted, tmp_path, capsys):
    out = tmp_path / "metrics.json"
    code, _, _ = run(capsys, "evaluate", "--model", str(fitted / "model.json"),
                     "--dataset", "sugeno-nonlinear", "--output", str(out))
    assert code == 0
    metrics = json.loads(out.read_text())["metrics"]
    assert metrics == json.loads((fitted / "report.json").read_text())["metrics"]


@pytest.mark.parametrize("model, dataset, e1, e2", [
    ("builtin:linear", "sugeno-nonlinear", 12.7, 11.1),
    ("builtin:gmdh", "sugeno-nonlinear-corrected", 4.7, 5.7),
])
def test_evaluate_builtin(model, dataset, e1, e2, tmp_path, capsys):
    out = tmp_path / "m.json"
    code, text, _ = run(capsys, "evaluate", "--model", model, "--dataset", dataset, "--output", str(out))
    assert code == 0 and "E_1(%)" in text
    m = json.loads(out.read_text())["metrics"]
    assert m["ident"]["E"] == pytest.approx(e1, abs=0.3)
    assert m["valid"]["E"] == pytest.approx(e2, abs=0.3)


def test_evaluate_dimension_mismatch(tmp_path, capsys):
    model = TSModel((TSRule((), np.zeros(4)),), 3)
    code, _, err = run(capsys, "evaluate", "--model", save_model(tmp_path / "m.json", model),
                       "--dataset", "sugeno-nonlinear")
    assert code == 2 and "dimension mismatch" in err


def test_unknown_dataset_and_bad_flags(capsys):
    assert run(capsys, "fit", "--dataset", "/no/such.csv")[0] == 2
    assert run(capsys, "fit", "--dataset", "sugeno-nonlinear", "--mode", "other")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2


def test_predict_training_csv_matches_model(fitted, tmp_path, capsys):
    csv_path = tmp_path / "table.csv"
    csv_path.write_text(bundled("sugeno-nonlinear").to_csv())
    code, text, _ = run(capsys, "predict", "--model", str(fitted / "model.json"),
                        "--dataset", str(csv_path))
    assert code == 0
    rows = text.strip().splitlines()[1:]
    got = np.array([float(r.split(",")[1]) for r in rows])
    model = TSModel.from_json(json.loads((fitted / "model.json").read_text()))
    np.testing.assert_array_equal(got, model.predict(bundled("sugeno-nonlinear").X)[0])


def test_predict_single_row(capsys):
    code, text, _ = run(capsys, "predict", "--model", "builtin:gmdh", "--input", "1,3,1,1")
    assert code == 0
    assert float(text.splitlines()[1].split(",")[1]) == pytest.approx(11.619, abs=1e-3)


def test_predict_out_of_support_sets_flag(tmp_path, capsys):
    rules = (TSRule(((0, MF.z(0, 1)),), [1.0, 0.0]), TSRule(((0, MF.s(0, 1)),), [3.0, 0.0]))
    path = save_model(tmp_path / "m.json", TSModel(rules, 1))
    code, text, _ = run(capsys, "predict", "--model", path, "--input", "0.4;7")
    assert code == 0
    flags = [int(r.split(",")[2]) for r in text.strip().splitlines()[1:]]
    assert flags == [0, 1]


def test_compare_single_rule_identical(fitted, capsys):
    code, text, _ = run(capsys, "compare", "--model", str(fitted / "model.json"),
                        "--dataset", "sugeno-nonlinear")
    assert code == 0 and "diverging=0" in text


def test_compare_detects_divergence(tmp_path, capsys):
    # both grades are 0.5 at x = 1, but the moving rates are 1/6 and 1/8
    rules = (TSRule(((0, MF.z(0, 2)),), [0.0, 0.0]),
             TSRule(((0, MF.trap(0.5, 1.5, 3.5, 4.5)),), [10.0, 0.0]))
    path = save_model(tmp_path / "m.json", TSModel(rules, 1))
    data = tmp_path / "d.csv"
    data.write_text("x,y\n1,0\n")
    report = tmp_path / "cmp.json"
    code, _, _ = run(capsys, "compare", "--model", path, "--dataset", str(data), "--output", str(report))
    assert code == 0
    row = json.loads(report.read_text())["rows"][0]
    assert row["matching"] == pytest.approx(5.0)
    assert row["moving"] == pytest.approx(1.25 / (1 / 6 + 1 / 8))


def test_compare_empty_dataset(tmp_path, capsys):
    rules = (TSRule(((0, MF.z(0, 2)),), [0.0, 0.0]),)
    path = save_model(tmp_path / "m.json", TSModel(rules, 1))
    data = tmp_path / "d.csv"
    data.write_text("x,y\n")
    report = tmp_path / "cmp.json"
    code, _, _ = run(capsys, "compare", "--model", path, "--dataset", str(data), "--output", str(report))
    assert code == 0
    assert json.loads(report.read_text())["rows"] == []


def test_dump_dataset_round_trip(tmp_path, capsys):
    out = tmp_path / "sec.csv"
    assert run(capsys, "dump-dataset", "--dataset", "security-situation", "--output", str(out))[0] == 0
    code, text, _ = run(capsys, "evaluate", "--model", "builtin:linear", "--dataset", str(out))
    assert code == 2  # three inputs, the builtin needs four
    assert out.read_text().splitlines()[1] == "1,2,7,13.792"


def test_time_series_fit_uses_lags(tmp_path, capsys):
    code, _, _ = run(capsys, "fit", "--dataset", "tianjin-precipitation", "--max-rules", "1",
                     "--output", str(tmp_path), "--quiet")
    assert code == 0
    model = json.loads((tmp_path / "model.json").read_text())
    assert model["m"] == 5 and model["normalization"] is not None
    code, text, _ = run(capsys, "evaluate", "--model", str(tmp_path / "model.json"),
                        "--dataset", "tianjin-precipitation")
    assert code == 0


def test_dump_z(tmp_path, capsys):
    z = tmp_path / "z.csv"
    code, _, _ = run(capsys, "fit", "--dataset", "sugeno-nonlinear", "--max-rules", "1",
                     "--output", str(tmp_path), "--dump-z", str(z), "--quiet")
    assert code == 0
    lines = z.read_text().splitlines()
    assert lines[0].startswith("row,") and len(lines) == 21
