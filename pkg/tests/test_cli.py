import csv
import json
import subprocess
import sys

import pytest

from fatigue_boost.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "1000", "--fatigue-fraction", "0.3", "--seed", "7", "--out", str(d / "d.csv")]) == 0
    assert main(["train", "--data", str(d / "d.csv"), "--out", str(d / "m.json"),
                 "--trees", "50", "--depth", "3", "--eval-split", "--seed", "7"]) == 0
    return d


def test_synth_rows(workdir):
    with open(workdir / "d.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1001
    assert sum(int(r[1]) for r in rows[1:]) == 300
    manifest = json.loads((workdir / "d.csv.manifest.json").read_text())
    assert manifest["command"] == "synth"
    assert manifest["config"]["n"] == 1000


def test_synth_usage_and_domain_errors(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--n", "10"])
    assert exc.value.code == 2
    capsys.readouterr()
    code, _, err = run(capsys, "synth", "--fatigue-fraction", "1.5", "--out", str(tmp_path / "x.csv"))
    assert code == 1
    assert "InvalidSpec" in err and len(err.strip().splitlines()) == 1


def test_train_reports_test_metrics(capsys, tmp_path, workdir):
    code, out, _ = run(capsys, "train", "--data", str(workdir / "d.csv"), "--out", str(tmp_path / "m.json"),
                       "--trees", "50", "--depth", "3", "--eval-split", "--seed", "7")
    assert code == 0
    rep = json.loads(out)
    assert rep["n_train"] == 700 and rep["n_test"] == 300
    assert rep["test"]["accuracy"] >= 0.9
    assert (tmp_path / "m.json").read_bytes() == (workdir / "m.json").read_bytes()


def test_single_class_data(capsys, tmp_path):
    main(["synth", "--n", "20", "--fatigue-fraction", "0", "--out", str(tmp_path / "neg.csv")])
    capsys.readouterr()
    code, _, err = run(capsys, "train", "--data", str(tmp_path / "neg.csv"), "--out", str(tmp_path / "m.json"),
                       "--trees", "2")
    assert code == 1 and "DegenerateLabels" in err


def test_evaluate_from_counts(capsys):
    code, out, _ = run(capsys, "evaluate", "--from-counts", "1626,198,304,1850")
    rep = json.loads(out)
    assert code == 0
    assert rep["accuracy"] == pytest.approx(0.8738, abs=1e-4)
    assert rep["sensitivity"] == pytest.approx(0.8914, abs=1e-4)
    assert rep["counts"] == {"tp": 1626, "fn": 198, "fp": 304, "tn": 1850}


def test_evaluate_bad_counts_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["evaluate", "--from-counts", "1,2,3"])
    assert exc.value.code == 2


def test_evaluate_on_data(capsys, workdir):
    code, out, _ = run(capsys, "evaluate", "--model", str(workdir / "m.json"), "--data", str(workdir / "d.csv"))
    rep = json.loads(out)
    assert code == 0
    assert set(rep["counts"]) == {"tp", "fn", "fp", "tn"}
    assert rep["n"] == 1000
    assert 0 <= rep["accuracy"] <= 1 and 0 <= rep["sensitivity"] <= 1


def test_features_then_evaluate_arity(capsys, tmp_path, workdir):
    code, _, _ = run(capsys, "features", "--data", str(workdir / "d.csv"), "--out", str(tmp_path / "f.csv"))
    assert code == 0
    with open(tmp_path / "f.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1000 and list(rows[0]) == ["frame_id", "label", "ear_left", "ear_right", "ear", "mar"]
    # a feature table lacking one of the model's inputs
    with open(tmp_path / "f_ear.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_id", "label", "ear"])
        w.writerows([[r["frame_id"], r["label"], r["ear"]] for r in rows])
    code, _, err = run(capsys, "evaluate", "--model", str(workdir / "m.json"), "--data", str(tmp_path / "f_ear.csv"))
    assert code == 1 and "ArityMismatch" in err


def test_features_closed_eye(capsys, tmp_path):
    main(["synth", "--n", "5", "--noise", "0", "--out", str(tmp_path / "s.jsonl")])
    lines = (tmp_path / "s.jsonl").read_text().splitlines()
    obj = json.loads(lines[0])
    for i in (37, 38, 40, 41, 43, 44, 46, 47):
        obj["points"][i][1] = obj["points"][36 if i < 42 else 42][1]
    lines[0] = json.dumps(obj)
    (tmp_path / "s.jsonl").write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    code, out, _ = run(capsys, "features", "--data", str(tmp_path / "s.jsonl"))
    row = next(csv.DictReader(out.splitlines()))
    assert code == 0 and float(row["ear"]) == 0.0


def test_predict_row_count(capsys, workdir):
    code, out, _ = run(capsys, "predict", "--model", str(workdir / "m.json"), "--data", str(workdir / "d.csv"))
    rows = list(csv.DictReader(out.splitlines()))
    assert code == 0 and len(rows) == 1000
    assert all(0 < float(r["probability"]) < 1 for r in rows)


def test_stream_verdict(capsys, tmp_path, workdir):
    main(["synth", "--n", "30", "--fatigue-fraction", "1", "--seed", "2", "--out", str(tmp_path / "tired.csv")])
    capsys.readouterr()
    code, out, _ = run(capsys, "stream", "--model", str(workdir / "m.json"), "--data", str(tmp_path / "tired.csv"))
    rep = json.loads(out)
    assert code == 0
    assert rep["mean_prob"] >= 0.5 and rep["verdict"] == "fatigue"
    assert rep["scored"] == 30 and rep["skipped"] == 0 and len(rep["frames"]) == 30


def test_events(capsys, workdir):
    code, out, _ = run(capsys, "events", "--data", str(workdir / "d.csv"), "--ear-threshold", "0.2")
    rep = json.loads(out)
    assert code == 0 and rep["frames"] == 1000 and rep["blink_count"] > 0


def test_replay_reproduces_model(capsys, tmp_path, workdir):
    before = (workdir / "m.json").read_bytes()
    code, _, _ = run(capsys, "replay", str(workdir / "m.json.manifest.json"))
    assert code == 0
    assert (workdir / "m.json").read_bytes() == before


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fatigue_boost.cli", "evaluate", "--from-counts", "1626,198,304,1850"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n"] == 3978
    proc = subprocess.run([sys.executable, "-m", "fatigue_boost.cli", "train"], capture_output=True, text=True)
    assert proc.returncode == 2
