import csv
import json
import subprocess
import sys

import pytest

from attdecode.cli import main


@pytest.fixture
def sim(tmp_path):
    prefix = tmp_path / "net"
    assert main(["simulate", "--n", "40", "--k", "3", "--mu", "0.2", "--seed", "1", "--out-prefix", str(prefix)]) == 0
    return tmp_path, prefix


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_writes_three_files(sim):
    _, prefix = sim
    truth = read_csv(f"{prefix}.truth.csv")
    assert len(truth) == 40 and set(truth[0]) == {"id", "label", "gamma_hat", "delta"}
    assert read_csv(f"{prefix}.edges.csv")
    assert len(read_csv(f"{prefix}.attrs.csv")) == 40


@pytest.mark.parametrize("method", ["knn", "gmm", "gmm-component"])
def test_density(sim, method):
    tmp, prefix = sim
    out = tmp / f"{method}.csv"
    assert main(["density", "--attrs", f"{prefix}.attrs.csv", "--method", method,
                 "--components", "1-4", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 40 and all(float(r["density"]) > 0 for r in rows)


@pytest.mark.parametrize("density", ["knn", "gmm", "degree", "local"])
def test_detect_json(sim, density):
    tmp, prefix = sim
    out = tmp / "part.json"
    assert main(["detect", "--edges", f"{prefix}.edges.csv", "--attrs", f"{prefix}.attrs.csv",
                 "--density", density, "--components", "1-4", "--out", str(out)]) == 0
    d = json.loads(out.read_text())
    assert d["k_hat"] == len(d["clusters"]) >= 1
    covered = sum(len(c["members"]) for c in d["clusters"]) + len(d["unassigned"])
    assert covered == 40


def test_detect_external_and_metrics(sim):
    tmp, prefix = sim
    truth = read_csv(f"{prefix}.truth.csv")
    dens = tmp / "d.csv"
    with open(dens, "w") as fh:
        fh.write("id,density\n" + "".join(f"{r['id']},{r['gamma_hat']}\n" for r in truth))
    part = tmp / "p.json"
    assert main(["detect", "--edges", f"{prefix}.edges.csv", "--density", "external",
                 "--density-file", str(dens), "--out", str(part)]) == 0
    d = json.loads(part.read_text())
    assert d["estimator"] == "external"
    pred = tmp / "pred.csv"
    labels = {v: c["label"] for c in d["clusters"] for v in c["members"]}
    with open(pred, "w") as fh:
        fh.write("id,label\n" + "".join(f"{r['id']},{labels.get(r['id'], 0)}\n" for r in truth))
    out = tmp / "m.json"
    assert main(["metrics", "--pred", str(pred), "--truth", f"{prefix}.truth.csv", "--out", str(out)]) == 0
    m = json.loads(out.read_text())
    assert set(m) == {"nmi", "ari", "k_pred", "k_truth"}
    assert 0 <= m["nmi"] <= 1 and m["k_truth"] == 3


def test_metrics_identical(tmp_path, capsys):
    p = tmp_path / "a.csv"
    p.write_text("id,label\na,1\nb,1\nc,2\n")
    assert main(["metrics", "--pred", str(p), "--truth", str(p)]) == 0
    assert json.loads(capsys.readouterr().out)["nmi"] == 1.0


def test_input_errors_exit_one(tmp_path, capsys):
    assert main(["detect", "--edges", str(tmp_path / "missing.csv")]) == 1
    bad = tmp_path / "e.csv"
    bad.write_text("source,target\na,a\n")
    assert main(["detect", "--edges", str(bad), "--density", "degree"]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["detect", "--edges", str(bad), "--density", "external"]) == 1


def test_env_seed(sim, monkeypatch):
    tmp, prefix = sim
    monkeypatch.setenv("ATTDECODE_SEED", "not-a-number")
    assert main(["density", "--attrs", f"{prefix}.attrs.csv"]) == 1
    monkeypatch.setenv("ATTDECODE_SEED", "7")
    a, b = tmp / "a.csv", tmp / "b.csv"
    main(["density", "--attrs", f"{prefix}.attrs.csv", "--method", "gmm", "--components", "2-3", "--out", str(a)])
    main(["density", "--attrs", f"{prefix}.attrs.csv", "--method", "gmm", "--components", "2-3",
          "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_experiment_and_summary(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text("grid:\n  n: [50]\n  K: [5]\n  mu: [0.0, 0.4]\nreplicates: 2\n"
                    "methods: [attdecode-true, decode-degree]\nseed: 1\n")
    out, summ = tmp_path / "r.csv", tmp_path / "s.csv"
    assert main(["experiment", "--spec", str(spec), "--out", str(out), "--summary", str(summ)]) == 0
    assert len(read_csv(out)) == 8
    assert len(read_csv(summ)) == 4


def test_experiment_needs_output(tmp_path):
    spec = tmp_path / "spec.yaml"
    spec.write_text("methods: [decode-degree]\n")
    assert main(["experiment", "--spec", str(spec)]) == 1


def test_bench_missing_fixture(tmp_path, capsys):
    assert main(["bench-lesmis", "--data-dir", str(tmp_path)]) == 1
    assert "missing" in capsys.readouterr().err


def test_console_script_help():
    r = subprocess.run([sys.executable, "-m", "attdecode.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "bench-lesmis" in r.stdout
