import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from perturblab.cli import run
from perturblab.core import write_matrix_csv
from perturblab.generators import gen_separable

DATA = Path(__file__).parent / "data"


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_reproduce_thm1(capsys):
    code, rep = call(capsys, "reproduce", "thm1", "--kind", "mult", "--alpha", 2, "--r", 1, "--fn", "kmeans")
    assert code == 1 and rep["delta"] == "2/3"
    assert rep["out_before"] == [0, 1, 1] and rep["out_after"] == [0, 0, 1]


def test_reproduce_thm1_r3(capsys):
    code, rep = call(capsys, "reproduce", "thm1", "--kind", "add", "--epsilon", 1, "--r", 3, "--fn", "average")
    assert code == 1 and rep["delta"] == "1/2" and rep["discrepancy_with_claim"] is True


def test_cluster(capsys, tmp_path):
    code, rep = call(capsys, "cluster", "--objective", "kmeans", "--k", 2, "--input", DATA / "pairs4.csv",
                     "--out", tmp_path)
    assert code == 0 and rep["blocks"] == [[0, 1], [2, 3]]
    assert (tmp_path / "labels.json").exists() and (tmp_path / "report.json").exists()


def test_cluster_linkage_trace(capsys, tmp_path):
    code, rep = call(capsys, "cluster", "--linkage", "single", "--k", 1, "--input", DATA / "pairs4.csv",
                     "--trace", tmp_path / "t.jsonl")
    assert code == 0 and len(rep["merges"]) == 3
    assert len((tmp_path / "t.jsonl").read_text().strip().splitlines()) == 3


def test_certify_separable(capsys, tmp_path):
    d, _ = gen_separable(30, 3, 4.0, "mult", seed=0)
    write_matrix_csv(d, tmp_path / "sep.csv")
    code, rep = call(capsys, "certify", "--fn", "single", "--kind", "mult", "--size", 2, "--delta", 0.1,
                     "--input", tmp_path / "sep.csv", "--k", 3)
    assert code == 0 and rep["status"] == "certified"


def test_certify_refuted_writes_witness(capsys, tmp_path):
    p = tmp_path / "tri.csv"
    p.write_text("0,2,3\n2,0,1\n3,1,0\n")
    code, rep = call(capsys, "certify", "--fn", "kmeans", "--kind", "mult", "--alpha", 2, "--delta", "2/3",
                     "--input", p, "--k", 2, "--out", tmp_path / "o")
    assert code == 1 and rep["status"] == "refuted" and rep["witness_delta"] == "2/3"
    assert (tmp_path / "o" / "witness.csv").exists()


def test_perturb_and_attack(capsys, tmp_path):
    code, rep = call(capsys, "perturb", "--input", DATA / "pairs4.csv", "--kind", "add", "--epsilon", 0.5, "--seed", 3)
    assert code == 0 and rep["validity"]["valid"]
    code, rep = call(capsys, "attack", "--input", DATA / "pairs4.csv", "--fn", "minsum", "--k", 2,
                     "--kind", "mult", "--alpha", 1.1, "--budget", 200, "--seed", 1)
    assert code == 0 and rep["delta"] == "0"


def test_clusterability_and_separability(capsys):
    code, rep = call(capsys, "clusterability", "--input", DATA / "pairs4.csv", "--objective", "kmeans",
                     "--k", 2, "--delta", "1/2", "--c", 2)
    assert code == 0 and rep["c0_max"] == 65.0
    code, rep = call(capsys, "separability", "--input", DATA / "pairs4.csv", "--k", 2)
    assert code == 0 and rep["found"]


def test_axioms_and_gen(capsys, tmp_path):
    code, rep = call(capsys, "axioms", "--fn", "all", "--sweep", 50, "--seed", 0)
    assert code == 0
    assert all(v["three_body"]["violated"] == 0 for v in rep["results"].values())
    code, rep = call(capsys, "gen", "three-body", "--kind", "mult", "--alpha", 2, "--out", tmp_path)
    assert code == 0 and (tmp_path / "d2.csv").exists()
    code, rep = call(capsys, "gen", "euclidean", "--kind", "add", "--epsilon", 0.25, "--dim", 3,
                     "--placement", "as_printed")
    assert code == 1 and not rep["valid"]
    code, rep = call(capsys, "gen", "cloud")
    assert code == 0 and rep["result"]["delta_cloud"] == "4/7"


def test_reproduce_zero_delta(capsys):
    code, rep = call(capsys, "reproduce", "zero-delta", "--fn", "complete", "--kind", "mult", "--alpha", 1.3)
    assert code == 1 and rep["all_steps_valid"]


def test_enumerate(capsys):
    code, rep = call(capsys, "enumerate", "--n", 4, "--k", 2, "--count")
    assert code == 0 and rep["count"] == 7
    code, rep = call(capsys, "enumerate", "--n", 3, "--k", 2)
    assert rep["partitions"] == [[0, 0, 1], [0, 1, 0], [0, 1, 1]]


@pytest.mark.parametrize("argv", [
    ["bogus"],
    ["cluster", "--k", "2"],
    ["cluster", "--k", "2", "--input", "missing.csv", "--objective", "kmeans"],
    ["cluster", "--k", "2", "--input", str(DATA / "pairs4.csv")],
    ["perturb", "--input", str(DATA / "pairs4.csv"), "--kind", "add", "--epsilon", "0.5"],
    ["certify", "--fn", "kmeans", "--k", "2", "--kind", "mult", "--delta", "x/y", "--input", str(DATA / "pairs4.csv"), "--alpha", "2"],
    ["axioms", "--fn", "kmeans", "--sweep", "5"],
    ["cluster", "--k", "2", "--objective", "kmeans", "--input", str(DATA / "pairs4.csv"), "--unknown-flag"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_malformed_csv(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("0,1\n2,0\n")
    assert run(["cluster", "--k", "1", "--objective", "kmeans", "--input", str(p)]) == 2
    p.write_text("0,x\nx,0\n")
    assert run(["cluster", "--k", "1", "--objective", "kmeans", "--input", str(p)]) == 2


def test_cap(capsys, tmp_path):
    d, _ = gen_separable(9, 2, 2.0, seed=0)
    write_matrix_csv(d, tmp_path / "d.csv")
    assert run(["cluster", "--k", "2", "--objective", "kmeans", "--input", str(tmp_path / "d.csv"), "--max-n", "8"]) == 2


def test_config(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"objective": "kmeans", "k": 2, "input": str(DATA / "pairs4.csv")}))
    code, rep = call(capsys, "cluster", "--config", cfg)
    assert code == 0 and rep["labels"] == [0, 0, 1, 1]
    cfg.write_text(json.dumps({"nope": 1}))
    assert run(["cluster", "--config", str(cfg)]) == 2


def test_byte_identical(tmp_path):
    argv = ["attack", "--input", str(DATA / "pairs4.csv"), "--fn", "kmeans", "--k", "2", "--kind", "add",
            "--epsilon", "3", "--budget", "300", "--seed", "9"]
    outs = []
    for i in range(2):
        assert run(argv + ["--out", str(tmp_path / "r")]) in (0, 1)
        outs.append((tmp_path / "r" / "report.json").read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["command"][0] == "perturblab" and rep["command"][1:5] == argv[:4]


def test_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "perturblab", "enumerate", "--n", "5", "--k", "3", "--count"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["count"] == 25


def test_thm1_fast(capsys):
    for fn in ("kmeans", "kmedoids", "minsum", "single", "average", "complete"):
        t0 = time.perf_counter()
        run(["reproduce", "thm1", "--kind", "add", "--epsilon", "0.5", "--fn", fn])
        assert time.perf_counter() - t0 < 1.0
    capsys.readouterr()
