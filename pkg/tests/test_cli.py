import json

import pytest

from edgeops.cli import main
from edgeops.graph.io import read_graph
from edgeops.report import render_report
from edgeops.stats.analyze import SCHEMA

MB = 2**20


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_usage_errors(capsys):
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "gen")[0] == 1
    code, _, err = run(capsys, "gen", "RESNET", "--bogus")
    assert code == 1 and "usage" in err
    assert run(capsys, "gen", "ALEXNET")[0] == 1


def test_runtime_errors(capsys, tmp_path):
    code, _, err = run(capsys, "transform", "quantize", tmp_path / "missing.cg.json")
    assert code == 2 and err.startswith("edgeops:")
    code, _, _ = run(capsys, "simulate", "--strategy", "TELEPORT@M", "--subject", "RESNET")
    assert code == 2


def test_seed_env_fallback(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("EDGEAI_SEED", "nope")
    assert run(capsys, "gen", "FCN", "--out-dir", tmp_path)[0] == 1
    monkeypatch.setenv("EDGEAI_SEED", "5")
    a = run(capsys, "simulate", "--strategy", "IDENTITY@E", "--subject", "FCN", "--samples", 3)
    b = run(capsys, "simulate", "--strategy", "IDENTITY@E", "--subject", "FCN", "--samples", 3,
            "--seed", 5)
    assert a[0] == 0 and a[1] == b[1] and json.loads(a[1])["seed"] == 5


def test_gen_and_partition(capsys, tmp_path):
    code, out, _ = run(capsys, "gen", "RESNET", "--seed", 42, "--out-dir", tmp_path / "new")
    assert code == 0
    path = tmp_path / "new" / "resnet.cg.json"
    assert out.strip() == str(path) and path.exists()
    code, out, _ = run(capsys, "transform", "partition", path, "--out-dir", tmp_path)
    assert code == 0
    written = out.split()
    assert [p.rsplit("/", 1)[1] for p in written] == ["resnet.head.cg.json", "resnet.tail.cg.json",
                                                      "resnet.partition.report.json"]
    report = json.loads((tmp_path / "resnet.partition.report.json").read_text())
    assert report["delta"] <= 8 * MB
    head = read_graph(tmp_path / "resnet.head.cg.json")
    assert head.output_names == tuple(report["cut_tensors"])


@pytest.mark.parametrize("op", ["quantize", "early-exit", "qe", "qep"])
def test_transform_operators(capsys, tmp_path, op):
    run(capsys, "gen", "DUC", "--out-dir", tmp_path)
    code, out, _ = run(capsys, "transform", op, tmp_path / "duc.cg.json", "--out-dir", tmp_path)
    assert code == 0
    for p in out.split():
        assert (tmp_path / p.rsplit("/", 1)[1]).exists()


def test_simulate_to_file(capsys, tmp_path):
    out_path = tmp_path / "sim.json"
    code, out, _ = run(capsys, "simulate", "--strategy", "PARTITION@ME", "--subject", "RESNET",
                       "--samples", 4, "--seed", 3, "--out", out_path)
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert len(doc["runs"]) == 4 and doc["strategy"] == "PARTITION@ME"


RQ1 = {"subjects": ["RESNET", "RESNEXT", "FCN", "DUC"],
       "strategies": ["IDENTITY@M", "IDENTITY@E", "IDENTITY@C"],
       "n_samples": 30, "n_reps": 2, "warmup_runs": 5}


def pipeline(capsys, root, doc=RQ1, seed=1, jobs=1):
    root.mkdir(parents=True, exist_ok=True)
    cfg = root / "exp.json"
    cfg.write_text(json.dumps(doc))
    logs = root / "logs"
    code, out, _ = run(capsys, "experiment", "run", cfg, "--seed", seed, "--out-dir", logs,
                       "--jobs", jobs)
    assert code == 0
    assert len(out.splitlines()) == len(doc["subjects"]) * len(doc["strategies"])
    assert run(capsys, "analyze", logs, "--out", root / "stats.json")[0] == 0
    assert run(capsys, "report", root / "stats.json", "--out", root / "report.md")[0] == 0
    assert run(capsys, "report", root / "stats.json", "--format", "csv",
               "--out", root / "report.csv")[0] == 0
    return root


def test_report_effect_matrix_identity(capsys, tmp_path):
    root = pipeline(capsys, tmp_path)
    stats = json.loads((root / "stats.json").read_text())
    assert stats["schema"] == SCHEMA
    md = (root / "report.md").read_text()
    for subj in RQ1["subjects"]:
        cmp = next(c for c in stats["comparisons"] if c["id"] == f"{subj}/IDENTITY")
        assert cmp["labels"] == ["M", "E", "C"]
        assert cmp["magnitude"][0][1] == "LARGE"
        assert f"## EFFECT_MATRIX: {subj}/IDENTITY effect sizes" in md
    block = md.split("## EFFECT_MATRIX: RESNET/IDENTITY effect sizes")[1]
    m_row = next(line for line in block.splitlines() if line.startswith("| M |"))
    assert m_row.split("|")[3].strip() == "+L"
    csv_text = (root / "report.csv").read_bytes()
    assert b"\r\n" in csv_text and csv_text.startswith(b"MEDIANS,")


def test_pipeline_byte_reproducible(capsys, tmp_path):
    doc = dict(RQ1, subjects=["RESNET", "DUC"], n_samples=10)
    a = pipeline(capsys, tmp_path / "a", doc)
    b = pipeline(capsys, tmp_path / "b", doc, jobs=2)
    for name in ("stats.json", "report.md", "report.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    for log in (a / "logs").iterdir():
        assert log.read_bytes() == (b / "logs" / log.name).read_bytes()


def test_report_empty_stats():
    md = render_report({})
    assert "## MEDIANS" in md and "| subject |" in md
    tables = md.split("## ")[1:]
    for t in tables:
        rows = [line for line in t.splitlines() if line.startswith("|")]
        assert len(rows) == 2          # header and rule only


def test_report_identical_groups_blank():
    from edgeops.stats.analyze import compare_groups
    cmp = compare_groups("X/IDENTITY", "X", "tier", ["M", "E", "C"], [[1.0, 2.0, 3.0]] * 3)
    md = render_report({"schema": SCHEMA, "alpha": 0.05, "cells": {}, "comparisons": [cmp]})
    block = md.split("## EFFECT_MATRIX")[1].split("## ")[0]
    for line in block.splitlines():
        if line.startswith("| M |") or line.startswith("| E |") or line.startswith("| C |"):
            assert set(c.strip() for c in line.split("|")[2:-1]) == {""}


def test_report_rejects_bad_schema(capsys, tmp_path):
    p = tmp_path / "stats.json"
    p.write_text(json.dumps({"schema": "other/9"}))
    assert run(capsys, "report", p)[0] == 2


def test_analyze_without_logs(capsys, tmp_path):
    assert run(capsys, "analyze", tmp_path, "--out", tmp_path / "s.json")[0] == 1

