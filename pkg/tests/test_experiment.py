import numpy as np
import pytest

from edgeops.errors import EdgeOpsError
from edgeops.experiment import (Backend, ExperimentConfig, RunLog, configs_from_doc,
                                log_filename, median_latency, parse_log_filename, read_log,
                                run_cells, run_experiment, speedup, summary, write_log)
from edgeops.sim import build_variants

VARIANTS = {s: build_variants(s) for s in ("RESNET", "DUC")}


def run(subject, strategy, **kw):
    return run_experiment(ExperimentConfig(subject, strategy, **kw), variants=VARIANTS[subject])


def test_default_protocol_counts():
    log = run("RESNET", "IDENTITY@E")
    assert len(log.records) == 600
    assert len(log.measured) == 500
    warm = [r for r in log.records if r.warmup]
    assert len(warm) == 100 and all(r.rep_index == -1 for r in warm)
    assert [r.run_index for r in log.records] == list(range(600))
    assert len(log.rep_medians()) == 5
    s = summary(log)
    assert (s["n_measured"], s["n_warmup"]) == (500, 100)


def test_small_protocol():
    log = run("RESNET", "IDENTITY@C", n_samples=3, n_reps=1, warmup_runs=0)
    assert len(log.measured) == 3
    assert [r.sample_id for r in log.measured] == [0, 1, 2]


def test_warmup_cycles_samples():
    log = run("RESNET", "IDENTITY@C", n_samples=3, n_reps=2, warmup_runs=5)
    assert [r.sample_id for r in log.records if r.warmup] == [0, 1, 2, 0, 1]
    assert [r.rep_index for r in log.measured] == [0, 0, 0, 1, 1, 1]


def test_sim_timestamps_are_virtual_clock():
    log = run("DUC", "IDENTITY@M", n_samples=4, n_reps=1, warmup_runs=2)
    clock = np.cumsum([r.breakdown.total_s for r in log.records])
    assert [r.timestamp for r in log.records] == pytest.approx(clock.tolist())


def test_deterministic():
    a = run("RESNET", "PARTITION@ME", n_samples=20, n_reps=2, warmup_runs=5)
    b = run("RESNET", "PARTITION@ME", n_samples=20, n_reps=2, warmup_runs=5)
    assert a.to_csv() == b.to_csv()
    c = run("RESNET", "PARTITION@ME", n_samples=20, n_reps=2, warmup_runs=5, seed=2)
    assert c.to_csv() != a.to_csv()


def test_median_examples():
    assert median_latency([1, 2, 3]) == 2
    assert median_latency([1, 2, 3, 4]) == 2.5
    with pytest.raises(EdgeOpsError):
        median_latency([])


def test_speedup_examples():
    assert speedup([1.0, 2.0], [1.0, 2.0]) == 1.0
    assert speedup([2.0], [6.0]) == 3.0
    with pytest.raises(EdgeOpsError):
        speedup([0.0], [1.0])


def test_csv_round_trip(tmp_path):
    log = run("DUC", "QUANTIZED@E", n_samples=5, n_reps=2, warmup_runs=3)
    path = write_log(log, tmp_path)
    assert path.name == "DUC.QUANTIZED.E.csv" == log_filename(log.config)
    back = read_log(path)
    assert back.to_csv() == log.to_csv()
    assert back.totals == log.totals
    with pytest.raises(EdgeOpsError):
        RunLog.from_csv("a,b\n1,2\n")


def test_filename_parse():
    assert parse_log_filename("/x/RESNET.IDENTITY.E.csv") == ("RESNET", "IDENTITY", "E")
    assert parse_log_filename("FCN.PARTITION.MC.csv") == ("FCN", "PARTITION", "MC")
    for bad in ("RESNET.E.csv", "RESNET.IDENTITY.E.txt"):
        with pytest.raises(EdgeOpsError):
            parse_log_filename(bad)


def test_configs_from_doc():
    cfgs = configs_from_doc({"subjects": ["resnet", "duc"], "strategies": ["IDENTITY@M",
                             "PARTITION@EC"], "n_samples": 7}, seed=9)
    assert [c.cell_name for c in cfgs] == ["RESNET.IDENTITY.M", "RESNET.PARTITION.EC",
                                           "DUC.IDENTITY.M", "DUC.PARTITION.EC"]
    assert all(c.seed == 9 and c.n_samples == 7 for c in cfgs)
    one = configs_from_doc({"subject": "FCN", "strategy": "QE@C", "backend": "sim"})
    assert len(one) == 1 and one[0].backend == Backend.SIM


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig("RESNET", "IDENTITY@M", n_samples=0)
    with pytest.raises(ValueError):
        ExperimentConfig("RESNET", "IDENTITY@M", warmup_runs=-1)


def test_run_cells_pool_matches_serial(tmp_path):
    cfgs = configs_from_doc({"subjects": ["RESNET"], "strategies": ["IDENTITY@M", "IDENTITY@E"],
                             "n_samples": 10, "n_reps": 1, "warmup_runs": 0})
    serial = run_cells(cfgs)
    pooled = run_cells(cfgs, tmp_path, jobs=2)
    assert [a.to_csv() for a in serial] == [b.to_csv() for b in pooled]
    assert sorted(p.name for p in tmp_path.iterdir()) == ["RESNET.IDENTITY.E.csv",
                                                         "RESNET.IDENTITY.M.csv"]


def test_empty_log_summary_raises():
    with pytest.raises(EdgeOpsError):
        summary(RunLog(None, []))
