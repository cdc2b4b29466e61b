"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import EdgeOpsError
from .report import EFFECT_NOTE

TRANSFORMS = ("early-exit", "partition", "quantize", "qe", "qep")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def default_seed() -> int:
    try:
        return int(os.environ.get("EDGEAI_SEED", "0"))
    except ValueError:
        raise UsageError("EDGEAI_SEED must be an integer") from None


def _seed(args) -> int:
    return default_seed() if args.seed is None else args.seed


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _stem(path: str) -> str:
    name = Path(path).name
    for suffix in (".cg.json", ".json"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return Path(path).stem


# -- subcommands

def cmd_gen(args) -> int:
    from .graph.io import write_graph
    from .graph.subjects import gen_subject, get_profile

    try:
        profile = get_profile(args.profile)
    except KeyError as e:
        raise UsageError(str(e.args[0])) from None
    g = gen_subject(profile, _seed(args))
    path = write_graph(g, Path(args.out_dir) / f"{g.name}.cg.json")
    print(path)
    return 0


def cmd_transform(args) -> int:
    from .graph.io import read_graph, write_graph
    from .operators import (apply_partition, compose_qe, compose_qep, early_exit, make_calibration,
                            partition_auto, quantize_static)

    g = read_graph(args.graph)
    out = Path(args.out_dir)
    stem = _stem(args.graph)
    calib = make_calibration(seed=_seed(args))
    written = []
    if args.operator == "quantize":
        q, rep = quantize_static(g, calib)
        written.append(write_graph(q, out / f"{stem}.quantized.cg.json"))
        report = rep.to_dict()
    elif args.operator == "early-exit":
        e, rep = early_exit(g)
        written.append(write_graph(e, out / f"{stem}.early_exit.cg.json"))
        report = rep.to_dict()
    elif args.operator == "qe":
        qe, rep = compose_qe(g, calib)
        written.append(write_graph(qe, out / f"{stem}.qe.cg.json"))
        report = rep.to_dict()
    elif args.operator == "partition":
        plan = partition_auto(g)
        head, tail = apply_partition(g, plan)
        written.append(write_graph(head, out / f"{stem}.head.cg.json"))
        written.append(write_graph(tail, out / f"{stem}.tail.cg.json"))
        report = plan.to_dict()
    else:
        head, tail, plan = compose_qep(g, calib)
        written.append(write_graph(head, out / f"{stem}.qep.head.cg.json"))
        written.append(write_graph(tail, out / f"{stem}.qep.tail.cg.json"))
        report = plan.to_dict()
    rpath = _write(out / f"{stem}.{args.operator.replace('-', '_')}.report.json",
                   json.dumps(report, indent=1, sort_keys=True) + "\n")
    for p in written + [rpath]:
        print(p)
    return 0


def cmd_simulate(args) -> int:
    import numpy as np

    from .graph.subjects import get_profile
    from .sim import DeploymentStrategy, build_variants, generate_samples, load_env, models_for
    from .sim.model import run_rng, simulate_run

    strategy = DeploymentStrategy.parse(args.strategy)
    profile = get_profile(args.subject)
    env = load_env(args.env)
    seed = _seed(args)
    models = models_for(strategy, build_variants(profile.name, args.graph_seed))
    samples = generate_samples(profile, args.samples, seed)
    runs = []
    for s in samples:
        b = simulate_run(strategy, models, env, s, profile, run_rng(seed, s.id))
        runs.append({"sample_id": s.id, "payload_mbits": s.payload_mbits, "total_s": b.total_s,
                     "compute_s": b.compute_s, "transmission_s": b.transmission_s,
                     "preprocess_s": b.preprocess_s, "postprocess_s": b.postprocess_s})
    doc = {"subject": profile.name, "strategy": str(strategy), "seed": seed,
           "median_s": float(np.median([r["total_s"] for r in runs])), "runs": runs}
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    if args.out:
        print(_write(Path(args.out), text))
    else:
        sys.stdout.write(text)
    return 0


def cmd_experiment_run(args) -> int:
    from .experiment import configs_from_doc, load_experiment_doc, run_cells, summary

    doc = load_experiment_doc(args.config)
    seed = args.seed if args.seed is not None else doc.get("seed", default_seed())
    cfgs = configs_from_doc(doc, seed)
    logs = run_cells(cfgs, args.out_dir, jobs=args.jobs)
    failed = 0
    for log in logs:
        s = summary(log) if log.measured else {"cell": log.config.cell_name, "median_s": None}
        print(f"{s['cell']}\tmedian_s={s['median_s']}")
        if log.error:
            print(f"{log.config.cell_name}: {log.error}", file=sys.stderr)
            failed += 1
    return 2 if failed else 0


def cmd_harness_serve(args) -> int:
    from .harness.daemon import TierDaemonConfig, serve_tier

    return serve_tier(TierDaemonConfig.from_json(args.config))


def cmd_harness_drive(args) -> int:
    from .experiment import Backend, ExperimentConfig, median_latency, run_experiment, write_log
    from .graph.subjects import get_profile
    from .harness.client import predicted_total
    from .sim import build_variants, generate_samples, load_env, models_for

    cfg = ExperimentConfig(args.subject, args.strategy, seed=_seed(args), n_samples=args.samples,
                           n_reps=args.reps, warmup_runs=args.warmup, backend=Backend.HARNESS,
                           env_path=args.env, scale=args.scale)
    env = load_env(args.env)
    variants = build_variants(cfg.subject, cfg.graph_seed)
    log = run_experiment(cfg, env, variants)
    path = write_log(log, args.out_dir)
    profile = get_profile(cfg.subject)
    models = models_for(cfg.strategy, variants)
    pred = [predicted_total(cfg.strategy, models, env, s, profile, cfg.scale)
            for s in generate_samples(profile, cfg.n_samples, cfg.seed)]
    print(path)
    if log.measured:
        print(f"measured_median_s={median_latency(log):.6f} predicted_median_s={median_latency(pred):.6f}")
    if log.error:
        print(log.error, file=sys.stderr)
        return 2
    return 0


def cmd_analyze(args) -> int:
    from .stats.analyze import analyze, dumps_stats
    from .stats.fixture import load_accuracy_fixture

    paths = []
    for p in args.logs:
        pp = Path(p)
        paths.extend(sorted(pp.glob("*.csv")) if pp.is_dir() else [pp])
    if not paths:
        raise UsageError("no log files given")
    stats = analyze(paths, load_accuracy_fixture(args.fixture))
    print(_write(Path(args.out), dumps_stats(stats)))
    return 0


def cmd_report(args) -> int:
    from .report import render_report

    stats = json.loads(Path(args.stats).read_text())
    text = render_report(stats, args.format)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="edgeops", description="Deployment operators, latency simulation and analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seed_arg(sp):
        sp.add_argument("--seed", type=int, default=None,
                        help="random seed (falls back to $EDGEAI_SEED, then 0)")

    g = sub.add_parser("gen", help="generate a synthetic subject graph")
    g.add_argument("profile", help="RESNET, RESNEXT, FCN or DUC")
    seed_arg(g)
    g.add_argument("--out-dir", default="./out")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("transform", help="apply an operator to a graph file")
    t.add_argument("operator", choices=TRANSFORMS)
    t.add_argument("graph", help="input .cg.json")
    seed_arg(t)
    t.add_argument("--out-dir", default="./out")
    t.set_defaults(func=cmd_transform)

    s = sub.add_parser("simulate", help="simulate one strategy over seeded samples")
    s.add_argument("--strategy", required=True, help="OPERATOR@TIER, e.g. PARTITION@ME")
    s.add_argument("--subject", required=True)
    s.add_argument("--env", default=None, help="environment JSON (default: shipped calibration)")
    seed_arg(s)
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--graph-seed", type=int, default=0)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="run measurement experiments")
    esub = e.add_subparsers(dest="action", required=True, parser_class=_Parser)
    er = esub.add_parser("run", help="run every cell of an experiment document")
    er.add_argument("config")
    seed_arg(er)
    er.add_argument("--out-dir", default="./out")
    er.add_argument("--jobs", type=int, default=1, help="worker processes across cells")
    er.set_defaults(func=cmd_experiment_run)

    h = sub.add_parser("harness", help="live TCP testbed")
    hsub = h.add_subparsers(dest="action", required=True, parser_class=_Parser)
    hs = hsub.add_parser("serve", help="run one tier daemon")
    hs.add_argument("--config", required=True)
    hs.set_defaults(func=cmd_harness_serve)
    hd = hsub.add_parser("drive", help="start daemons and run one strategy through them")
    hd.add_argument("--subject", required=True)
    hd.add_argument("--strategy", required=True)
    hd.add_argument("--env", default=None)
    seed_arg(hd)
    hd.add_argument("--samples", type=int, default=10)
    hd.add_argument("--reps", type=int, default=1)
    hd.add_argument("--warmup", type=int, default=0)
    hd.add_argument("--scale", type=float, default=100.0)
    hd.add_argument("--out-dir", default="./out")
    hd.set_defaults(func=cmd_harness_drive)

    a = sub.add_parser("analyze", help="statistics over experiment logs")
    a.add_argument("logs", nargs="+", help="log CSVs or directories of them")
    a.add_argument("--out", default="./out/stats.json")
    a.add_argument("--fixture", default=None, help="accuracy fixture (default: shipped table)")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("report", help="render stats.json as tables",
                       epilog=EFFECT_NOTE)
    r.add_argument("stats")
    r.add_argument("--format", choices=("md", "csv"), default="md")
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (EdgeOpsError, OSError, ValueError, KeyError) as e:
        print(f"edgeops: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
