"""Command-line entry point: run, compare, validate, scenarios."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import shutil
import statistics
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import scenarios
from .config import RunConfig, from_dict, load_config, parse_seeds
from .engine import ConfigError, InvariantViolation, Metrics, compare, run
from .forwarding import Policy

log = logging.getLogger("pedfsim")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3
OUT_ENV = "PEDFSIM_OUT"


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _publish_dir(staging: Path, final: Path):
    if final.exists():
        shutil.rmtree(final)
    os.replace(staging, final)


def run_one(cfg_doc: dict, policy: str, seed: int, out_dir: str) -> dict:
    """Run a single (policy, seed) and write its directory. Returns the metrics dict.

    Takes plain data so it can be shipped to a worker process.
    """
    cfg = from_dict(cfg_doc)
    topo, params, workload, settings = cfg.resolve()
    result = run(topo, params, workload, Policy.parse(policy), cfg.horizon_s, seed, settings)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    final = out / f"{policy}-seed{seed}"
    staging = Path(tempfile.mkdtemp(dir=out, prefix=f".{final.name}."))
    try:
        (staging / "trace.csv").write_text(result.trace_csv())
        (staging / "metrics.json").write_text(result.metrics.to_json())
        effective = cfg.effective(topo, policies=[policy], seeds=[seed], out=str(out))
        (staging / "config.json").write_text(json.dumps(effective, indent=2) + "\n")
        _publish_dir(staging, final)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return result.metrics.to_dict()


def _metrics_from_dict(d: dict) -> Metrics:
    d = {k: v for k, v in d.items() if k != "schema_version"}
    return Metrics(**d)


def _resolve_config(args) -> RunConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        base = Path(args.config).parent
        if cfg.topology.path and not Path(cfg.topology.path).is_absolute():
            cfg = cfg.model_copy(update={"topology": cfg.topology.model_copy(
                update={"path": str(base / cfg.topology.path)})})
    else:
        cfg = RunConfig()
    doc = cfg.model_dump(mode="json")
    if getattr(args, "scenario", None):
        doc["topology"] = {"scenario": args.scenario, "seed": args.topology_seed}
    policies = getattr(args, "policies", None) or getattr(args, "policy", None)
    if policies:
        doc["policies"] = policies
    seeds = getattr(args, "seeds", None)
    if seeds is None:
        seeds = getattr(args, "seed", None)
    if seeds is not None:
        try:
            doc["seeds"] = parse_seeds(seeds)
        except ValueError as exc:
            raise ConfigError(f"seeds: {exc}") from None
    if getattr(args, "horizon", None) is not None:
        doc["horizon_s"] = args.horizon
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        doc["out"] = out
    cfg = from_dict(doc)
    cfg.resolve()
    return cfg


def _execute(cfg: RunConfig, jobs: int) -> dict:
    """Run every (policy, seed); returns {seed: [(policy, Metrics), ...]}."""
    doc = cfg.model_dump(mode="json")
    tasks = [(doc, p, s, cfg.out) for s in cfg.seeds for p in cfg.policies]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, *zip(*tasks)))
    else:
        results = [run_one(*t) for t in tasks]
    by_seed: dict = {}
    for (_, policy, seed, _), m in zip(tasks, results):
        by_seed.setdefault(seed, []).append((Policy.parse(policy), _metrics_from_dict(m)))
        log.info("%s seed %d: delivered %d/%d", policy, seed, m["delivered"], m["injected"])
    return by_seed


def _median(values):
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def write_comparison(cfg: RunConfig, by_seed: dict) -> Path:
    out = Path(cfg.out)
    rows = []
    for seed, runs in sorted(by_seed.items()):
        report = compare(runs)
        _write_atomic(out / f"compare-seed{seed}.json", json.dumps(report.to_dict(), indent=2) + "\n")
        rows.extend(report.csv_rows())
    buf_path = out / "comparison.csv"
    if rows:
        import io
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _write_atomic(buf_path, buf.getvalue())
    summary = {"schema_version": 1, "seeds": cfg.seeds, "policies": {}}
    for policy in cfg.policies:
        mine = [r for r in rows if r["policy"] == policy]
        summary["policies"][policy] = {
            f"median_{k}": _median(r[k] for r in mine)
            for k in rows[0] if k not in ("seed", "policy")
        }
    _write_atomic(out / "summary.json", json.dumps(summary, indent=2) + "\n")
    return buf_path


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    by_seed = _execute(cfg, args.jobs)
    if len(cfg.policies) > 1:
        write_comparison(cfg, by_seed)
    n = sum(len(v) for v in by_seed.values())
    print(f"{n} run(s) written to {cfg.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    by_seed = _execute(cfg, args.jobs)
    path = write_comparison(cfg, by_seed)
    n = sum(len(v) for v in by_seed.values())
    print(f"{n} runs, comparison in {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    base = Path(args.config).parent
    topo, *_ = cfg.resolve(base)
    print(json.dumps(cfg.effective(), indent=2))
    print(f"ok: {len(topo)} nodes, {len(topo.links)} links", file=sys.stderr)
    return EXIT_OK


def cmd_scenarios(args) -> int:
    for name, desc in scenarios.DESCRIPTIONS.items():
        print(f"{name:12s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pedfsim", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--scenario", help="built-in topology (see `pedfsim scenarios`)")
        src.add_argument("--config", help="run config JSON")
        p.add_argument("--topology-seed", type=int, default=0, help="seed for random-N scenarios")
        if multi:
            p.add_argument("--policies", help="comma list: pedf,best-path,greedy")
            p.add_argument("--seeds", help="e.g. 1..50 or 1,2,3")
        else:
            p.add_argument("--policy", help="pedf | best-path | greedy (comma list allowed)")
            p.add_argument("--seed", help="seed, range 1..50 or list")
        p.add_argument("--horizon", type=float, help="simulated seconds")
        p.add_argument("--out", help=f"output directory (else ${OUT_ENV}, else config)")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("run", help="simulate and write trace + metrics per (policy, seed)")
    common(p, multi=False)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", help="run several policies over seeds and compare them")
    common(p, multi=True)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("validate", help="check a config and print it with defaults filled")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    p = sub.add_parser("scenarios", help="list built-in topologies")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violated: {exc.name}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
