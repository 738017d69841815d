"""Command-line entry point.

Subcommands:
  ingest <edges> --out <dir>        clean + remap an edge list
  synth <spec> --out <file>         generate a synthetic edge list
  run <config>                      full experiment, emit reports
  ablate <config> --variant <v>     one ablation variant
  sweep-pool <config>               personalized runs over pool subsets
  gain-vs-n <config> --n 1,3,5,7,9  consensus gain vs committee size

Exits 0 on success; any package error prints one line to stderr and
exits 1. DESOCIAL_SEED overrides the config seed list; DESOCIAL_THREADS
sets the training thread pool.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys

from .backbones import parse_kind
from .config import apply_env_overrides, load_config
from .errors import DesocialError
from .graph_store import generate_synthetic, ingest_edge_list


def _cmd_ingest(args) -> int:
    result = ingest_edge_list(args.edges)
    os.makedirs(args.out, exist_ok=True)
    edges_path = os.path.join(args.out, "edges.csv")
    with open(edges_path, "w", encoding="utf-8") as fh:
        fh.write("# src dst timestamp (remapped ids)\n")
        for e in result.edges:
            fh.write(f"{e.src} {e.dst} {e.timestamp}\n")
    ids_path = os.path.join(args.out, "ids.csv")
    with open(ids_path, "w", encoding="utf-8") as fh:
        fh.write("token,id\n")
        for token, uid in sorted(result.id_map.items(), key=lambda kv: kv[1]):
            fh.write(f"{token},{uid}\n")
    print(f"ingested {len(result.edges)} edges "
          f"({result.self_loops_dropped} self-loops dropped), "
          f"{len(result.id_map)} users -> {edges_path}")
    return 0


def _cmd_synth(args) -> int:
    params = {}
    for part in args.spec.split(","):
        key, _, value = part.partition("=")
        params[key.strip()] = value.strip()
    users = int(params.get("users", 200))
    edges = int(params.get("edges", 6000))
    slices = int(params.get("T", 40))
    model = params.get("model", "preferential")
    seed = int(params.get("seed", 1))
    seq = generate_synthetic(users, edges, slices, model=model, seed=seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# synthetic {model} graph: {users} users, "
                 f"{edges} edges, seed {seed}\n")
        index = 0
        for snap in seq.snapshots:
            for p, q in snap.sorted_edges():
                fh.write(f"{p} {q} {index}\n")
                index += 1
    print(f"wrote {args.out}")
    return 0


def _load(args):
    cfg = apply_env_overrides(load_config(args.config))
    if args.output_dir:
        import dataclasses
        cfg = dataclasses.replace(cfg, output_dir=args.output_dir)
    return cfg


def _cmd_run(args) -> int:
    from .harness import emit_report, run_experiment
    cfg = _load(args)
    bundle = run_experiment(cfg)
    paths = emit_report(bundle, cfg.output_dir)
    mean = bundle.mean_overall("consensus")
    summary = " ".join(f"Acc@{k}={v:.4f}" for k, v in sorted(mean.items()))
    print(f"consensus {summary} ({len(cfg.seeds)} seeds) -> {paths['report']}")
    return 0


def _cmd_ablate(args) -> int:
    from .harness import emit_report, run_ablation
    cfg = _load(args)
    backbone = parse_kind(args.backbone) if args.backbone else None
    bundle = run_ablation(cfg, args.variant, backbone)
    out_dir = os.path.join(cfg.output_dir,
                           args.variant.replace("(", "_").rstrip(")"))
    paths = emit_report(bundle, out_dir)
    mean = bundle.mean_overall("consensus")
    summary = " ".join(f"Acc@{k}={v:.4f}" for k, v in sorted(mean.items()))
    print(f"{args.variant} {summary} -> {paths['report']}")
    return 0


def _cmd_sweep_pool(args) -> int:
    from .harness import emit_pool_sweep_csv, pool_sweep
    cfg = _load(args)
    if args.subsets:
        subsets = []
        for chunk in args.subsets.split(";"):
            subsets.append(tuple(parse_kind(p) for p in chunk.split(",")))
    else:
        subsets = []
        for size in range(1, len(cfg.pool) + 1):
            subsets.extend(itertools.combinations(cfg.pool, size))
    rows = pool_sweep(cfg, subsets)
    path = emit_pool_sweep_csv(rows, cfg.K_values, cfg.output_dir)
    print(f"swept {len(rows)} pool subsets -> {path}")
    return 0


def _cmd_gain_vs_n(args) -> int:
    from .harness import emit_gain_csv, gain_vs_n
    cfg = _load(args)
    n_values = [int(x) for x in args.n.split(",")]
    _, gains = gain_vs_n(cfg, n_values)
    path = emit_gain_csv(gains, cfg.output_dir)
    curve = " ".join(f"n={n}:{g:+.4f}" for n, g in sorted(gains.items()))
    print(f"gain vs committee size: {curve} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desocial",
        description="User-validated distributed social recommendation "
                    "simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean and remap an edge list")
    p.add_argument("edges")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic edge list")
    p.add_argument("spec", help="e.g. users=200,edges=6000,"
                                "model=preferential,seed=1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("run", help="run a full experiment")
    p.add_argument("config")
    p.add_argument("--output-dir")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("ablate", help="run one ablation variant")
    p.add_argument("config")
    p.add_argument("--variant", required=True,
                   help="single | no_personalized | random_select | "
                        "simple_select | no_consensus; kind as "
                        "variant(KIND) or --backbone")
    p.add_argument("--backbone")
    p.add_argument("--output-dir")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("sweep-pool", help="Acc@K over backbone-pool subsets")
    p.add_argument("config")
    p.add_argument("--subsets",
                   help="semicolon-separated comma lists, e.g. "
                        "'SGC;SAGE;SGC,SAGE' (default: all subsets)")
    p.add_argument("--output-dir")
    p.set_defaults(func=_cmd_sweep_pool)

    p = sub.add_parser("gain-vs-n", help="consensus gain vs committee size")
    p.add_argument("config")
    p.add_argument("--n", default="1,3,5,7,9")
    p.add_argument("--output-dir")
    p.set_defaults(func=_cmd_gain_vs_n)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DesocialError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
