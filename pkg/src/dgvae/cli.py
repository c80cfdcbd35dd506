"""Command-line entry point: ``dgvae <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 numerical divergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import io as gio
from .decoder import DecoderConfig
from .errors import DivergenceError, ValidationError
from .graph import FAMILIES, generate_dataset, generate_sbm
from .latent import prior_moments
from .metrics import align_labels, clustering_accuracy, cut_metrics, macro_f1, mean_std, nmi
from .pipeline import (
    cluster_infer, edge_density, evaluate_density_baseline, evaluate_generation, sample_graph,
)
from .spectral import distance_table, dominance_s_range, filter_response_table, spectral_coefficients_curve
from .train import TrainConfig, train_generation, write_log

log = logging.getLogger("dgvae")


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_kv(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ValidationError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _parse_value(v.strip())
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_gen_synthetic(args):
    params = _parse_kv(args.param)
    if args.family == "sbm":
        blocks = params.pop("blocks", [20, 20])
        blocks = [int(b) for b in (blocks.split(",") if isinstance(blocks, str) else blocks)]
        rng = np.random.default_rng(args.seed)
        graphs = [generate_sbm(blocks, params.get("p_in", 0.9), params.get("p_out", 0.05), seed=rng)
                  for _ in range(args.count)]
    else:
        graphs = generate_dataset(args.family, args.count, seed=args.seed,
                                  n_min=args.n_min, n_max=args.n_max, **params)
    paths = gio.save_dataset(graphs, args.out_dir, prefix=args.family)
    print(f"wrote {len(paths)} graphs to {args.out_dir}")


def _load_config(args) -> dict:
    d = {}
    if args.config:
        d.update(json.loads(Path(args.config).read_text()))
    d.update(_parse_kv(args.set))
    if args.mode:
        d["variational"] = args.mode == "dgvae"
    return d


def _clustering_scores(g, params, mode):
    assign = cluster_infer(g, params, mode)
    pred, truth = assign.hard_labels, g.node_labels
    return clustering_accuracy(pred, truth), nmi(pred, truth), macro_f1(pred, truth)


def cmd_train(args):
    settings = _load_config(args)
    ds = gio.load_dataset(args.data)
    if args.task == "clustering" and "n_clusters" not in settings:
        # K defaults to the number of ground-truth classes
        if ds.graph.node_labels is not None:
            settings["n_clusters"] = int(len(np.unique(ds.graph.node_labels)))
    cfg = TrainConfig.from_dict(settings)
    n_seeds = args.seeds or (10 if args.task == "clustering" else 1)
    mode = "dgvae" if cfg.variational else "dgae"
    scores = []
    for k in range(n_seeds):
        run_cfg = replace(cfg, seed=cfg.seed + k)
        state = train_generation(ds.graphs, run_cfg)
        if k == 0:
            # the checkpoint and log always come from the base seed
            gio.save_checkpoint(state.params, args.out, extra={"config": asdict(cfg), "task": args.task})
            if args.log:
                write_log(state.history, args.log)
            last = state.history[-1]
            print(f"trained {cfg.iterations} iterations; final elbo {last['elbo']:.6g}, kl {last['kl']:.6g}")
        if args.task == "clustering" and ds.graph.node_labels is not None:
            scores.append(_clustering_scores(ds.graph, state.params, mode))
            print(f"seed {run_cfg.seed}: acc {scores[-1][0]:.4f} nmi {scores[-1][1]:.4f} f1 {scores[-1][2]:.4f}")
    if len(scores) > 1:
        for name, col in zip(("acc", "nmi", "f1"), np.array(scores).T):
            m, sd = mean_std(col)
            print(f"{name},{m:.4f} +- {sd:.4f}")


def _decoder_from_meta(meta, override=None):
    sim = override or meta.get("config", {}).get("similarity", "one-minus-mse")
    return DecoderConfig(sim)


def cmd_eval(args):
    params, meta = gio.load_checkpoint(args.checkpoint)
    ds = gio.load_dataset(args.data)
    rows = []
    if args.task == "generation":
        dec = _decoder_from_meta(meta, args.similarity)
        nll, rmse = evaluate_generation(ds.graphs, params, dec)
        rows += [("nll", nll), ("rmse", rmse)]
        if args.train_data:
            rho = edge_density(gio.load_dataset(args.train_data).graphs)
            b_nll, b_rmse = evaluate_density_baseline(ds.graphs, rho)
            rows += [("baseline_nll", b_nll), ("baseline_rmse", b_rmse)]
    else:
        g = ds.graph
        assign = cluster_infer(g, params, "dgvae" if meta.get("config", {}).get("variational") else "dgae")
        cut, ratio = cut_metrics(g, assign)
        rows += [("cut", cut), ("ratio_cut", ratio)]
        if g.node_labels is not None:
            truth = g.node_labels
            pred = assign.hard_labels
            rows += [("acc", clustering_accuracy(pred, truth)), ("nmi", nmi(pred, truth)),
                     ("f1", macro_f1(pred, truth))]
            if args.aligned_labels:
                aligned = align_labels(pred, truth)
                _write_csv(args.aligned_labels, ["node", "pred", "aligned", "truth"],
                           zip(range(len(pred)), pred, aligned, truth))
    if args.out:
        _write_csv(args.out, ["metric", "value"], rows)
    for k, v in rows:
        print(f"{k},{v:.6f}")


def cmd_sample(args):
    _, meta = gio.load_checkpoint(args.checkpoint)
    cfg = meta.get("config", {})
    k = args.k or cfg.get("n_clusters", 16)
    alpha = args.alpha if args.alpha is not None else cfg.get("alpha", 0.01)
    prior = prior_moments(alpha, k)
    dec = DecoderConfig(cfg.get("similarity", "one-minus-mse"))
    rng = np.random.default_rng(args.seed)
    graphs = [sample_graph(prior, args.n, args.m, dec, rng, bernoulli=args.bernoulli) for _ in range(args.count)]
    paths = gio.save_dataset(graphs, args.out_dir, prefix="sample")
    print(f"wrote {len(paths)} sampled graphs to {args.out_dir}")


def cmd_analyze_filters(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header, table = filter_response_table(args.s, args.points)
    _write_csv(out / "filters.csv", header, table.tolist())
    header, table = distance_table(args.s, args.points)
    _write_csv(out / "distances.csv", header, table.tolist())
    for depth in args.depth or []:
        for order in (1, 3):
            curve = spectral_coefficients_curve(depth, order, args.s, args.points)
            _write_csv(out / f"coefficients_order{order}_depth{depth}.csv", ["lambda", "coefficient"], curve.tolist())
    rng = dominance_s_range(np.linspace(0.0, 2.0, args.points))
    if rng is None:
        print("no s dominates GCN on this grid")
    else:
        print(f"s-range where Taylor(3) beats GCN: [{rng[0]:.4f}, {rng[1]:.4f}]")


def cmd_cluster(args):
    params, meta = gio.load_checkpoint(args.checkpoint)
    ds = gio.load_dataset(args.dataset, manifest=args.manifest)
    g = ds.graph
    assign = cluster_infer(g, params, args.mode, n_clusters=ds.num_classes if args.check_k else None)
    if args.out:
        _write_csv(args.out, ["node", "label"], enumerate(assign.hard_labels.tolist()))
    if g.node_labels is not None:
        truth = g.node_labels
        pred = assign.hard_labels
        print(f"acc,{clustering_accuracy(pred, truth):.6f}")
        print(f"nmi,{nmi(pred, truth):.6f}")
        print(f"f1,{macro_f1(pred, truth):.6f}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dgvae", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synthetic", help="generate a synthetic graph dataset")
    g.add_argument("--family", required=True, choices=FAMILIES + ("sbm",))
    g.add_argument("--param", action="append", help="family parameter key=value (repeatable)")
    g.add_argument("--count", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-min", type=int, default=10)
    g.add_argument("--n-max", type=int, default=20)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_gen_synthetic)

    t = sub.add_parser("train", help="train an encoder")
    t.add_argument("--task", choices=("generation", "clustering"), default="generation")
    t.add_argument("--data", required=True, help="graph file or directory of .graph files")
    t.add_argument("--config", help="flat JSON file of TrainConfig fields")
    t.add_argument("--set", action="append", help="config override key=value (repeatable)")
    t.add_argument("--mode", choices=("dgae", "dgvae"))
    t.add_argument("--out", required=True, help="checkpoint path")
    t.add_argument("--log", help="training log CSV path")
    t.add_argument("--seeds", type=int, help="consecutive seeds to train (default 10 for clustering, 1 otherwise)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--task", choices=("generation", "clustering"), default="generation")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--train-data", help="training set, for the edge-density baseline")
    e.add_argument("--similarity", choices=("one-minus-mse", "dot-product"))
    e.add_argument("--out", help="metrics CSV path")
    e.add_argument("--aligned-labels", help="write per-node aligned labels here")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sample", help="sample graphs from the prior")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--n", type=int, required=True, help="nodes per graph")
    s.add_argument("--m", type=int, required=True, help="edges per graph")
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--k", type=int)
    s.add_argument("--alpha", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--bernoulli", action="store_true", help="independent edge draws instead of top-m")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_sample)

    a = sub.add_parser("analyze-filters", help="filter responses and distances to the ideal low pass")
    a.add_argument("--s", type=float, default=1.0)
    a.add_argument("--points", type=int, default=201)
    a.add_argument("--depth", type=int, action="append", help="also write g(lambda)**depth curves (repeatable)")
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=cmd_analyze_filters)

    c = sub.add_parser("cluster", help="assign clusters with a trained encoder")
    c.add_argument("--dataset", required=True)
    c.add_argument("--checkpoint", required=True)
    c.add_argument("--manifest", help="JSON with expected nodes/edges/classes/features")
    c.add_argument("--mode", choices=("dgae", "dgvae"), default="dgae")
    c.add_argument("--check-k", action="store_true", help="require K to equal the class count")
    c.add_argument("--out", help="label CSV path")
    c.set_defaults(func=cmd_cluster)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
