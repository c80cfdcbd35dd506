"""Desk-scale benchmark runs shared by the acceptance suite and ``scripts/``."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .decoder import cut_trace
from .graph import generate_dataset, generate_sbm
from .heatts import encode, init_encoder
from .latent import softmax
from .metrics import clustering_accuracy, nmi
from .pipeline import cluster_infer, edge_density, evaluate_density_baseline, evaluate_generation
from .train import TrainConfig, default_prior, latent_kl_per_dim, make_rng, train_generation

# two-block SBM used for the clustering property
SBM_BLOCKS = (20, 20)
SBM_P_IN = 0.9
SBM_P_OUT = 0.05

# Erdos-Renyi generation benchmark
ER_P = 0.3
ER_TRAIN = 20
ER_TEST = 20
TEST_SEED_OFFSET = 1000


@dataclass(frozen=True)
class ClusteringRun:
    seed: int
    acc: float
    nmi: float
    cut_initial: float
    cut_final: float
    cut_truth: float


def clustering_run(seed: int, iterations: int = 200, **overrides) -> ClusteringRun:
    """DGAE with K = 2 on a fresh two-block SBM; cut traces use ``softmax(mu0)``."""
    g = generate_sbm(list(SBM_BLOCKS), SBM_P_IN, SBM_P_OUT, seed=seed)
    cfg = TrainConfig(iterations=iterations, variational=False, n_clusters=2, seed=seed, **overrides)
    rng = make_rng(cfg.seed)
    params = init_encoder(g.n_nodes, cfg.n_clusters, cfg.hidden, cfg.s, cfg.order, seed=rng)
    cut0 = float(cut_trace(g, softmax(encode(g, params)[0])))
    state = train_generation([g], cfg, params=params)
    assign = cluster_infer(g, state.params, "dgae")
    truth = g.node_labels
    onehot = np.eye(2)[truth]
    return ClusteringRun(
        seed=seed,
        acc=clustering_accuracy(assign.hard_labels, truth),
        nmi=nmi(assign.hard_labels, truth),
        cut_initial=cut0,
        cut_final=float(cut_trace(g, assign.soft)),
        cut_truth=float(cut_trace(g, onehot)),
    )


def er_datasets(seed: int):
    train = generate_dataset("erdos_renyi", ER_TRAIN, seed=seed, p=ER_P)
    test = generate_dataset("erdos_renyi", ER_TEST, seed=TEST_SEED_OFFSET + seed, p=ER_P)
    return train, test


def generation_config(seed: int, **overrides) -> TrainConfig:
    # dot-product: one-minus-mse keeps every p above logistic(1 - 4/K)
    base = TrainConfig(variational=False, similarity="dot-product", seed=seed)
    return replace(base, **overrides)


@dataclass(frozen=True)
class GenerationRun:
    seed: int
    nll_heatts: float
    nll_gcn: float
    nll_baseline: float
    rmse_heatts: float
    rmse_gcn: float
    rmse_baseline: float


def generation_run(seed: int, **overrides) -> GenerationRun:
    """Heatts DGAE vs the order-1 (GCN filter) ablation vs the edge-density model."""
    train, test = er_datasets(seed)
    cfg = generation_config(seed, **overrides)
    heatts = train_generation(train, cfg)
    gcn_cfg = replace(cfg, order=1)
    gcn = train_generation(train, gcn_cfg)
    h = evaluate_generation(test, heatts.params, cfg.decoder)
    c = evaluate_generation(test, gcn.params, gcn_cfg.decoder)
    b = evaluate_density_baseline(test, edge_density(train))
    return GenerationRun(seed, h[0], c[0], b[0], h[1], c[1], b[1])


@dataclass(frozen=True)
class CollapseRun:
    seed: int
    inner_recon_steps: int
    active_fraction: float
    mean_kl: float
    kl_per_dim: np.ndarray


def collapse_run(seed: int, inner_recon_steps: int, threshold: float = 0.01, **overrides) -> CollapseRun:
    """DGVAE on the Erdos-Renyi benchmark; per-dimension KL over the training nodes."""
    train, _ = er_datasets(seed)
    cfg = generation_config(seed, variational=True, inner_recon_steps=inner_recon_steps, **overrides)
    state = train_generation(train, cfg)
    kl = latent_kl_per_dim(state.params, train, default_prior(cfg))
    return CollapseRun(seed, inner_recon_steps, float(np.mean(kl > threshold)), float(kl.sum()), kl)
