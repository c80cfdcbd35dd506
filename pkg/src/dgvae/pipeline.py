"""End-to-end tasks: clustering inference, graph sampling, generation evaluation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .decoder import DecoderConfig, edge_probability_matrix, similarity_matrix
from .errors import InvalidParams, InvalidTarget, KMismatch
from .graph import Graph, from_edges
from .heatts import EncoderParams, encode
from .latent import PriorMoments, softmax
from .metrics import ClusterAssignment, nll_rmse

MODES = ("dgae", "dgvae")


@dataclass
class Dataset:
    name: str
    graphs: list = field(default_factory=list)
    num_classes: Optional[int] = None

    @property
    def graph(self) -> Graph:
        if len(self.graphs) != 1:
            raise InvalidParams(f"dataset {self.name!r} holds {len(self.graphs)} graphs, not one")
        return self.graphs[0]


def cluster_infer(g: Graph, params: EncoderParams, mode: str = "dgae",
                  n_clusters: Optional[int] = None) -> ClusterAssignment:
    """Hard and soft memberships from the mean latent ``softmax(mu0)``.

    Both modes use the posterior mean at inference time; they differ only in
    how the encoder was trained.
    """
    if mode not in MODES:
        raise InvalidParams(f"mode must be one of {MODES}")
    if n_clusters is not None and n_clusters != params.n_clusters:
        raise KMismatch(f"encoder has K={params.n_clusters}, {n_clusters} clusters requested")
    mu0, _ = encode(g, params)
    return ClusterAssignment.from_soft(softmax(mu0))


def reconstruct_probs(g: Graph, params: EncoderParams, cfg: DecoderConfig = DecoderConfig()) -> np.ndarray:
    mu0, _ = encode(g, params)
    return edge_probability_matrix(cfg, softmax(mu0))


def evaluate_generation(graphs: Sequence[Graph], params: EncoderParams,
                        cfg: DecoderConfig = DecoderConfig()) -> tuple[float, float]:
    """Mean per-entry NLL and RMSE of reconstructed edge probabilities on test graphs."""
    scores = [nll_rmse(g, reconstruct_probs(g, params, cfg), cfg.eps_prob) for g in graphs]
    return float(np.mean([s[0] for s in scores])), float(np.mean([s[1] for s in scores]))


def edge_density(graphs: Sequence[Graph]) -> float:
    pairs = sum(g.n_nodes * (g.n_nodes - 1) / 2 for g in graphs)
    return sum(g.n_edges for g in graphs) / pairs


def evaluate_density_baseline(graphs: Sequence[Graph], density: float, eps: float = 1e-7) -> tuple[float, float]:
    """Score the model that predicts one constant edge probability everywhere."""
    scores = [nll_rmse(g, np.full((g.n_nodes, g.n_nodes), density), eps) for g in graphs]
    return float(np.mean([s[0] for s in scores])), float(np.mean([s[1] for s in scores]))


def sample_latents(prior: PriorMoments, n_nodes: int, rng) -> np.ndarray:
    eps = rng.standard_normal((n_nodes, prior.k))
    return softmax(prior.mu1 + np.sqrt(prior.sigma1_diag) * eps)


def sample_graph(prior: PriorMoments, n_nodes: int, target_edges: int,
                 cfg: DecoderConfig = DecoderConfig(), rng=None, bernoulli: bool = False) -> Graph:
    """Draw node memberships from the prior and connect the most similar pairs.

    The ``target_edges`` pairs with the largest similarity become edges (ties
    go to the lower pair index). With ``bernoulli=True`` each pair is instead
    drawn independently from its edge probability and ``target_edges`` is
    ignored.
    """
    max_edges = n_nodes * (n_nodes - 1) // 2
    if not 0 <= target_edges <= max_edges:
        raise InvalidTarget(f"target_edges={target_edges} not in [0, {max_edges}]")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    z = sample_latents(prior, n_nodes, rng)
    iu = np.triu_indices(n_nodes, k=1)
    f = np.asarray(similarity_matrix(cfg, z))[iu]
    if bernoulli:
        p = edge_probability_matrix(cfg, z)[iu]
        keep = rng.random(len(p)) < p
    else:
        # stable sort on -f keeps pair-index order among ties
        top = np.argsort(-f, kind="stable")[:target_edges]
        keep = np.zeros(len(f), dtype=bool)
        keep[top] = True
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    return from_edges(n_nodes, edges)
