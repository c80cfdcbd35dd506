"""Edge decoder and its reading as a relaxed balanced graph cut.

All pair sums run over ordered pairs ``i != j``. With a symmetric
adjacency, a sum over ``A_ij = 1`` therefore counts every edge twice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import DimensionMismatch, InvalidParams
from .graph import Graph, build_laplacian

SIMILARITIES = ("one-minus-mse", "dot-product")


@dataclass(frozen=True)
class DecoderConfig:
    similarity: str = "one-minus-mse"
    eps_prob: float = 1e-7

    def __post_init__(self):
        if self.similarity not in SIMILARITIES:
            raise InvalidParams(f"unknown similarity {self.similarity!r}")
        if not 0 < self.eps_prob < 0.5:
            raise InvalidParams("eps_prob must lie in (0, 0.5)")


def similarity(cfg: DecoderConfig, ci, cj) -> float:
    ci = np.asarray(ci, dtype=float)
    cj = np.asarray(cj, dtype=float)
    if cfg.similarity == "dot-product":
        return float(ci @ cj)
    return float(1.0 - np.mean((ci - cj) ** 2))


def similarity_matrix(cfg: DecoderConfig, z):
    """All-pairs ``f(C_i, C_j)``; differentiable when ``z`` is a tape var."""
    gram = ad.matmul(z, ad.transpose(z))
    if cfg.similarity == "dot-product":
        return gram
    k = z.shape[1]
    sq = ad.sum_axis(ad.square(z), axis=1)  # N x 1
    dist = ad.sub(ad.add(sq, ad.transpose(sq)), ad.mul(gram, 2.0))
    return ad.sub(1.0, ad.mul(dist, 1.0 / k))


def logistic(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def probability_from_similarity(f, eps: float | None = None):
    """``exp(f) / (exp(f) + exp(1 - f)) = logistic(2f - 1)``, optionally clamped."""
    p = logistic(2.0 * np.asarray(f, dtype=float) - 1.0)
    return p if eps is None else np.clip(p, eps, 1.0 - eps)


def edge_probability(cfg: DecoderConfig, ci, cj, clamp: bool = True) -> float:
    return float(probability_from_similarity(similarity(cfg, ci, cj), cfg.eps_prob if clamp else None))


def edge_probability_matrix(cfg: DecoderConfig, z) -> np.ndarray:
    """Symmetric matrix of clamped edge probabilities (diagonal set to 0)."""
    p = probability_from_similarity(similarity_matrix(cfg, np.asarray(z, dtype=float)), cfg.eps_prob)
    np.fill_diagonal(p, 0.0)
    return p


def _pair_weights(a: np.ndarray) -> np.ndarray:
    # loss = sum_{i != j} f_ij - 2 sum_{A_ij = 1} f_ij
    w = 1.0 - 2.0 * a
    np.fill_diagonal(w, 0.0)
    return w


def reconstruction_loss(cfg: DecoderConfig, g: Graph, z):
    """Negated surrogate log-likelihood ``-(2 sum_{A=1} f - sum_{i!=j} f)``."""
    if z.shape[0] != g.n_nodes:
        raise DimensionMismatch(f"z has {z.shape[0]} rows for {g.n_nodes} nodes")
    return ad.sum_all(ad.mul(similarity_matrix(cfg, z), _pair_weights(g.dense_adjacency())))


def edge_similarity_sum(cfg: DecoderConfig, g: Graph, z) -> float:
    """``sum_{A_ij = 1} f(C_i, C_j)`` by an explicit loop over ordered edge pairs."""
    z = np.asarray(z, dtype=float)
    total = 0.0
    for i, j in g.edges():
        f = similarity(cfg, z[i], z[j])
        total += 2.0 * f
    return total


def cut_trace(g: Graph, z, lap=None):
    """``Tr(Z^T L Z) / K`` with the unnormalized Laplacian."""
    if z.shape[0] != g.n_nodes:
        raise DimensionMismatch(f"z has {z.shape[0]} rows for {g.n_nodes} nodes")
    mat = (lap or build_laplacian(g, "unnormalized")).matrix
    k = z.shape[1]
    return ad.mul(ad.sum_all(ad.mul(z, ad.matmul(mat, z))), 1.0 / k)


def verify_cut_identity(g: Graph, z, cfg: DecoderConfig = DecoderConfig()) -> float:
    """``|sum_{A_ij=1} f - (2m - 2 Tr(Z^T L Z) / K)|`` for the one-minus-mse decoder.

    Over ordered pairs ``sum_{A_ij=1} ||C_i - C_j||^2 = 2 Tr(Z^T L Z)``, so the
    edge count doubles while the trace coefficient stays ``2/K``.
    """
    if cfg.similarity != "one-minus-mse":
        raise InvalidParams("the cut identity holds for the one-minus-mse similarity")
    z = np.asarray(z, dtype=float)
    lhs = edge_similarity_sum(cfg, g, z)
    rhs = 2.0 * g.n_edges - 2.0 * float(cut_trace(g, z))
    return abs(lhs - rhs)


def balance_regularizer(z) -> float:
    """Sample variance ``(1/N) sum_i ||C_i - mean(C)||^2`` of the membership rows."""
    z = np.asarray(z, dtype=float)
    return float(np.sum((z - z.mean(axis=0)) ** 2) / z.shape[0])


def pairwise_spread(z) -> float:
    """``sum_i sum_j ||C_i - C_j||^2`` by explicit pairs."""
    z = np.asarray(z, dtype=float)
    diff = z[:, None, :] - z[None, :, :]
    return float(np.sum(diff**2))


def dirichlet_total_variance(beta) -> float:
    """``sum_k Var(x_k)`` for ``x ~ Dir(beta)``."""
    beta = np.asarray(beta, dtype=float)
    b0 = beta.sum()
    return float(np.sum(beta * (b0 - beta)) / (b0**2 * (b0 + 1.0)))


def dirichlet_variance_optimum(k: int, t_star: float) -> float:
    """``(K - 1) / (K t*)``, the value reported for the symmetric optimum at ``sum(beta) = t*``.

    This equals the sum-constrained objective ``sum_k beta_k (t* - beta_k)``
    at ``beta_k = t*/K`` divided by ``t*^3``. The exact total variance at
    that point is ``(K - 1) / (K (t* + 1))`` (see ``dirichlet_total_variance``).
    """
    if not t_star > 0:
        raise InvalidParams("t_star must be positive")
    if k < 1:
        raise InvalidParams("k must be positive")
    return (k - 1) / (k * t_star)


def constrained_objective(beta) -> float:
    """``sum_k beta_k (t - beta_k)`` with ``t = sum(beta)``."""
    beta = np.asarray(beta, dtype=float)
    return float(np.sum(beta * (beta.sum() - beta)))
