"""Generation, clustering and cut-quality metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidProbability, LengthMismatch
from .graph import Graph, build_laplacian


@dataclass(frozen=True)
class ClusterAssignment:
    hard_labels: np.ndarray
    soft: np.ndarray

    @classmethod
    def from_soft(cls, soft) -> "ClusterAssignment":
        soft = np.asarray(soft, dtype=float)
        # np.argmax returns the first maximum, i.e. lowest index on ties.
        return cls(np.argmax(soft, axis=1), soft)

    @property
    def n_clusters(self) -> int:
        return self.soft.shape[1]


def nll_rmse(g: Graph, probs, eps: float = 1e-7) -> tuple[float, float]:
    """Per-entry NLL and RMSE over unordered off-diagonal pairs."""
    probs = np.asarray(probs, dtype=float)
    n = g.n_nodes
    if probs.shape != (n, n):
        raise LengthMismatch(f"probs has shape {probs.shape}, graph has {n} nodes")
    iu = np.triu_indices(n, k=1)
    p = probs[iu]
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise InvalidProbability("edge probabilities must lie in [0, 1]")
    p = np.clip(p, eps, 1.0 - eps)
    a = g.dense_adjacency()[iu]
    nll = -np.mean(a * np.log(p) + (1.0 - a) * np.log1p(-p))
    rmse = np.sqrt(np.mean((p - a) ** 2))
    return float(nll), float(rmse)


def _check_lengths(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise LengthMismatch(f"label vectors differ: {pred.shape} vs {truth.shape}")
    return pred, truth


def _contingency(pred, truth):
    p_ids, p_inv = np.unique(pred, return_inverse=True)
    t_ids, t_inv = np.unique(truth, return_inverse=True)
    table = np.zeros((len(p_ids), len(t_ids)), dtype=np.int64)
    np.add.at(table, (p_inv, t_inv), 1)
    return table, p_ids, t_ids


def best_mapping(pred, truth) -> dict:
    """Injective predicted -> true label map maximizing agreement (Hungarian).

    Ties between equally good maps go to the one with the larger sum of
    matched-pair F1, so the aligned F1 does not depend on label names.
    """
    pred, truth = _check_lengths(pred, truth)
    table, p_ids, t_ids = _contingency(pred, truth)
    sizes = table.sum(axis=1, keepdims=True) + table.sum(axis=0, keepdims=True)
    pair_f1 = 2.0 * table / sizes
    # agreement moves in integer steps; the F1 sum is below min(table.shape)
    weight = table + pair_f1 / (2.0 * min(table.shape))
    rows, cols = linear_sum_assignment(weight, maximize=True)
    return {p_ids[r].item(): t_ids[c].item() for r, c in zip(rows, cols)}


def align_labels(pred, truth, unmatched=-1) -> np.ndarray:
    """``pred`` rewritten in the truth alphabet; unmatched clusters become ``unmatched``."""
    mapping = best_mapping(pred, truth)
    return np.array([mapping.get(p.item(), unmatched) for p in np.asarray(pred)])


def clustering_accuracy(pred, truth) -> float:
    pred, truth = _check_lengths(pred, truth)
    if len(pred) == 0:
        return 1.0
    return float(np.mean(align_labels(pred, truth) == truth))


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies."""
    pred, truth = _check_lengths(pred, truth)
    table, _, _ = _contingency(pred, truth)
    h_p = _entropy(table.sum(axis=1))
    h_t = _entropy(table.sum(axis=0))
    if h_p == 0.0 or h_t == 0.0:
        return 0.0
    joint = table / table.sum()
    pp = joint.sum(axis=1, keepdims=True)
    pt = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = float(np.sum(joint[nz] * np.log(joint[nz] / (pp @ pt)[nz])))
    return float(np.clip(mi / np.sqrt(h_p * h_t), 0.0, 1.0))


def per_class_f1(pred, truth) -> dict:
    pred, truth = _check_lengths(pred, truth)
    aligned = align_labels(pred, truth)
    scores = {}
    for c in np.unique(truth):
        tp = np.sum((aligned == c) & (truth == c))
        fp = np.sum((aligned == c) & (truth != c))
        fn = np.sum((aligned != c) & (truth == c))
        denom = 2 * tp + fp + fn
        scores[c.item()] = 0.0 if denom == 0 else 2.0 * tp / denom
    return scores


def macro_f1(pred, truth) -> float:
    scores = per_class_f1(pred, truth)
    return float(np.mean(list(scores.values()))) if scores else 1.0


def cut_metrics(g: Graph, assign: ClusterAssignment) -> tuple[float, float]:
    """Hard-label ``(1/K) sum_k cut(V_k)`` and ratio cut ``(1/K) sum_k cut(V_k) / |V_k|``.

    ``K`` is the number of columns of the soft assignment; an empty cluster
    makes the ratio cut ``inf``.
    """
    k = assign.n_clusters
    onehot = np.zeros((g.n_nodes, k))
    onehot[np.arange(g.n_nodes), assign.hard_labels] = 1.0
    lap = build_laplacian(g, "unnormalized").matrix
    per_cluster = np.einsum("ik,ik->k", onehot, np.asarray(lap @ onehot))
    sizes = onehot.sum(axis=0)
    cut = float(per_cluster.sum() / k)
    if np.any(sizes == 0):
        return cut, float("inf")
    return cut, float(np.sum(per_cluster / sizes) / k)


def mean_std(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    return float(values.mean()), float(values.std())
