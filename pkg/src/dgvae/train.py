"""ELBO evaluation, Adam, and the training loop with an inner reconstruction loop.

Each outer iteration first takes ``inner_recon_steps`` Adam steps on the
reconstruction term alone and then one step on the full ELBO. The extra
reconstruction updates keep the posterior from collapsing onto the prior.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .decoder import DecoderConfig, balance_regularizer, cut_trace, reconstruction_loss
from .errors import DivergenceError, HeterogeneousFeatureDims, InvalidParams
from .graph import Graph, build_laplacian
from .heatts import EncoderParams, encode, encoder_forward, init_encoder
from .latent import (
    SIGMA_FLOOR, PriorMoments, kl_from_log_sigma, kl_per_dim, prior_moments, sample_z_from_log,
)

log = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

LOG_COLUMNS = ("iter", "elbo", "kl", "recon", "cut_trace", "balance")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    iterations: int = 200
    inner_recon_steps: int = 5
    kl_weight: float = 1.0
    seed: int = 0
    minibatch_size: int = 10
    variational: bool = True
    n_clusters: int = 16
    hidden: int = 32
    s: float = 1.0
    order: int = 3
    alpha: float = 0.01
    similarity: str = "one-minus-mse"
    n_samples: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidParams("learning_rate must be positive")
        if self.iterations < 1:
            raise InvalidParams("iterations must be >= 1")
        if self.inner_recon_steps < 0:
            raise InvalidParams("inner_recon_steps must be >= 0")
        if self.minibatch_size < 1 or self.n_samples < 1:
            raise InvalidParams("minibatch_size and n_samples must be >= 1")

    @property
    def decoder(self) -> DecoderConfig:
        return DecoderConfig(self.similarity)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise InvalidParams(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class TrainState:
    params: EncoderParams
    adam_m: list
    adam_v: list
    step: int = 0
    history: list = field(default_factory=list)

    @classmethod
    def fresh(cls, params: EncoderParams) -> "TrainState":
        return cls(params, [np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(w) for w in params.weights], 0, [])


@dataclass(frozen=True, eq=False)
class PreparedGraph:
    """A graph with the matrices the objective needs, computed once."""

    graph: Graph
    lap_norm: object
    lap_plain: object
    features: np.ndarray

    @classmethod
    def of(cls, g: Graph, in_dim: Optional[int] = None) -> "PreparedGraph":
        return cls(g, build_laplacian(g, "symmetric-normalized"), build_laplacian(g, "unnormalized"),
                   g.features_or_identity(in_dim))


@dataclass
class ElboResult:
    elbo: float
    kl: float
    recon: float
    cut_trace: float
    balance: float
    tape: ad.Tape
    loss: ad.Var  # the minimized quantity: -recon, or -elbo
    weights: list
    z: np.ndarray

    def gradients(self) -> list[np.ndarray]:
        return self.tape.gradient(self.loss, self.weights)

    def record(self) -> dict:
        return {"elbo": self.elbo, "kl": self.kl, "recon": self.recon,
                "cut_trace": self.cut_trace, "balance": self.balance}


def _prepare(g, params):
    return g if isinstance(g, PreparedGraph) else PreparedGraph.of(g, params.in_dim)


def elbo(g, params: EncoderParams, prior: Optional[PriorMoments], rng=None, *,
         cfg: TrainConfig = TrainConfig(), recon_only: bool = False, epsilon=None) -> ElboResult:
    """Single-sample ELBO ``recon - kl_weight * KL`` recorded on a fresh tape.

    ``epsilon`` (``N x K``, or a list of them for ``n_samples > 1``) pins the
    noise; otherwise it is drawn from ``rng``. In the non-variational mode
    ``z = softmax(mu0)`` and the KL term is absent.
    """
    pg = _prepare(g, params)
    n, k = pg.graph.n_nodes, params.n_clusters
    tape = ad.Tape()
    weights = [tape.leaf(w) for w in params.weights]
    mu0, log_sigma0 = encoder_forward(pg.lap_norm, pg.features, params, weights)
    dec = cfg.decoder

    if cfg.variational:
        log_s = ad.clip_min(log_sigma0, np.log(SIGMA_FLOOR))
        if epsilon is None:
            eps_list = [rng.standard_normal((n, k)) for _ in range(cfg.n_samples)]
        else:
            eps_list = list(epsilon) if isinstance(epsilon, (list, tuple)) else [epsilon]
        recon_loss = None
        for eps in eps_list:
            z = sample_z_from_log(mu0, log_s, eps)
            term = reconstruction_loss(dec, pg.graph, z)
            recon_loss = term if recon_loss is None else ad.add(recon_loss, term)
        recon_loss = ad.mul(recon_loss, 1.0 / len(eps_list))
        kl = kl_from_log_sigma(mu0, log_s, prior)
        kl_val = float(kl.value)
    else:
        z = ad.softmax(mu0)
        recon_loss = reconstruction_loss(dec, pg.graph, z)
        kl = None
        kl_val = 0.0

    recon_val = -float(recon_loss.value)
    elbo_val = recon_val - cfg.kl_weight * kl_val
    for name, v in (("recon", recon_val), ("kl", kl_val)):
        if not np.isfinite(v):
            raise DivergenceError(f"non-finite {name} term", term=name)

    if recon_only or kl is None or cfg.kl_weight == 0:
        loss = recon_loss
    else:
        loss = ad.add(recon_loss, ad.mul(kl, cfg.kl_weight))

    z_val = z.value
    return ElboResult(
        elbo=elbo_val, kl=kl_val, recon=recon_val,
        cut_trace=float(cut_trace(pg.graph, z_val, pg.lap_plain)),
        balance=balance_regularizer(z_val),
        tape=tape, loss=loss, weights=weights, z=z_val,
    )


def adam_update(params, grads, m, v, step: int, lr: float):
    """One Adam step (``step`` counts from 1) with bias correction."""
    if not (len(params) == len(grads) == len(m) == len(v)):
        raise InvalidParams("parameter/gradient/moment lists differ in length")
    new_p, new_m, new_v = [], [], []
    for p, g, mi, vi in zip(params, grads, m, v):
        if not (p.shape == g.shape == mi.shape == vi.shape):
            raise InvalidParams(f"shape mismatch: {p.shape}, {g.shape}, {mi.shape}, {vi.shape}")
        mi = ADAM_BETA1 * mi + (1.0 - ADAM_BETA1) * g
        vi = ADAM_BETA2 * vi + (1.0 - ADAM_BETA2) * g * g
        m_hat = mi / (1.0 - ADAM_BETA1**step)
        v_hat = vi / (1.0 - ADAM_BETA2**step)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS))
        new_m.append(mi)
        new_v.append(vi)
    return new_p, new_m, new_v


def _batch_update(batch, state: TrainState, cfg, prior, rng, recon_only):
    grads = None
    records = []
    for pg in batch:
        res = elbo(pg, state.params, prior, rng, cfg=cfg, recon_only=recon_only)
        g = res.gradients()
        grads = g if grads is None else [a + b for a, b in zip(grads, g)]
        records.append(res.record())
    grads = [gr / len(batch) for gr in grads]
    for gr in grads:
        if not np.all(np.isfinite(gr)):
            raise DivergenceError("non-finite gradient", term="gradient")
    step = state.step + 1
    p, m, v = adam_update(state.params.weights, grads, state.adam_m, state.adam_v, step, cfg.learning_rate)
    mean = {key: float(np.mean([r[key] for r in records])) for key in records[0]}
    return replace(state, params=state.params.with_weights(p), adam_m=m, adam_v=v, step=step), mean


def train_batch_step(batch: Sequence, state: TrainState, cfg: TrainConfig,
                     prior: Optional[PriorMoments], rng) -> TrainState:
    """Inner reconstruction-only updates, then one full-ELBO update on ``batch``."""
    batch = [_prepare(g, state.params) for g in batch]
    for _ in range(cfg.inner_recon_steps):
        state, _ = _batch_update(batch, state, cfg, prior, rng, recon_only=True)
    state, rec = _batch_update(batch, state, cfg, prior, rng, recon_only=False)
    rec = {"iter": len(state.history), **rec}
    return replace(state, history=state.history + [rec])


def train_step(g, state: TrainState, cfg: TrainConfig, prior: Optional[PriorMoments], rng) -> TrainState:
    return train_batch_step([g], state, cfg, prior, rng)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def default_prior(cfg: TrainConfig) -> PriorMoments:
    return prior_moments(cfg.alpha, cfg.n_clusters)


def train_generation(dataset: Sequence[Graph], cfg: TrainConfig = TrainConfig(),
                     prior: Optional[PriorMoments] = None,
                     params: Optional[EncoderParams] = None) -> TrainState:
    """Train shared encoder weights over a set of graphs with minibatch Adam.

    Minibatches walk a fresh permutation of the dataset each epoch; batch
    gradients are averaged in a fixed order so runs are reproducible.
    """
    if not dataset:
        raise InvalidParams("dataset is empty")
    dims = {g.feature_dim if g.features is not None else None for g in dataset}
    if len(dims) > 1:
        raise HeterogeneousFeatureDims(f"graphs disagree on feature dimension: {sorted(map(str, dims))}")
    rng = make_rng(cfg.seed)
    if params is None:
        d = dims.pop()
        d = max(g.n_nodes for g in dataset) if d is None else d
        params = init_encoder(d, cfg.n_clusters, cfg.hidden, cfg.s, cfg.order, seed=rng)
    if prior is None:
        prior = default_prior(cfg)
    if prior.k != params.n_clusters:
        raise InvalidParams(f"prior has K={prior.k}, encoder has K={params.n_clusters}")
    prepared = [PreparedGraph.of(g, params.in_dim) for g in dataset]
    state = TrainState.fresh(params)
    bs = min(cfg.minibatch_size, len(prepared))
    order: list[int] = []
    for it in range(cfg.iterations):
        if len(order) < bs:
            order = order + list(rng.permutation(len(prepared)))
        batch, order = [prepared[i] for i in order[:bs]], order[bs:]
        state = train_batch_step(batch, state, cfg, prior, rng)
        if it % 50 == 0 or it == cfg.iterations - 1:
            rec = state.history[-1]
            log.debug("iter %d elbo %.4f kl %.4f recon %.4f", it, rec["elbo"], rec["kl"], rec["recon"])
    return state


def latent_kl_per_dim(params: EncoderParams, graphs: Sequence[Graph], prior: PriorMoments) -> np.ndarray:
    """Per-dimension KL averaged over all nodes of ``graphs``."""
    rows = []
    for g in graphs:
        mu0, log_s = encode(g, params)
        rows.append(kl_per_dim(mu0, np.exp(np.maximum(log_s, np.log(SIGMA_FLOOR))), prior))
    return np.concatenate(rows).mean(axis=0)


def active_fraction(params, graphs, prior, threshold: float = 0.01) -> float:
    """Fraction of latent dimensions whose mean KL exceeds ``threshold``."""
    return float(np.mean(latent_kl_per_dim(params, graphs, prior) > threshold))


def write_log(history, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for rec in history:
            w.writerow([rec["iter"]] + [repr(float(rec[c])) for c in LOG_COLUMNS[1:]])
