"""Heatts encoder: truncated-Taylor heat-kernel propagation plus feature transforms.

Each layer computes ``act(sum_n (-s)^n / n! L^n H W)`` with ``L`` the
symmetric-normalized Laplacian. ``L^n H`` is built by repeated products
with ``L``; powers of ``L`` are never formed.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .errors import DimensionMismatch, DivergenceError, InvalidParams
from .graph import Graph, Laplacian, build_laplacian
from .spectral import taylor_coefficients

ACTIVATIONS = ("relu", "none")


@dataclass(frozen=True)
class HeattsLayer:
    weight: np.ndarray
    s: float = 1.0
    order: int = 3
    activation: str = "relu"

    def __post_init__(self):
        if self.order not in (0, 1, 2, 3):
            raise InvalidParams(f"order must be in 0..3, got {self.order}")
        if not self.s > 0:
            raise InvalidParams("s must be positive")
        if self.activation not in ACTIVATIONS:
            raise InvalidParams(f"unknown activation {self.activation!r}")

    @property
    def d_in(self):
        return self.weight.shape[0]

    @property
    def d_out(self):
        return self.weight.shape[1]


@dataclass(frozen=True)
class EncoderParams:
    """Shared hidden layer feeding independent mean and log-variance heads."""

    hidden_layer: HeattsLayer
    mu_head: HeattsLayer
    sigma_head: HeattsLayer

    NAMES = ("hidden_layer", "mu_head", "sigma_head")

    @property
    def layers(self):
        return [self.hidden_layer, self.mu_head, self.sigma_head]

    @property
    def weights(self):
        return [layer.weight for layer in self.layers]

    @property
    def n_clusters(self):
        return self.mu_head.d_out

    @property
    def in_dim(self):
        return self.hidden_layer.d_in

    def with_weights(self, weights) -> "EncoderParams":
        return EncoderParams(*(replace(layer, weight=np.asarray(w, dtype=float))
                               for layer, w in zip(self.layers, weights)))


def glorot_uniform(d_in, d_out, rng):
    limit = np.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-limit, limit, size=(d_in, d_out))


def init_encoder(d_in: int, n_clusters: int = 16, hidden: int = 32, s: float = 1.0,
                 order: int = 3, seed=None) -> EncoderParams:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return EncoderParams(
        HeattsLayer(glorot_uniform(d_in, hidden, rng), s, order, "relu"),
        HeattsLayer(glorot_uniform(hidden, n_clusters, rng), s, order, "none"),
        HeattsLayer(glorot_uniform(hidden, n_clusters, rng), s, order, "none"),
    )


def _matrix(lap):
    return lap.matrix if isinstance(lap, Laplacian) else lap


def propagate(lap, h, s: float = 1.0, order: int = 3):
    """``sum_{n<=order} (-s)^n / n! L^n h``; ``h`` may be an array or a tape ``Var``."""
    mat = _matrix(lap)
    if isinstance(lap, Laplacian) and lap.kind != "symmetric-normalized":
        raise InvalidParams("Heatts propagation expects the symmetric-normalized Laplacian")
    rows = h.shape[0]
    if mat.shape[1] != rows:
        raise DimensionMismatch(f"Laplacian is {mat.shape}, signal has {rows} rows")
    coeffs = taylor_coefficients(s, order)
    out = h
    term = h
    for c in coeffs[1:]:
        term = ad.matmul(mat, term)
        out = ad.add(out, ad.mul(term, c))
    return out


def layer_forward(lap, h, layer: HeattsLayer, weight=None):
    w = layer.weight if weight is None else weight
    if h.shape[1] != w.shape[0]:
        raise DimensionMismatch(f"layer expects {w.shape[0]} inputs, got {h.shape[1]}")
    return _activate(ad.matmul(propagate(lap, h, layer.s, layer.order), w), layer.activation)


def _activate(x, activation):
    return ad.relu(x) if activation == "relu" else x


def encoder_forward(lap, x, params: EncoderParams, weights=None):
    """``(mu0, log_sigma0)``; pass tape ``Var`` weights to record gradients."""
    w_h, w_mu, w_sig = params.weights if weights is None else weights
    hidden = layer_forward(lap, x, params.hidden_layer, w_h)
    # Both heads share one propagation of the hidden layer when s/order agree.
    if (params.mu_head.s, params.mu_head.order) == (params.sigma_head.s, params.sigma_head.order):
        m = propagate(lap, hidden, params.mu_head.s, params.mu_head.order)
        mu0 = _activate(ad.matmul(m, w_mu), params.mu_head.activation)
        log_sigma0 = _activate(ad.matmul(m, w_sig), params.sigma_head.activation)
    else:
        mu0 = layer_forward(lap, hidden, params.mu_head, w_mu)
        log_sigma0 = layer_forward(lap, hidden, params.sigma_head, w_sig)
    return mu0, log_sigma0


def encode(g: Graph, params: EncoderParams, lap: Laplacian | None = None):
    """Logistic-normal parameters ``(mu0, log_sigma0)``, each ``N x K``."""
    lap = build_laplacian(g, "symmetric-normalized") if lap is None else lap
    x = g.features_or_identity(params.in_dim)
    mu0, log_sigma0 = encoder_forward(lap, x, params)
    if not (np.all(np.isfinite(mu0)) and np.all(np.isfinite(log_sigma0))):
        raise DivergenceError("encoder produced non-finite output", term="encoder")
    return mu0, log_sigma0
