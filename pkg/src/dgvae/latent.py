"""Dirichlet prior as a logistic normal, reparameterized sampling and KL.

Covariances are diagonal on both sides. ``sigma0`` always denotes the
per-coordinate *variance* of the posterior Gaussian.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .errors import InvalidAlpha, InvalidVariance

SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class PriorMoments:
    alpha: np.ndarray
    mu1: np.ndarray
    sigma1_diag: np.ndarray

    @property
    def k(self):
        return len(self.alpha)


def prior_moments(alpha, k: int | None = None) -> PriorMoments:
    """Laplace approximation of ``Dir(alpha)`` in the softmax basis.

    A scalar ``alpha`` with ``k`` gives the symmetric prior.
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim == 0:
        if k is None:
            raise InvalidAlpha("a scalar alpha needs the number of clusters k")
        alpha = np.full(k, float(alpha))
    if alpha.ndim != 1 or len(alpha) < 1:
        raise InvalidAlpha("alpha must be a nonempty vector")
    if np.any(~(alpha > 0)):
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    K = len(alpha)
    log_a = np.log(alpha)
    mu1 = log_a - log_a.mean()
    inv = 1.0 / alpha
    sigma1 = inv * (1.0 - 2.0 / K) + inv.sum() / K**2
    return PriorMoments(alpha, mu1, sigma1)


def softmax(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def sample_z(mu0, sigma0, epsilon):
    """``softmax(mu0 + sqrt(sigma0) * eps)`` row-wise; works on tape vars too."""
    return ad.softmax(ad.add(mu0, ad.mul(ad.exp(ad.mul(ad.log(sigma0), 0.5)), epsilon)))


def sample_z_from_log(mu0, log_sigma0, epsilon):
    """Same as ``sample_z`` but parameterized by ``log sigma0``."""
    return ad.softmax(ad.add(mu0, ad.mul(ad.exp(ad.mul(log_sigma0, 0.5)), epsilon)))


def _check(sigma0, prior):
    sigma0 = np.asarray(sigma0, dtype=float)
    if np.any(~(sigma0 > 0)) or np.any(~(prior.sigma1_diag > 0)):
        raise InvalidVariance("variances must be positive")
    return sigma0


def kl_per_dim(mu0, sigma0, prior: PriorMoments) -> np.ndarray:
    """Per-coordinate KL terms; they sum to ``kl_divergence``."""
    sigma0 = _check(sigma0, prior)
    mu0 = np.asarray(mu0, dtype=float)
    s1 = prior.sigma1_diag
    return 0.5 * (sigma0 / s1 + (prior.mu1 - mu0) ** 2 / s1 - 1.0 + np.log(s1) - np.log(sigma0))


def kl_divergence(mu0, sigma0, prior: PriorMoments):
    """KL between diagonal logistic normals; sums the last axis (one value per node)."""
    return kl_per_dim(mu0, sigma0, prior).sum(axis=-1)


def kl_gradients(mu0, sigma0, prior: PriorMoments):
    """Closed-form ``(dKL/dmu0, dKL/dsigma0)``."""
    sigma0 = _check(sigma0, prior)
    s1 = prior.sigma1_diag
    d_mu = (np.asarray(mu0, dtype=float) - prior.mu1) / s1
    d_sigma = 0.5 * (1.0 / s1 - 1.0 / sigma0)
    return d_mu, d_sigma


def kl_from_log_sigma(mu0, log_sigma0, prior: PriorMoments):
    """Summed KL over nodes on the tape, with ``sigma0 = exp(log_sigma0)`` floored."""
    s1 = prior.sigma1_diag
    log_s0 = ad.clip_min(log_sigma0, np.log(SIGMA_FLOOR))
    diff = ad.sub(mu0, prior.mu1)
    per = ad.add(ad.mul(ad.exp(log_s0), 1.0 / s1), ad.mul(ad.square(diff), 1.0 / s1))
    per = ad.sub(per, log_s0)
    const = np.sum(np.log(s1)) - len(s1)
    n_nodes = log_sigma0.shape[0]
    return ad.mul(ad.add(ad.sum_all(per), const * n_nodes), 0.5)
