import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgvae import autodiff as ad
from dgvae.errors import InvalidAlpha, InvalidVariance
from dgvae.latent import (
    kl_divergence, kl_from_log_sigma, kl_gradients, kl_per_dim, prior_moments, sample_z, softmax,
)

from conftest import central_diff, rel_err, seeds


def test_prior_two_dims():
    pm = prior_moments([1.0, 1.0])
    np.testing.assert_allclose(pm.mu1, [0, 0])
    np.testing.assert_allclose(pm.sigma1_diag, [0.5, 0.5])


def test_prior_sparse_sixteen():
    pm = prior_moments(0.01, 16)
    np.testing.assert_allclose(pm.mu1, 0, atol=1e-12)
    np.testing.assert_allclose(pm.sigma1_diag, 93.75)


def test_prior_asymmetric_by_formula():
    alpha = np.array([0.5, 2.0, 3.0])
    pm = prior_moments(alpha)
    K = 3
    for k in range(K):
        assert pm.mu1[k] == pytest.approx(np.log(alpha[k]) - np.mean(np.log(alpha)))
        assert pm.sigma1_diag[k] == pytest.approx((1 / alpha[k]) * (1 - 2 / K) + np.sum(1 / alpha) / K**2)


def test_invalid_alpha():
    with pytest.raises(InvalidAlpha):
        prior_moments([1.0, 0.0])
    with pytest.raises(InvalidAlpha):
        prior_moments([1.0, -1.0])


def test_sample_z_cases():
    np.testing.assert_allclose(sample_z(np.zeros(4), np.ones(4), np.zeros(4)), 0.25)
    z = sample_z(np.array([10.0, 0, 0, 0]), np.ones(4), np.zeros(4))
    assert z[0] > 0.999


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_sample_z_on_simplex(seed):
    rng = np.random.default_rng(seed)
    mu = rng.normal(0, 30, (5, 6))
    z = sample_z(mu, rng.uniform(0.01, 100, (5, 6)), rng.standard_normal((5, 6)))
    assert np.all(z >= 0)
    np.testing.assert_allclose(z.sum(axis=1), 1, atol=1e-12)


def test_sample_z_jacobian(rng):
    mu = rng.standard_normal(4)
    sig = rng.uniform(0.5, 2, 4)
    eps = rng.standard_normal(4)
    z = sample_z(mu, sig, eps)
    jac = np.diag(z) - np.outer(z, z)
    fd = np.stack([central_diff(lambda m: sample_z(m, sig, eps)[i], mu) for i in range(4)])
    np.testing.assert_allclose(jac, fd, atol=1e-5)


def test_kl_zero_at_coincidence():
    pm = prior_moments([0.3, 1.0, 2.5])
    assert kl_divergence(pm.mu1, pm.sigma1_diag, pm) == pytest.approx(0, abs=1e-12)


def test_kl_hand_value():
    pm = prior_moments([1.0, 1.0])
    assert kl_divergence(np.zeros(2), np.ones(2), pm) == pytest.approx(1 - np.log(2), abs=1e-9)


def test_kl_grows_as_variance_shrinks():
    pm = prior_moments([1.0, 1.0])
    grid = np.logspace(-8, -1, 30)[::-1]
    vals = [kl_divergence(np.zeros(2), np.full(2, s), pm) for s in grid]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 5


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_kl_nonnegative_and_perturbations(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 8))
    pm = prior_moments(rng.uniform(0.05, 5, k))
    mu = pm.mu1 + rng.normal(0, 1, k)
    sig = pm.sigma1_diag * rng.uniform(0.1, 3, k)
    assert kl_divergence(mu, sig, pm) > 0
    assert kl_divergence(pm.mu1, pm.sigma1_diag, pm) == pytest.approx(0, abs=1e-12)


def test_kl_invalid_variance():
    pm = prior_moments([1.0, 1.0])
    with pytest.raises(InvalidVariance):
        kl_divergence(np.zeros(2), np.array([1.0, 0.0]), pm)


def test_kl_gradient_cases():
    pm = prior_moments([1.0, 1.0])
    dmu, dsig = kl_gradients(pm.mu1, pm.sigma1_diag, pm)
    np.testing.assert_allclose(dmu, 0)
    np.testing.assert_allclose(dsig, 0)
    dmu, _ = kl_gradients(pm.mu1 + 1.0, pm.sigma1_diag, pm)
    np.testing.assert_allclose(dmu, 2.0)


def test_kl_gradients_finite_difference(rng):
    worst = 0.0
    for _ in range(50):
        k = int(rng.integers(2, 6))
        pm = prior_moments(rng.uniform(0.1, 3, k))
        mu = rng.normal(0, 1, k)
        sig = rng.uniform(0.2, 4, k)
        dmu, dsig = kl_gradients(mu, sig, pm)
        worst = max(worst, rel_err(dmu, central_diff(lambda m: kl_divergence(m, sig, pm), mu)))
        worst = max(worst, rel_err(dsig, central_diff(lambda s: kl_divergence(mu, s, pm), sig)))
    assert worst < 1e-6


def test_tape_kl_matches_closed_form(rng):
    pm = prior_moments(0.01, 5)
    mu = rng.standard_normal((4, 5))
    ls = rng.standard_normal((4, 5))
    tape = ad.Tape()
    val = kl_from_log_sigma(tape.leaf(mu), tape.leaf(ls), pm)
    assert float(val.value) == pytest.approx(kl_divergence(mu, np.exp(ls), pm).sum(), rel=1e-12)
    assert kl_per_dim(mu, np.exp(ls), pm).sum() == pytest.approx(float(val.value), rel=1e-12)


def test_symmetric_prior_mean_is_uniform():
    pm = prior_moments(1.0, 4)
    rng = np.random.default_rng(0)
    eps = rng.standard_normal((100_000, 4))
    z = softmax(pm.mu1 + np.sqrt(pm.sigma1_diag) * eps)
    np.testing.assert_allclose(z.mean(axis=0), 0.25, atol=5e-3)
