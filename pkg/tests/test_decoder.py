import itertools

import numpy as np
import pytest
from hypothesis import given, settings

from dgvae import autodiff as ad
from dgvae.decoder import (
    DecoderConfig, balance_regularizer, constrained_objective, cut_trace, dirichlet_total_variance,
    dirichlet_variance_optimum, edge_probability, edge_probability_matrix, edge_similarity_sum,
    pairwise_spread, probability_from_similarity, reconstruction_loss, similarity, verify_cut_identity,
)
from dgvae.errors import DimensionMismatch, InvalidParams
from dgvae.graph import Graph, from_edges

from conftest import central_diff, random_graph, random_simplex, rel_err, seeds

MSE = DecoderConfig("one-minus-mse")
DOT = DecoderConfig("dot-product")


def two_cliques(n=4):
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges += [(i + n, j + n) for i, j in edges]
    return from_edges(2 * n, edges)


def test_similarity_examples():
    c = np.array([0.2, 0.3, 0.5])
    assert similarity(MSE, c, c) == 1.0
    assert similarity(MSE, [1, 0], [0, 1]) == 0.0
    assert similarity(DOT, np.full(4, 0.25), np.full(4, 0.25)) == pytest.approx(0.25)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_similarity_range(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 8))
    a, b = random_simplex(rng, 2, k)
    for cfg, lo in ((MSE, 1 - 2 / k), (DOT, 0.0)):
        f = similarity(cfg, a, b)
        assert lo - 1e-12 <= f <= 1 + 1e-12
        assert f == pytest.approx(similarity(cfg, b, a), abs=1e-15)


def test_probability_examples():
    assert probability_from_similarity(0.5) == pytest.approx(0.5)
    assert probability_from_similarity(1.0) == pytest.approx(np.exp(1) / (np.exp(1) + 1), abs=1e-12)
    assert probability_from_similarity(1.0) == pytest.approx(0.7311, abs=5e-5)
    assert probability_from_similarity(0.0) == pytest.approx(0.2689, abs=5e-5)
    assert probability_from_similarity(0.0) + probability_from_similarity(1.0) == pytest.approx(1.0)
    assert edge_probability(MSE, [1, 0], [1, 0]) == pytest.approx(np.e / (np.e + 1))


def test_probability_matrix_symmetric(rng):
    z = random_simplex(rng, 6, 3)
    p = edge_probability_matrix(MSE, z)
    np.testing.assert_allclose(p, p.T)
    assert np.all(np.diag(p) == 0)
    off = p[~np.eye(6, dtype=bool)]
    assert np.all((off > 0) & (off < 1))


def test_loss_identical_rows(rng):
    g = random_graph(rng, 9)
    z = np.tile(random_simplex(rng, 1, 4), (9, 1))
    assert float(reconstruction_loss(MSE, g, z)) == pytest.approx(9 * 8 - 4 * g.n_edges, abs=1e-10)


def test_loss_single_edge_separated():
    g = from_edges(2, [(0, 1)])
    assert float(reconstruction_loss(MSE, g, np.eye(2))) == pytest.approx(0.0, abs=1e-15)


def test_loss_matches_trace_form(rng):
    g = random_graph(rng, 10)
    z = random_simplex(rng, 10, 4)
    n, k = 10, 4
    all_pairs = sum(similarity(MSE, z[i], z[j]) for i in range(n) for j in range(n) if i != j)
    trace_form = all_pairs - 2 * (2 * g.n_edges - 2 * float(cut_trace(g, z)))
    assert float(reconstruction_loss(MSE, g, z)) == pytest.approx(trace_form, abs=1e-10)


def test_loss_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        reconstruction_loss(MSE, from_edges(3, [(0, 1)]), np.eye(2))


def test_cut_trace_examples():
    g = two_cliques()
    z = np.repeat(np.eye(2), 4, axis=0)
    assert float(cut_trace(g, z)) == 0.0
    k3 = from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert float(cut_trace(k3, np.array([[1, 0], [0, 1], [0, 1]], float))) == pytest.approx(2.0)
    assert float(cut_trace(k3, np.full((3, 2), 0.5))) == pytest.approx(0.0, abs=1e-15)


def test_cut_identity_random_cases(rng):
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 21))
        k = int(rng.integers(2, 7))
        worst = max(worst, verify_cut_identity(random_graph(rng, n, rng.uniform(0.1, 0.9)),
                                               random_simplex(rng, n, k)))
    assert worst <= 1e-10


def test_cut_identity_k3_by_hand():
    k3 = from_edges(3, [(0, 1), (1, 2), (0, 2)])
    z = np.array([[1, 0], [0, 1], [0, 1]], float)
    # ordered edge pairs: four with f = 0, two with f = 1
    assert edge_similarity_sum(MSE, k3, z) == 2.0
    assert 2 * 3 - 2 * float(cut_trace(k3, z)) == 2.0
    assert verify_cut_identity(k3, z) == 0.0


def test_cut_identity_degenerate(rng):
    g = random_graph(rng, 8)
    z = np.tile(random_simplex(rng, 1, 3), (8, 1))
    assert edge_similarity_sum(MSE, g, z) == pytest.approx(2 * g.n_edges)
    assert verify_cut_identity(g, z) <= 1e-12
    empty = Graph(np.zeros((5, 5)))
    assert edge_similarity_sum(MSE, empty, random_simplex(rng, 5, 3)) == 0.0
    with pytest.raises(InvalidParams):
        verify_cut_identity(g, z, DOT)


def test_balance_examples():
    assert balance_regularizer(np.tile([0.3, 0.7], (5, 1))) == pytest.approx(0.0, abs=1e-15)
    assert balance_regularizer(np.eye(2)) == pytest.approx(0.5)


def test_spread_variance_identity(rng):
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 30))
        c = rng.standard_normal((n, int(rng.integers(1, 6))))
        lhs = pairwise_spread(c)
        rhs = 2 * n * np.sum((c - c.mean(axis=0)) ** 2)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    assert worst <= 1e-10


def test_dirichlet_variance_monte_carlo(rng):
    for _ in range(5):
        beta = rng.uniform(0.2, 5.0, int(rng.integers(2, 6)))
        x = rng.dirichlet(beta, 100_000)
        mc = np.sum(x.var(axis=0))
        assert mc == pytest.approx(dirichlet_total_variance(beta), rel=0.02)
        # balance statistic is the same sample variance
        assert balance_regularizer(x) == pytest.approx(mc, rel=1e-9)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_symmetric_beta_maximizes_variance(k):
    t = 2.0
    sym = dirichlet_total_variance(np.full(k, t / k))
    ticks = np.linspace(0.02, 1.0, 25)
    best = -np.inf
    for w in itertools.product(ticks, repeat=k):
        beta = t * np.array(w) / np.sum(w)
        val = dirichlet_total_variance(beta)
        best = max(best, val)
        if not np.allclose(beta, t / k):
            assert val <= sym + 1e-12
    assert best == pytest.approx(sym, abs=1e-12)


def test_variance_optimum_tabulation():
    # the reported optimum equals the constrained objective over t*^3,
    # while the exact variance at the symmetric point carries t* + 1
    for k in (2, 3, 4, 7):
        for t in (0.1, 1.0, 3.0):
            beta = np.full(k, t / k)
            assert dirichlet_variance_optimum(k, t) == pytest.approx(constrained_objective(beta) / t**3)
            assert dirichlet_total_variance(beta) == pytest.approx((k - 1) / (k * (t + 1)))
    assert dirichlet_variance_optimum(2, 1.0) == 0.5
    assert dirichlet_total_variance([0.5, 0.5]) == pytest.approx(0.25)
    with pytest.raises(InvalidParams):
        dirichlet_variance_optimum(3, 0.0)


def test_variance_optimum_asymmetric_lower():
    t, d = 1.0, 1e-3
    assert dirichlet_total_variance([t - 3 * d, d, d, d]) < dirichlet_total_variance(np.full(4, t / 4))


def test_variance_small_t_limit():
    ts = np.logspace(1, -6, 30)
    vals = [dirichlet_total_variance(np.full(3, t / 3)) for t in ts]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(2 / 3, rel=1e-5)


@pytest.mark.parametrize("cfg", [MSE, DOT])
def test_loss_gradient_wrt_z(cfg, rng):
    for _ in range(5):
        g = random_graph(rng, 7)
        z = random_simplex(rng, 7, 3)
        tape = ad.Tape()
        zv = tape.leaf(z)
        (grad,) = tape.gradient(reconstruction_loss(cfg, g, zv), [zv])
        fd = central_diff(lambda v: float(reconstruction_loss(cfg, g, v)), z)
        assert rel_err(grad, fd) < 1e-5
