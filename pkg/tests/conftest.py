import numpy as np
import pytest
from hypothesis import strategies as st

from dgvae.graph import from_edges


def random_graph(rng, n, p=None):
    p = rng.uniform(0.1, 0.7) if p is None else p
    iu = np.triu_indices(n, k=1)
    keep = rng.random(len(iu[0])) < p
    return from_edges(n, np.stack([iu[0][keep], iu[1][keep]], axis=1))


def random_simplex(rng, n, k):
    z = rng.gamma(rng.uniform(0.2, 2.0), size=(n, k)) + 1e-12
    return z / z.sum(axis=1, keepdims=True)


def central_diff(f, x, h=1e-6):
    """Central finite-difference gradient of scalar ``f`` at array ``x``."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + h
        fp = f(x)
        x[idx] = old - h
        fm = f(x)
        x[idx] = old
        g[idx] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-8))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
