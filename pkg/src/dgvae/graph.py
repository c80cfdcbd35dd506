"""Undirected graphs, Laplacians and synthetic graph families."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .errors import InvalidParams, ValidationError

DENSE_LIMIT = 2048

FAMILIES = ("erdos_renyi", "ego", "regular", "geometric", "power_law", "barabasi_albert")

FAMILY_DEFAULTS = {
    "erdos_renyi": {"p": 0.3},
    "ego": {"p": 0.3},
    "regular": {"degree": 4},
    "geometric": {"radius": 0.4},
    "power_law": {"attach": 2, "triad_p": 0.1},
    "barabasi_albert": {"attach": 2},
}


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected, unweighted graph ``(A, X)`` with optional ground-truth labels.

    ``adjacency`` is a dense array for up to ``DENSE_LIMIT`` nodes and a CSR
    matrix above that.
    """

    adjacency: np.ndarray | sp.csr_matrix
    features: Optional[np.ndarray] = None
    node_labels: Optional[np.ndarray] = None

    def __post_init__(self):
        a = self.adjacency
        n = a.shape[0]
        if a.ndim != 2 or a.shape[1] != n:
            raise ValidationError(f"adjacency must be square, got {a.shape}")
        if sp.issparse(a):
            if (a != a.T).nnz:
                raise ValidationError("adjacency is not symmetric")
            if np.any(a.diagonal() != 0):
                raise ValidationError("adjacency has a nonzero diagonal")
            if a.nnz and not np.all(a.data == 1):
                raise ValidationError("adjacency entries must be 0 or 1")
        else:
            if not np.array_equal(a, a.T):
                raise ValidationError("adjacency is not symmetric")
            if np.any(np.diag(a) != 0):
                raise ValidationError("adjacency has a nonzero diagonal")
            if not np.all((a == 0) | (a == 1)):
                raise ValidationError("adjacency entries must be 0 or 1")
        if self.features is not None and self.features.shape[0] != n:
            raise ValidationError(f"features have {self.features.shape[0]} rows for {n} nodes")
        if self.node_labels is not None and len(self.node_labels) != n:
            raise ValidationError(f"node_labels has length {len(self.node_labels)} for {n} nodes")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        if sp.issparse(self.adjacency):
            return int(self.adjacency.nnz // 2)
        return int(self.adjacency.sum() // 2)

    @property
    def feature_dim(self) -> int:
        return 0 if self.features is None else self.features.shape[1]

    def dense_adjacency(self) -> np.ndarray:
        if sp.issparse(self.adjacency):
            return self.adjacency.toarray().astype(float)
        return np.asarray(self.adjacency, dtype=float)

    def edges(self) -> np.ndarray:
        """Each undirected edge once, as rows ``(i, j)`` with ``i < j``."""
        upper = sp.triu(sp.csr_matrix(self.adjacency), k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.stack([upper.row[order], upper.col[order]], axis=1).astype(np.int64)

    def features_or_identity(self, width: Optional[int] = None) -> np.ndarray:
        """Node features, falling back to (zero-padded) identity rows."""
        if self.features is not None:
            return np.asarray(self.features, dtype=float)
        return identity_features(self.n_nodes, width)

    def with_features(self, features) -> "Graph":
        return replace(self, features=None if features is None else np.asarray(features, dtype=float))

    def permute(self, perm) -> "Graph":
        """Relabel nodes so that new node ``k`` is old node ``perm[k]``."""
        perm = np.asarray(perm)
        a = self.adjacency[perm][:, perm]
        x = None if self.features is None else self.features[perm]
        y = None if self.node_labels is None else self.node_labels[perm]
        return Graph(a, x, y)

    def __eq__(self, other):
        if not isinstance(other, Graph) or other.n_nodes != self.n_nodes:
            return NotImplemented if not isinstance(other, Graph) else False

        def same(u, v):
            if u is None or v is None:
                return u is None and v is None
            return u.shape == v.shape and np.array_equal(u, v)

        return (
            np.array_equal(self.edges(), other.edges())
            and same(self.features, other.features)
            and same(self.node_labels, other.node_labels)
        )


def identity_features(n: int, width: Optional[int] = None) -> np.ndarray:
    width = n if width is None else width
    if width < n:
        raise InvalidParams(f"identity feature width {width} < {n} nodes")
    return np.eye(n, width)


def from_edges(n: int, edges, features=None, node_labels=None) -> Graph:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) and (edges.min() < 0 or edges.max() >= n):
        raise ValidationError("edge endpoint out of range")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise ValidationError("self-loops are not allowed")
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    a = sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    a.data[:] = 1.0  # duplicate edges collapse
    a = a if n > DENSE_LIMIT else a.toarray()
    if features is not None:
        features = np.asarray(features, dtype=float)
    if node_labels is not None:
        node_labels = np.asarray(node_labels, dtype=np.int64)
    return Graph(a, features, node_labels)


def from_networkx(g: nx.Graph) -> Graph:
    mapping = {v: i for i, v in enumerate(sorted(g.nodes()))}
    edges = [(mapping[u], mapping[v]) for u, v in g.edges() if u != v]
    return from_edges(g.number_of_nodes(), edges)


@dataclass(frozen=True)
class Laplacian:
    kind: str
    matrix: np.ndarray | sp.csr_matrix
    degree: np.ndarray = field(repr=False)


LAPLACIAN_KINDS = ("unnormalized", "symmetric-normalized")


def build_laplacian(g: Graph, kind: str = "unnormalized") -> Laplacian:
    """``D - A`` or ``D^-1/2 (D - A) D^-1/2``.

    With ``D^-1/2 = 0`` at isolated nodes the normalized form has a zero row
    there, so an edgeless graph has ``L = 0`` under both kinds.
    """
    if kind not in LAPLACIAN_KINDS:
        raise InvalidParams(f"unknown Laplacian kind {kind!r}")
    a = g.adjacency
    sparse = sp.issparse(a)
    deg = np.asarray(a.sum(axis=1)).ravel().astype(float)
    if kind == "unnormalized":
        if sparse:
            mat = (sp.diags(deg) - a).tocsr()
        else:
            mat = np.diag(deg) - a.astype(float)
        return Laplacian(kind, mat, deg)

    inv_sqrt = np.zeros_like(deg)
    nz = deg > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(deg[nz])
    if sparse:
        d = sp.diags(inv_sqrt)
        mat = (sp.diags(nz.astype(float)) - d @ a @ d).tocsr()
    else:
        mat = np.diag(nz.astype(float)) - inv_sqrt[:, None] * a * inv_sqrt[None, :]
        mat = 0.5 * (mat + mat.T)
    return Laplacian(kind, mat, deg)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _check_prob(name, p):
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"{name}={p} outside [0, 1]")


def _erdos_renyi_edges(n, p, rng):
    iu = np.triu_indices(n, k=1)
    keep = rng.random(len(iu[0])) < p
    return np.stack([iu[0][keep], iu[1][keep]], axis=1)


def _barabasi_albert_edges(n, attach, rng):
    # Seed graph is a 2-clique; node t attaches to min(attach, t) distinct
    # targets drawn proportionally to degree.
    if n < 2:
        raise InvalidParams("barabasi_albert needs at least 2 nodes")
    edges = [(0, 1)]
    targets_pool = [0, 1]
    for t in range(2, n):
        k = min(attach, t)
        chosen = set()
        while len(chosen) < k:
            chosen.add(targets_pool[rng.integers(len(targets_pool))])
        for u in sorted(chosen):
            edges.append((u, t))
            targets_pool.extend((u, t))
    return np.asarray(edges)


def _geometric_edges(n, radius, rng):
    pts = rng.random((n, 2))
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    iu = np.triu_indices(n, k=1)
    keep = d2[iu] <= radius**2
    return np.stack([iu[0][keep], iu[1][keep]], axis=1)


def generate_graph(family: str, n_nodes: int, seed=None, **params) -> Graph:
    """Sample one graph from a named family; deterministic for a fixed seed.

    Parameters not given fall back to ``FAMILY_DEFAULTS``.
    """
    if family not in FAMILIES:
        raise InvalidParams(f"unknown graph family {family!r}; expected one of {FAMILIES}")
    if n_nodes < 1:
        raise InvalidParams("n_nodes must be positive")
    unknown = set(params) - set(FAMILY_DEFAULTS[family])
    if unknown:
        raise InvalidParams(f"unexpected parameters for {family}: {sorted(unknown)}")
    opts = {**FAMILY_DEFAULTS[family], **params}
    rng = _rng(seed)
    n = n_nodes

    if family == "erdos_renyi":
        _check_prob("p", opts["p"])
        edges = _erdos_renyi_edges(n, opts["p"], rng)
    elif family == "ego":
        _check_prob("p", opts["p"])
        sub = _erdos_renyi_edges(n - 1, opts["p"], rng) + 1
        hub = np.stack([np.zeros(n - 1, dtype=np.int64), np.arange(1, n)], axis=1)
        edges = np.concatenate([hub, sub.reshape(-1, 2)])
    elif family == "regular":
        r = int(opts["degree"])
        if r < 0 or r >= n or (n * r) % 2:
            raise InvalidParams(f"no {r}-regular graph on {n} nodes (need 0 <= r < N and N*r even)")
        g = nx.random_regular_graph(r, n, seed=int(rng.integers(2**31)))
        edges = np.asarray(list(g.edges()), dtype=np.int64)
    elif family == "geometric":
        if opts["radius"] < 0:
            raise InvalidParams("radius must be nonnegative")
        edges = _geometric_edges(n, opts["radius"], rng)
    elif family == "power_law":
        m = int(opts["attach"])
        _check_prob("triad_p", opts["triad_p"])
        if not 1 <= m < n:
            raise InvalidParams(f"power_law needs 1 <= attach < N, got attach={m}, N={n}")
        g = nx.powerlaw_cluster_graph(n, m, opts["triad_p"], seed=int(rng.integers(2**31)))
        edges = np.asarray(list(g.edges()), dtype=np.int64)
    else:
        m = int(opts["attach"])
        if m < 1:
            raise InvalidParams("attach must be >= 1")
        edges = _barabasi_albert_edges(n, m, rng)
    return from_edges(n, edges)


def generate_sbm(n_per_block, p_in: float, p_out: float, seed=None) -> Graph:
    """Stochastic block model with ``node_labels`` set to block ids."""
    _check_prob("p_in", p_in)
    _check_prob("p_out", p_out)
    if p_out > p_in:
        raise InvalidParams(f"p_out={p_out} exceeds p_in={p_in}")
    sizes = [int(s) for s in n_per_block]
    if not sizes or min(sizes) < 1:
        raise InvalidParams("every block needs at least one node")
    rng = _rng(seed)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = len(labels)
    iu = np.triu_indices(n, k=1)
    prob = np.where(labels[iu[0]] == labels[iu[1]], p_in, p_out)
    keep = rng.random(len(prob)) < prob
    edges = np.stack([iu[0][keep], iu[1][keep]], axis=1)
    return from_edges(n, edges, node_labels=labels)


def generate_dataset(family: str, count: int, seed=None, n_min: int = 10, n_max: int = 20,
                     feature_width: Optional[int] = None, **params) -> list[Graph]:
    """``count`` graphs with N uniform in ``[n_min, n_max]``.

    Features are identity rows zero-padded to ``feature_width`` (default
    ``n_max``) so every graph in the set shares one feature dimension.
    """
    if not 1 <= n_min <= n_max:
        raise InvalidParams(f"invalid node range [{n_min}, {n_max}]")
    rng = _rng(seed)
    width = n_max if feature_width is None else feature_width
    graphs = []
    for _ in range(count):
        n = int(rng.integers(n_min, n_max + 1))
        g = generate_graph(family, n, seed=rng, **params)
        graphs.append(g.with_features(identity_features(n, width)))
    return graphs
