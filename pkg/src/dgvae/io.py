"""Graph text files, encoder checkpoints and dataset loading.

Graph file layout::

    N M d
    src dst            (M lines, 0-based, each undirected edge once)
    x_1 ... x_d        (N lines, omitted when d = 0)
    node_id label      (optional N lines)
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ManifestMismatch, ParseError, ValidationError
from .graph import Graph, from_edges
from .heatts import EncoderParams, HeattsLayer
from .pipeline import Dataset

CHECKPOINT_FORMAT = "dgvae-encoder"
CHECKPOINT_VERSION = 1


def write_graph(g: Graph, path) -> None:
    edges = g.edges()
    d = g.feature_dim
    lines = [f"{g.n_nodes} {len(edges)} {d}"]
    lines += [f"{i} {j}" for i, j in edges]
    if d:
        lines += [" ".join(repr(float(v)) for v in row) for row in g.features]
    if g.node_labels is not None:
        lines += [f"{i} {int(y)}" for i, y in enumerate(g.node_labels)]
    Path(path).write_text("\n".join(lines) + "\n")


def _ints(tokens, lineno, count):
    if len(tokens) != count:
        raise ParseError(f"expected {count} integers, got {len(tokens)}", lineno)
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"non-integer token in {' '.join(tokens)!r}", lineno) from None


def read_graph(path) -> Graph:
    raw = Path(path).read_text().splitlines()
    lines = [(k + 1, ln.split()) for k, ln in enumerate(raw) if ln.strip()]
    if not lines:
        raise ParseError("empty file; expected header 'N M d'", 1)
    lineno, header = lines[0]
    n, m, d = _ints(header, lineno, 3)
    if n < 1 or m < 0 or d < 0:
        raise ParseError(f"invalid header values N={n} M={m} d={d}", lineno)
    body = lines[1:]
    need = m + (n if d else 0)
    if len(body) < need:
        at = body[-1][0] + 1 if body else lineno + 1
        raise ParseError(f"file ended early: expected {need} body lines, found {len(body)}", at)

    edges = np.array([_ints(tok, ln, 2) for ln, tok in body[:m]], dtype=np.int64).reshape(-1, 2)
    for ln, (i, j) in zip((ln for ln, _ in body[:m]), edges):
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ParseError(f"invalid edge ({i}, {j}) for N={n}", ln)
    features = None
    rest = body[m:]
    if d:
        rows = []
        for ln, tok in rest[:n]:
            if len(tok) != d:
                raise ParseError(f"expected {d} feature values, got {len(tok)}", ln)
            try:
                rows.append([float(t) for t in tok])
            except ValueError:
                raise ParseError("non-numeric feature value", ln) from None
        features = np.array(rows)
        rest = rest[n:]
    labels = None
    if rest:
        if len(rest) != n:
            raise ParseError(f"expected {n} label lines, found {len(rest)}", rest[0][0])
        labels = np.empty(n, dtype=np.int64)
        seen = set()
        for ln, tok in rest:
            node, y = _ints(tok, ln, 2)
            if not 0 <= node < n or node in seen:
                raise ParseError(f"bad or repeated node id {node}", ln)
            seen.add(node)
            labels[node] = y
    try:
        return from_edges(n, edges, features, labels)
    except ValidationError as exc:
        raise ParseError(str(exc)) from None


def _check_manifest(g: Graph, manifest: dict, num_classes: Optional[int]):
    found = {
        "nodes": g.n_nodes,
        "edges": g.n_edges,
        "features": g.feature_dim,
        "classes": None if g.node_labels is None else len(np.unique(g.node_labels)),
    }
    mismatches = {k: (manifest[k], found[k]) for k in found if k in manifest and manifest[k] != found[k]}
    if mismatches:
        raise ManifestMismatch(mismatches)


# Published statistics for the clustering benchmarks (nodes, edges, classes, features).
KNOWN_MANIFESTS = {
    "pubmed": {"nodes": 19717, "edges": 44338, "classes": 3, "features": 500},
    "citeseer": {"nodes": 3327, "edges": 4732, "classes": 6, "features": 3703},
    "wiki": {"nodes": 2405, "edges": 17981, "classes": 17, "features": 4973},
}


def load_dataset(path, format: str = "graph", manifest: Optional[dict] = None,
                 name: Optional[str] = None) -> Dataset:
    """Load one graph file, or every ``*.graph`` file in a directory.

    ``manifest`` (a dict or a JSON file path) lists expected ``nodes``,
    ``edges``, ``classes`` and ``features``; any disagreement raises
    ``ManifestMismatch``.
    """
    if format != "graph":
        raise ValidationError(f"unsupported dataset format {format!r}")
    path = Path(path)
    if isinstance(manifest, (str, Path)):
        manifest = json.loads(Path(manifest).read_text())
    if path.is_dir():
        graphs = [read_graph(p) for p in sorted(path.glob("*.graph"))]
        if not graphs:
            raise ParseError(f"no .graph files in {path}")
    else:
        graphs = [read_graph(path)]
    num_classes = None
    if len(graphs) == 1 and graphs[0].node_labels is not None:
        num_classes = int(len(np.unique(graphs[0].node_labels)))
    if manifest:
        if len(graphs) != 1:
            raise ValidationError("manifests apply to single-graph datasets")
        _check_manifest(graphs[0], manifest, num_classes)
        num_classes = manifest.get("classes", num_classes)
    return Dataset(name or path.stem, graphs, num_classes)


def save_dataset(graphs, out_dir, prefix: str = "graph") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, g in enumerate(graphs):
        p = out / f"{prefix}_{k:04d}.graph"
        write_graph(g, p)
        paths.append(p)
    return paths


def save_checkpoint(params: EncoderParams, path, extra: Optional[dict] = None) -> None:
    record = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layers": [
            {
                "name": name,
                "shape": list(layer.weight.shape),
                "s": layer.s,
                "order": layer.order,
                "activation": layer.activation,
                "weight": [float(v) for v in layer.weight.ravel(order="C")],
            }
            for name, layer in zip(EncoderParams.NAMES, params.layers)
        ],
    }
    if extra:
        record["meta"] = extra
    Path(path).write_text(json.dumps(record))


def load_checkpoint(path) -> tuple[EncoderParams, dict]:
    record = json.loads(Path(path).read_text())
    if record.get("format") != CHECKPOINT_FORMAT:
        raise ValidationError(f"{path} is not an encoder checkpoint")
    if record.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"unsupported checkpoint version {record.get('version')}")
    by_name = {layer["name"]: layer for layer in record["layers"]}
    layers = []
    for name in EncoderParams.NAMES:
        rec = by_name[name]
        w = np.array(rec["weight"], dtype=float).reshape(rec["shape"])
        layers.append(HeattsLayer(w, rec["s"], rec["order"], rec["activation"]))
    return EncoderParams(*layers), record.get("meta", {})
