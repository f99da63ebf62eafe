"""Attributed network container and the level-set primitives built on it."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .density import DensityVector, as_values
from .errors import (
    DuplicateEdge,
    InputError,
    LengthMismatch,
    NonFiniteAttribute,
    SelfLoop,
    UnknownNodeId,
)

ABSENT = -1
"""Component label carried by nodes outside an induced subgraph."""


@dataclass(frozen=True, eq=False)
class AttributedNetwork:
    """Undirected simple graph with an ``n x p`` attribute matrix.

    ``edges`` is an ``(m, 2)`` integer array with ``i < j`` on every row,
    sorted lexicographically. Instances are treated as immutable.
    """

    node_ids: tuple[str, ...]
    edges: np.ndarray
    attributes: np.ndarray

    def __post_init__(self):
        n = len(self.node_ids)
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if (edges < 0).any() or (edges >= n).any():
                raise UnknownNodeId("edge endpoint outside [0, n)")
            if (edges[:, 0] == edges[:, 1]).any():
                raise SelfLoop("self-loops are not allowed")
            edges = np.sort(edges, axis=1)
            edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
            if (np.diff(edges, axis=0) == 0).all(axis=1).any():
                raise DuplicateEdge("duplicate edge")
        attrs = np.asarray(self.attributes, dtype=float)
        if attrs.ndim == 1 and attrs.size == 0:
            attrs = np.zeros((n, 0))
        if attrs.ndim != 2 or attrs.shape[0] != n:
            raise LengthMismatch(f"attributes must have {n} rows, got shape {attrs.shape}")
        if not np.isfinite(attrs).all():
            raise NonFiniteAttribute("attribute matrix contains NaN or inf")
        edges.setflags(write=False)
        attrs.setflags(write=False)
        object.__setattr__(self, "node_ids", tuple(str(v) for v in self.node_ids))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "attributes", attrs)

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def p(self) -> int:
        return self.attributes.shape[1]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.node_ids)}

    @cached_property
    def adjacency(self) -> csr_matrix:
        """Symmetric 0/1 adjacency in CSR form (sorted column indices)."""
        n, e = self.n, self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        a = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n)).tocsr()
        a.sort_indices()
        return a

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr).astype(np.int64)


@dataclass(frozen=True, eq=False)
class NodeSubset:
    mask: np.ndarray

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @classmethod
    def from_indices(cls, n: int, idx: Iterable[int]) -> "NodeSubset":
        mask = np.zeros(n, dtype=bool)
        mask[list(idx)] = True
        return cls(mask)

    def __contains__(self, i) -> bool:
        return bool(self.mask[i])


@dataclass(frozen=True, eq=False)
class InducedSubgraph:
    parent: AttributedNetwork
    nodes: NodeSubset
    edges: np.ndarray = field(repr=False)


def build_network(
    edge_list: Iterable[tuple[str, str]],
    attribute_table: Sequence[tuple] | None = None,
) -> AttributedNetwork:
    """Build a network from id pairs and ``(id, x1, ..., xp)`` rows.

    Node indices follow the row order of ``attribute_table``. Without an
    attribute table nodes are indexed by first appearance in ``edge_list``
    and ``p = 0``.
    """
    edge_list = [(str(a), str(b)) for a, b in edge_list]
    if attribute_table is not None:
        ids: list[str] = []
        rows: list[list[float]] = []
        for row in attribute_table:
            ids.append(str(row[0]))
            rows.append([float(x) for x in row[1:]])
        if len(set(ids)) != len(ids):
            raise InputError("node ids in the attribute table are not unique")
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise InputError("attribute rows have different lengths")
        p = widths.pop() if widths else 0
        attrs = np.array(rows, dtype=float).reshape(len(ids), p)
        if not np.isfinite(attrs).all():
            raise NonFiniteAttribute("attribute table contains NaN or inf")
    else:
        ids = list(dict.fromkeys(v for e in edge_list for v in e))
        attrs = np.zeros((len(ids), 0))

    index = {v: i for i, v in enumerate(ids)}
    seen: set[tuple[int, int]] = set()
    pairs = []
    for a, b in edge_list:
        if a == b:
            raise SelfLoop(f"self-loop on node {a!r}")
        try:
            i, j = index[a], index[b]
        except KeyError as exc:
            raise UnknownNodeId(f"edge references unknown node {exc.args[0]!r}") from None
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"duplicate edge {a!r}-{b!r}")
        seen.add(key)
        pairs.append(key)
    return AttributedNetwork(tuple(ids), np.array(pairs, dtype=np.int64).reshape(-1, 2), attrs)


def read_edges_csv(path) -> list[tuple[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"source", "target"} <= set(reader.fieldnames):
            raise InputError(f"{path}: expected header 'source,target'")
        return [(row["source"], row["target"]) for row in reader]


def read_attributes_csv(path) -> list[tuple]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "id":
            raise InputError(f"{path}: expected header starting with 'id'")
        out = []
        for row in reader:
            if not row:
                continue
            try:
                out.append((row[0], *(float(x) for x in row[1:])))
            except ValueError as exc:
                raise InputError(f"{path}: {exc}") from None
        return out


def load_network(edges_path, attrs_path=None) -> AttributedNetwork:
    attrs = read_attributes_csv(attrs_path) if attrs_path else None
    return build_network(read_edges_csv(edges_path), attrs)


def write_network(net: AttributedNetwork, edges_path, attrs_path=None) -> None:
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target"])
        for i, j in net.edges:
            w.writerow([net.node_ids[i], net.node_ids[j]])
    if attrs_path is not None:
        with open(attrs_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id"] + [f"x{k + 1}" for k in range(net.p)])
            for vid, row in zip(net.node_ids, net.attributes):
                w.writerow([vid] + [repr(float(x)) for x in row])


def upper_level_set(net: AttributedNetwork, delta, lam: float) -> InducedSubgraph:
    """Subgraph induced by nodes whose density is at least ``lam``."""
    values = as_values(delta)
    if len(values) != net.n:
        raise LengthMismatch(f"density has length {len(values)}, network has {net.n} nodes")
    mask = values >= lam
    e = net.edges
    keep = mask[e[:, 0]] & mask[e[:, 1]] if len(e) else np.zeros(0, dtype=bool)
    return InducedSubgraph(net, NodeSubset(mask), e[keep])


def connected_components(sub: InducedSubgraph) -> np.ndarray:
    """Label retained nodes by component, numbered by smallest member index.

    Nodes outside the subgraph get ``ABSENT``.
    """
    n = sub.parent.n
    labels = np.full(n, ABSENT, dtype=np.int64)
    if n == 0:
        return labels
    e = sub.edges
    a = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, raw = _cc(a, directed=False)
    keep = sub.nodes.mask
    # first occurrence in index order == smallest member
    _, first = np.unique(raw[keep], return_index=True)
    order = np.argsort(first)
    remap = np.empty(len(first), dtype=np.int64)
    remap[order] = np.arange(len(first))
    _, inv = np.unique(raw[keep], return_inverse=True)
    labels[keep] = remap[inv]
    return labels


def degree_density(net: AttributedNetwork) -> DensityVector:
    return DensityVector(net.degrees().astype(float), "degree", {})


def local_density(net: AttributedNetwork) -> DensityVector:
    """Edge density of each node's closed neighbourhood.

    Counts edges among ``N[v] = {v} U neighbours(v)`` and divides by
    ``C(|N[v]|, 2)``; nodes with ``|N[v]| < 2`` score 0.
    """
    a = net.adjacency.astype(np.int64)
    deg = net.degrees()
    # triangles through v: (A^3)_vv / 2
    tri = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel() // 2
    size = deg + 1
    inside = deg + tri
    out = np.zeros(net.n)
    ok = size >= 2
    out[ok] = inside[ok] / (size[ok] * (size[ok] - 1) / 2)
    return DensityVector(out, "local", {})


__all__ = [
    "ABSENT",
    "AttributedNetwork",
    "InducedSubgraph",
    "NodeSubset",
    "build_network",
    "connected_components",
    "degree_density",
    "load_network",
    "local_density",
    "read_attributes_csv",
    "read_edges_csv",
    "upper_level_set",
    "write_network",
]
