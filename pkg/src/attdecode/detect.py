"""Level-set community detection driven by a node density.

The sweep visits the distinct density values from high to low. At each
level the newly admitted nodes are joined to their already-admitted
neighbours with a union-find; a component with no admitted predecessor is a
new leaf, a component absorbing two or more earlier components is a merge.
Leaves of the resulting tree are the clusters, their pre-merge extent is the
core, and the remaining nodes are attached to their densest labelled
neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .density import DensityVector, as_values
from .errors import InputError, LengthMismatch
from .graph import AttributedNetwork, NodeSubset


class Role(str, Enum):
    CORE = "core"
    MEMBER = "member"
    UNASSIGNED = "unassigned"


@dataclass(eq=False)
class TreeVertex:
    id: int
    birth_lambda: float
    members: NodeSubset
    """Nodes of the component at the level where this vertex was born."""
    extent: NodeSubset
    """Nodes of the component just before it merged (or at the end of the sweep)."""
    children: list[int] = field(default_factory=list)
    parent: int | None = None
    death_lambda: float | None = None


@dataclass(eq=False)
class ClusterTree:
    n: int
    vertices: list[TreeVertex]
    levels: np.ndarray
    min_cluster_size: int = 1

    @property
    def roots(self) -> list[TreeVertex]:
        return [v for v in self.vertices if v.parent is None]

    @property
    def root(self) -> TreeVertex | None:
        roots = self.roots
        return roots[0] if len(roots) == 1 else None

    @property
    def leaves(self) -> list[TreeVertex]:
        """Leaves ordered by birth level (high first), then smallest member."""
        leaves = [v for v in self.vertices if not v.children]
        return sorted(leaves, key=lambda v: (-v.birth_lambda, int(v.members.indices[0])))

    def to_dict(self, node_ids=None) -> list[dict]:
        def name(i):
            return node_ids[i] if node_ids is not None else int(i)

        def walk(v: TreeVertex) -> dict:
            return {
                "birth_lambda": v.birth_lambda,
                "death_lambda": v.death_lambda,
                "size": v.extent.count,
                "members": [name(i) for i in v.members.indices],
                "children": [walk(self.vertices[c]) for c in v.children],
            }

        return [walk(r) for r in self.roots]


@dataclass(eq=False)
class Partition:
    membership: np.ndarray
    roles: tuple[Role, ...]
    k_hat: int
    tree: ClusterTree
    density: DensityVector

    def clusters(self) -> dict[int, np.ndarray]:
        return {c: np.flatnonzero(self.membership == c) for c in range(1, self.k_hat + 1)}

    def cores(self) -> dict[int, np.ndarray]:
        core = np.array([r is Role.CORE for r in self.roles], dtype=bool)
        return {c: np.flatnonzero((self.membership == c) & core) for c in range(1, self.k_hat + 1)}

    def to_dict(self, net: AttributedNetwork) -> dict:
        ids = net.node_ids
        clusters = []
        for c, members in self.clusters().items():
            cores = self.cores()[c]
            clusters.append({
                "label": c,
                "cores": [ids[i] for i in cores],
                "members": [ids[i] for i in members],
            })
        return {
            "k_hat": self.k_hat,
            "clusters": clusters,
            "unassigned": [ids[i] for i in np.flatnonzero(self.membership == 0)],
            "tree": self.tree.to_dict(ids),
            "density": {ids[i]: float(v) for i, v in enumerate(self.density.values)},
            "estimator": self.density.estimator,
        }


def _check(net: AttributedNetwork, delta) -> np.ndarray:
    values = as_values(delta)
    if len(values) != net.n:
        raise LengthMismatch(f"density has length {len(values)}, network has {net.n} nodes")
    return values


def build_cluster_tree(net: AttributedNetwork, delta, min_cluster_size: int = 1) -> ClusterTree:
    """Sweep the distinct density levels downwards and record the genealogy.

    With ``min_cluster_size > 1`` a component counts as a cluster only once it
    holds that many nodes; smaller components that merge into a larger one
    are absorbed instead of producing a branch.
    """
    if min_cluster_size < 1:
        raise InputError("min_cluster_size must be >= 1")
    values = _check(net, delta)
    n = net.n
    adj = net.adjacency
    levels = np.unique(values)[::-1]

    parent = np.arange(n)
    active = np.zeros(n, dtype=bool)

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    # per union-find root: vertex ids of the components it absorbed this level
    absorbed: dict[int, set[int]] = {}
    owner: dict[int, int] = {}  # union-find root -> current vertex id
    own_nodes: list[list[int]] = []
    birth: list[float] = []
    birth_nodes: list[list[int]] = []
    children: list[list[int]] = []
    death: list[float | None] = []
    alive: list[bool] = []
    size: list[int] = []

    def new_vertex(lam: float) -> int:
        own_nodes.append([])
        birth.append(float(lam))
        birth_nodes.append([])
        children.append([])
        death.append(None)
        alive.append(True)
        size.append(0)
        return len(birth) - 1

    order = np.argsort(-values, kind="stable")
    start = 0
    for lam in levels:
        stop = start
        while stop < n and values[order[stop]] == lam:
            stop += 1
        new = np.sort(order[start:stop])
        start = stop

        for v in new:
            active[v] = True
            absorbed[v] = set()
        for v in new:
            for u in adj.indices[adj.indptr[v]:adj.indptr[v + 1]]:
                if not active[u]:
                    continue
                ru, rv = find(u), find(v)
                if ru == rv:
                    continue
                su = absorbed.pop(ru, None)
                sv = absorbed.pop(rv, None)
                su = {owner.pop(ru)} if su is None else su
                sv = {owner.pop(rv)} if sv is None else sv
                lo, hi = (ru, rv) if ru < rv else (rv, ru)
                parent[hi] = lo
                absorbed[lo] = su | sv

        groups: dict[int, list[int]] = {}
        for v in new:
            groups.setdefault(find(v), []).append(int(v))

        for root in sorted(groups):
            newcomers = groups[root]
            prev = sorted(absorbed.pop(root))
            big = [c for c in prev if size[c] >= min_cluster_size]
            small = [c for c in prev if size[c] < min_cluster_size]
            if len(big) >= 2:
                vid = new_vertex(lam)
                children[vid] = big
                for c in big:
                    death[c] = float(lam)
            elif len(big) == 1:
                vid = big[0]
            else:
                # brand-new component, or only undersized predecessors
                vid = new_vertex(lam)
            for c in small:
                own_nodes[vid].extend(own_nodes[c])
                alive[c] = False
            own_nodes[vid].extend(newcomers)
            size[vid] = sum(size[c] for c in prev) + len(newcomers)
            if not birth_nodes[vid]:
                birth_nodes[vid] = _collect(vid, own_nodes, children)
            owner[root] = vid

    # final components that never reached the size bound carry no cluster
    for vid in range(len(birth)):
        if alive[vid] and not children[vid] and size[vid] < min_cluster_size:
            alive[vid] = False

    remap = {}
    for vid in range(len(birth)):
        if alive[vid]:
            remap[vid] = len(remap)
    vertices = []
    for vid, new_id in remap.items():
        vertices.append(TreeVertex(
            id=new_id,
            birth_lambda=birth[vid],
            members=NodeSubset.from_indices(n, birth_nodes[vid]),
            extent=NodeSubset.from_indices(n, _collect(vid, own_nodes, children)),
            children=[remap[c] for c in children[vid]],
            death_lambda=death[vid],
        ))
    for v in vertices:
        for c in v.children:
            vertices[c].parent = v.id
    return ClusterTree(n, vertices, levels, min_cluster_size)


def _collect(vid: int, own_nodes: list[list[int]], children: list[list[int]]) -> list[int]:
    out: list[int] = []
    stack = [vid]
    while stack:
        v = stack.pop()
        out.extend(own_nodes[v])
        stack.extend(children[v])
    return sorted(out)


def extract_clusters(tree: ClusterTree) -> tuple[list[np.ndarray], int]:
    """Core node sets (one per leaf, in label order) and the cluster count."""
    cores = [leaf.extent.indices for leaf in tree.leaves]
    return cores, len(cores)


def assign_noncore(net: AttributedNetwork, delta, cores: list[np.ndarray]) -> tuple[np.ndarray, tuple[Role, ...]]:
    """Label cores 1..K and propagate labels to the remaining nodes.

    Unlabelled nodes are visited by decreasing density (lower index first on
    ties) and take the label of their densest labelled neighbour (lower
    label on ties). Passes repeat until nothing changes; nodes never reached
    keep label 0.
    """
    values = _check(net, delta)
    n = net.n
    membership = np.zeros(n, dtype=np.int64)
    roles = [Role.UNASSIGNED] * n
    for c, idx in enumerate(cores, start=1):
        if (membership[idx] != 0).any():
            raise InputError("core sets overlap")
        membership[idx] = c
        for i in idx:
            roles[i] = Role.CORE

    adj = net.adjacency
    pending = [int(i) for i in np.lexsort((np.arange(n), -values)) if membership[i] == 0]
    while pending:
        remaining = []
        for i in pending:
            nb = adj.indices[adj.indptr[i]:adj.indptr[i + 1]]
            nb = nb[membership[nb] > 0]
            if len(nb) == 0:
                remaining.append(i)
                continue
            top = nb[values[nb] == values[nb].max()]
            membership[i] = membership[top].min()
            roles[i] = Role.MEMBER
        if len(remaining) == len(pending):
            break
        pending = remaining
    return membership, tuple(roles)


def run_attdecode(net: AttributedNetwork, delta, min_cluster_size: int = 1) -> Partition:
    """Detect communities from a node density (attribute-based or structural)."""
    if not isinstance(delta, DensityVector):
        delta = DensityVector(as_values(delta), "external", {})
    tree = build_cluster_tree(net, delta, min_cluster_size)
    cores, k_hat = extract_clusters(tree)
    membership, roles = assign_noncore(net, delta, cores)
    return Partition(membership, roles, k_hat, tree, delta)
