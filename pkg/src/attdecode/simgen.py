"""Synthetic attributed networks: degree-corrected SBM with attribute-driven hubs.

Nodes draw a community, then a 2-D attribute from that community's
spherical Gaussian. The true mixture density of each attribute sets the
node's degree parameter, within-community edges are Bernoulli with
probability equal to the product of degree parameters, and a degree-weighted
share of each node's edges is then moved across communities.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .graph import AttributedNetwork

log = logging.getLogger(__name__)

SIZE_MODES = ("uniform", "dirichlet")
MIXING_MODES = ("rewire", "add")


@dataclass(frozen=True)
class SynthConfig:
    n: int = 50
    K: int = 5
    size_mode: str = "uniform"
    mu: float = 0.0
    seed: int = 0
    sigma: float = 1.0
    radius: float = 10.0
    means: tuple | None = None
    mixing_mode: str = "rewire"

    def __post_init__(self):
        if self.K < 1:
            raise InputError("K must be >= 1")
        if not 0 <= self.mu < 1:
            raise InputError("mu must lie in [0, 1)")
        if self.sigma <= 0:
            raise InputError("sigma must be positive")
        if self.size_mode not in SIZE_MODES:
            raise InputError(f"size_mode must be one of {SIZE_MODES}")
        if self.mixing_mode not in MIXING_MODES:
            raise InputError(f"mixing_mode must be one of {MIXING_MODES}")
        if self.means is not None and len(self.means) != self.K:
            raise InputError("need exactly K mean vectors")

    def component_means(self) -> np.ndarray:
        if self.means is not None:
            return np.asarray(self.means, dtype=float)
        angle = 2 * np.pi * np.arange(self.K) / self.K
        return self.radius * np.column_stack([np.cos(angle), np.sin(angle)])


@dataclass(eq=False)
class SynthInstance:
    network: AttributedNetwork
    true_labels: np.ndarray
    tau: np.ndarray
    gamma_hat: np.ndarray
    delta: np.ndarray
    realized_mixing: np.ndarray
    node_mixing: np.ndarray
    intra_degree: np.ndarray
    skipped: int
    config: SynthConfig = field(repr=False)

    @property
    def rho_min(self) -> float:
        return rho_min(self.network.n)


def rho_min(n: int) -> float:
    return 5.0 * math.log(n) / n


def sample_memberships(n: int, K: int, size_mode: str = "uniform", seed=None):
    """Community proportions and i.i.d. labels in ``1..K``."""
    if n < K:
        warnings.warn(f"n={n} < K={K}: some communities will be empty", RuntimeWarning)
    rng = np.random.default_rng(seed)
    if size_mode == "uniform":
        tau = np.full(K, 1.0 / K)
    elif size_mode == "dirichlet":
        tau = rng.dirichlet(np.ones(K))
    else:
        raise InputError(f"unknown size_mode {size_mode!r}")
    labels = rng.choice(K, size=n, p=tau) + 1
    return labels.astype(np.int64), tau


def mixture_pdf(X: np.ndarray, tau: np.ndarray, means: np.ndarray, sigma: float) -> np.ndarray:
    """Spherical Gaussian mixture density at each row of ``X``."""
    p = X.shape[1]
    d2 = ((X[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    comp = np.exp(-0.5 * d2 / sigma**2) / (2 * np.pi * sigma**2) ** (p / 2)
    return comp @ tau


def sample_attributes(labels, config: SynthConfig, tau=None, seed=None):
    """Draw ``x_i ~ N(mean_{q_i}, sigma^2 I)`` and the true mixture density."""
    labels = np.asarray(labels)
    means = config.component_means()
    if tau is None:
        tau = np.full(config.K, 1.0 / config.K)
    rng = np.random.default_rng(seed)
    X = means[labels - 1] + config.sigma * rng.standard_normal((len(labels), means.shape[1]))
    return X, mixture_pdf(X, np.asarray(tau), means, config.sigma)


def delta_transform(gamma_hat, n: int | None = None) -> np.ndarray:
    """Exponential amplification, min-max rescaling, then the ``rho_min`` floor."""
    g = np.asarray(gamma_hat, dtype=float)
    n = len(g) if n is None else n
    star = np.exp(g / g.mean())
    lo, hi = star.min(), star.max()
    if hi == lo:
        return np.ones_like(g)
    d = (star - lo) / (hi - lo)
    r = rho_min(n)
    return d * (1 - r) + r


def generate_intra_edges(labels, delta, seed=None) -> np.ndarray:
    """Independent within-community edges with probability ``delta_i * delta_j``."""
    labels = np.asarray(labels)
    delta = np.asarray(delta, dtype=float)
    rng = np.random.default_rng(seed)
    i, j = np.triu_indices(len(labels), k=1)
    same = labels[i] == labels[j]
    i, j = i[same], j[same]
    draw = rng.random(len(i)) < delta[i] * delta[j]
    return np.column_stack([i[draw], j[draw]]).astype(np.int64)


def mixing_targets(edges, labels, mu: float):
    """Node-specific mixing rates and the rounded external-edge counts.

    Weights ``mean community degree / degree`` are divided by their maximum
    and rescaled so the mean rate over nodes with edges equals ``mu``.
    """
    labels = np.asarray(labels)
    n = len(labels)
    edges = np.asarray(edges).reshape(-1, 2)
    deg = np.bincount(edges.ravel(), minlength=n).astype(float)
    w = np.zeros(n)
    for c in np.unique(labels):
        idx = labels == c
        dbar = deg[idx].mean()
        has = idx & (deg > 0)
        w[has] = dbar / deg[has]
    mu_i = np.zeros(n)
    if mu > 0 and w.max() > 0:
        wt = w / w.max()
        mu_i = np.minimum(wt * mu / wt[deg > 0].mean(), 1.0)
    return mu_i, np.rint(mu_i * deg).astype(np.int64), deg.astype(np.int64)


def _pick(rng, items, deficit):
    items = list(items)
    hungry = [x for x in items if deficit(x) > 0]
    pool = hungry or items
    return pool[int(rng.integers(len(pool)))]


def apply_mixing(edges, labels, mu: float, seed=None, mode: str = "rewire"):
    """Move (or add) edges across communities to reach the per-node targets.

    ``rewire`` performs double-edge swaps ``(i,j),(k,l) -> (i,k),(j,l)`` with
    ``k`` in another community, which keeps every degree unchanged; ``add``
    inserts new cross-community edges instead. Nodes are visited in random
    order; endpoints still short of their target are preferred. Returns
    ``(edges, realized_mixing, mu_i, skipped)``.
    """
    labels = np.asarray(labels)
    n = len(labels)
    rng = np.random.default_rng(seed)
    mu_i, target, _ = mixing_targets(edges, labels, mu)
    adj = [set() for _ in range(n)]
    for a, b in np.asarray(edges).reshape(-1, 2):
        adj[a].add(int(b))
        adj[b].add(int(a))
    ext = np.zeros(n, dtype=np.int64)
    skipped = 0

    def deficit(x):
        return target[x] - ext[x]

    def link(a, b):
        adj[a].add(b)
        adj[b].add(a)

    def unlink(a, b):
        adj[a].discard(b)
        adj[b].discard(a)

    comms = {c: np.flatnonzero(labels == c) for c in np.unique(labels)}
    others = {c: np.flatnonzero(labels != c) for c in comms}

    for i in rng.permutation(n):
        i = int(i)
        while deficit(i) > 0:
            ci = labels[i]
            if mode == "add":
                cands = [int(k) for k in others[ci] if k not in adj[i]]
                if not cands:
                    skipped += deficit(i)
                    break
                k = _pick(rng, cands, deficit)
                link(i, k)
                ext[i] += 1
                ext[k] += 1
                continue
            intra = [j for j in adj[i] if labels[j] == ci]
            if not intra:
                skipped += deficit(i)
                break
            j = _pick(rng, sorted(intra), deficit)
            cands = [int(k) for k in others[ci] if k not in adj[i]]
            ls: list[int] = []
            while cands:
                k = _pick(rng, cands, deficit)
                ls = sorted(l for l in adj[k] if labels[l] == labels[k] and l not in adj[j])
                if ls:
                    break
                cands.remove(k)
            if not ls:
                skipped += deficit(i)
                break
            l = _pick(rng, ls, deficit)
            unlink(i, j)
            unlink(k, l)
            link(i, k)
            link(j, l)
            for x in (i, j, k, l):
                ext[x] += 1

    out = np.array(sorted((a, b) for a in range(n) for b in adj[a] if a < b), dtype=np.int64).reshape(-1, 2)
    return out, realized_mixing(out, labels), mu_i, skipped


def realized_mixing(edges, labels) -> np.ndarray:
    """Fraction of each node's edges that leave its community (0 if isolated)."""
    labels = np.asarray(labels)
    n = len(labels)
    edges = np.asarray(edges).reshape(-1, 2)
    deg = np.bincount(edges.ravel(), minlength=n)
    cross = labels[edges[:, 0]] != labels[edges[:, 1]]
    ext = np.bincount(edges[cross].ravel(), minlength=n)
    out = np.zeros(n)
    out[deg > 0] = ext[deg > 0] / deg[deg > 0]
    return out


def generate_instance(config: SynthConfig) -> SynthInstance:
    s_memb, s_attr, s_edge, s_mix = np.random.SeedSequence(config.seed).spawn(4)
    labels, tau = sample_memberships(config.n, config.K, config.size_mode, s_memb)
    X, gamma_hat = sample_attributes(labels, config, tau, s_attr)
    delta = delta_transform(gamma_hat, config.n)
    intra = generate_intra_edges(labels, delta, s_edge)
    intra_deg = np.bincount(intra.ravel(), minlength=config.n)
    edges, mixing, mu_i, skipped = apply_mixing(intra, labels, config.mu, s_mix, config.mixing_mode)
    ids = tuple(f"v{i}" for i in range(config.n))
    net = AttributedNetwork(ids, edges, X)
    log.debug("generated n=%d edges=%d skipped=%d", config.n, len(edges), skipped)
    return SynthInstance(net, labels, tau, gamma_hat, delta, mixing, mu_i, intra_deg, skipped, config)


def write_truth(inst: SynthInstance, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "label", "gamma_hat", "delta"])
        for vid, q, g, d in zip(inst.network.node_ids, inst.true_labels, inst.gamma_hat, inst.delta):
            w.writerow([vid, int(q), repr(float(g)), repr(float(d))])
