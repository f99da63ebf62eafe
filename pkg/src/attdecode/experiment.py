"""Replicated simulation grids: generate, detect, score, stream to CSV."""

from __future__ import annotations

import csv
import hashlib
import itertools
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Iterable, Iterator

import numpy as np
import yaml

from .density import DensityVector, componentwise_density, fit_gmm, knn_density, mixture_density, parse_components
from .detect import run_attdecode
from .errors import EmptyInput, InputError
from .graph import degree_density, local_density
from .metrics import ari, nmi
from .simgen import SynthConfig, generate_instance

log = logging.getLogger(__name__)

METHODS = (
    "attdecode-true",
    "attdecode-knn",
    "attdecode-gmm",
    "attdecode-gmm-component",
    "decode-degree",
    "decode-local",
)

RECORD_FIELDS = [
    "n", "K", "mu", "size_mode", "replicate", "seed", "method",
    "method_seed", "nmi", "ari", "k_hat", "error",
]


@dataclass
class ExperimentSpec:
    """A grid of generator settings crossed with detection methods.

    Spec files are YAML::

        grid:
          n: [50]
          K: [5]
          mu: [0.0, 0.2, 0.4]
          size_mode: [uniform]
        replicates: 50
        methods: [attdecode-true, decode-degree, decode-local]
        seed: 1
        output: results.csv        # optional
        options:                   # all optional
          knn_k: 5
          gmm_components: "1-9"
          min_cluster_size: 1
          mixing_mode: rewire
    """

    n: list[int] = field(default_factory=lambda: [50])
    K: list[int] = field(default_factory=lambda: [5])
    mu: list[float] = field(default_factory=lambda: [0.0, 0.2, 0.4])
    size_mode: list[str] = field(default_factory=lambda: ["uniform"])
    replicates: int = 1
    methods: list[str] = field(default_factory=lambda: ["attdecode-true"])
    seed: int = 0
    output: str | None = None
    knn_k: int = 5
    gmm_components: str = "1-9"
    min_cluster_size: int = 1
    mixing_mode: str = "rewire"

    def __post_init__(self):
        if self.replicates < 1:
            raise InputError("replicates must be >= 1")
        if not (self.n and self.K and self.mu and self.size_mode):
            raise InputError("every grid axis needs at least one value")
        if not self.methods:
            raise InputError("methods must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise InputError(f"unknown methods {bad}; choose from {list(METHODS)}")

    def cells(self) -> list[tuple]:
        return list(itertools.product(self.n, self.K, self.mu, self.size_mode))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        grid = d.pop("grid", {}) or {}
        opts = d.pop("options", {}) or {}
        kw = {}
        for key in ("n", "K", "mu", "size_mode"):
            if key in grid:
                v = grid[key]
                kw[key] = list(v) if isinstance(v, (list, tuple)) else [v]
        kw.update(opts)
        kw.update(d)
        known = {f.name for f in fields(cls)}
        unknown = set(kw) - known
        if unknown:
            raise InputError(f"unknown spec keys {sorted(unknown)}")
        return cls(**kw)


def load_spec(path) -> ExperimentSpec:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise InputError(f"{path}: spec must be a mapping")
    return ExperimentSpec.from_dict(data)


def stable_seed(master: int, *parts) -> int:
    """``master`` plus a hash of ``parts`` that is stable across processes."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return (int(master) + int.from_bytes(digest[:4], "little")) % 2**32


def method_density(method: str, inst, spec: ExperimentSpec, seed: int) -> DensityVector:
    net = inst.network
    X = net.attributes
    if method == "attdecode-true":
        return DensityVector(inst.gamma_hat, "external", {"source": "true mixture density"})
    if method == "attdecode-knn":
        return knn_density(X, spec.knn_k)
    if method in ("attdecode-gmm", "attdecode-gmm-component"):
        cand = [m for m in parse_components(spec.gmm_components, net.n) if m <= net.n]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = fit_gmm(X, cand, "spherical", seed=seed)
        fn = mixture_density if method == "attdecode-gmm" else componentwise_density
        return fn(model, X)
    if method == "decode-degree":
        return degree_density(net)
    if method == "decode-local":
        return local_density(net)
    raise InputError(f"unknown method {method!r}")


def _run_job(args) -> list[dict]:
    spec, cell, rep, timing = args
    n, K, mu, size_mode = cell
    seed = stable_seed(spec.seed, n, K, mu, size_mode, rep)
    cfg = SynthConfig(n=n, K=K, size_mode=size_mode, mu=mu, seed=seed, mixing_mode=spec.mixing_mode)
    inst = generate_instance(cfg)
    rows = []
    for method in spec.methods:
        mseed = stable_seed(spec.seed, n, K, mu, size_mode, rep, method)
        row = {"n": n, "K": K, "mu": mu, "size_mode": size_mode, "replicate": rep,
               "seed": seed, "method": method, "method_seed": mseed,
               "nmi": "", "ari": "", "k_hat": "", "error": ""}
        t0 = time.perf_counter()
        try:
            delta = method_density(method, inst, spec, mseed)
            part = run_attdecode(inst.network, delta, spec.min_cluster_size)
            row["nmi"] = nmi(part.membership, inst.true_labels)
            row["ari"] = ari(part.membership, inst.true_labels)
            row["k_hat"] = part.k_hat
        except Exception as exc:  # one bad replicate must not sink the grid
            log.warning("cell %s rep %d method %s failed: %s", cell, rep, method, exc)
            row["error"] = f"{type(exc).__name__}: {exc}"
        if timing:
            row["wall_time_ms"] = round(1000 * (time.perf_counter() - t0), 3)
        rows.append(row)
    return rows


def run_experiment(spec: ExperimentSpec, workers: int = 1, timing: bool = False) -> Iterator[dict]:
    """Yield one record per (cell, replicate, method) in that order.

    Replicates of a cell may run in parallel; output order never depends on
    completion order.
    """
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for cell in spec.cells():
            jobs = [(spec, cell, rep, timing) for rep in range(spec.replicates)]
            results = pool.map(_run_job, jobs) if pool else map(_run_job, jobs)
            for rows in results:
                yield from rows
    finally:
        if pool:
            pool.shutdown()


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else v


def write_records(records: Iterable[dict], path, timing: bool = False) -> int:
    cols = RECORD_FIELDS + (["wall_time_ms"] if timing else [])
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for rec in records:
            w.writerow({k: _fmt(rec.get(k, "")) for k in cols})
            fh.flush()
            count += 1
    return count


def read_records(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for k in ("n", "K", "replicate", "k_hat"):
            if r.get(k) not in (None, ""):
                r[k] = int(r[k])
        for k in ("mu", "nmi", "ari"):
            if r.get(k) not in (None, ""):
                r[k] = float(r[k])
    return rows


def _quantiles(v: np.ndarray) -> tuple[float, float, float]:
    q = np.percentile(v, [25, 50, 75])
    return float(q[0]), float(q[1]), float(q[2])


def summarize(records: Iterable[dict]) -> list[dict]:
    """Per (n, K, mu, size_mode, method): mean, sd and quartiles of NMI and ARI.

    ``sd`` is the sample standard deviation (0 for a single record).
    Quartiles use linear interpolation between order statistics.
    """
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        if r.get("error"):
            continue
        key = (int(r["n"]), int(r["K"]), float(r["mu"]), r["size_mode"], r["method"])
        groups.setdefault(key, []).append(r)
    if not groups:
        raise EmptyInput("no usable records to summarize")
    order = {m: i for i, m in enumerate(METHODS)}
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3], order.get(k[4], 99), k[4])):
        rows = groups[key]
        row = dict(zip(("n", "K", "mu", "size_mode", "method"), key))
        row["count"] = len(rows)
        for metric in ("nmi", "ari"):
            v = np.array([float(r[metric]) for r in rows])
            q1, med, q3 = _quantiles(v)
            row[f"{metric}_mean"] = float(v.mean())
            row[f"{metric}_sd"] = float(v.std(ddof=1)) if len(v) > 1 else 0.0
            row[f"{metric}_q1"] = q1
            row[f"{metric}_median"] = med
            row[f"{metric}_q3"] = q3
        row["k_hat_mean"] = float(np.mean([float(r["k_hat"]) for r in rows]))
        out.append(row)
    return out


def write_summary(rows: list[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
