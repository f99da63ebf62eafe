"""Node-wise density estimators over the attribute space.

Three estimators are provided: inverse mean kNN distance, Gaussian mixture
density, and the component-wise variant that scores each node under its
most probable mixture component only. The mixture is fitted by EM with BIC
choosing the number of components.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree
from scipy.special import logsumexp

from .errors import DimensionMismatch, EmptyMatrix, InputError, KTooLarge, SingularCovariance

log = logging.getLogger(__name__)

KNN_EPS = 1e-12
COV_FLOOR = 1e-6
COVARIANCE_MODELS = ("spherical", "diag", "full")
ESTIMATORS = ("knn", "gmm", "gmm-component", "degree", "local", "external")


@dataclass(frozen=True, eq=False)
class DensityVector:
    """Per-node density values plus the estimator that produced them."""

    values: np.ndarray
    estimator: str = "external"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.isfinite(v).all():
            raise InputError("density values must be finite")
        if self.estimator not in ESTIMATORS:
            raise InputError(f"unknown estimator tag {self.estimator!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_values(delta) -> np.ndarray:
    if isinstance(delta, DensityVector):
        return delta.values
    v = np.asarray(delta, dtype=float).ravel()
    if not np.isfinite(v).all():
        raise InputError("density values must be finite")
    return v


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMatrix("attribute matrix is empty")
    return X


def knn_density(X, k: int = 5) -> DensityVector:
    """Inverse of the mean Euclidean distance to the ``k`` nearest other rows."""
    X = _as_matrix(X)
    n = X.shape[0]
    if X.shape[1] == 0:
        raise EmptyMatrix("attribute matrix has no columns")
    if k < 1 or k > n - 1:
        raise KTooLarge(f"k must lie in [1, {n - 1}], got {k}")
    dist, _ = cKDTree(X).query(X, k=k + 1)
    # column 0 is a zero distance: self, or a coincident duplicate (same value)
    mean_d = dist[:, 1:].mean(axis=1)
    return DensityVector(1.0 / (mean_d + KNN_EPS), "knn", {"k": k})


@dataclass(frozen=True, eq=False)
class GmmModel:
    """A fitted Gaussian mixture.

    ``covariances`` is always stored as an ``(M, p, p)`` array regardless of
    the covariance model; ``posteriors`` are the responsibilities on the
    training data.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    covariance_model: str
    log_likelihood: float
    posteriors: np.ndarray
    bic: float
    ll_trace: tuple[float, ...]
    converged: bool
    n_iter: int
    seed: int
    bic_by_m: dict = field(default_factory=dict)

    @classmethod
    def from_params(cls, weights, means, covariances, covariance_model: str = "full") -> "GmmModel":
        """Wrap known mixture parameters (no fitting; likelihood fields are NaN)."""
        weights = np.asarray(weights, dtype=float)
        means = np.asarray(means, dtype=float).reshape(len(weights), -1)
        covs = np.asarray(covariances, dtype=float).reshape(len(weights), means.shape[1], means.shape[1])
        if not np.isclose(weights.sum(), 1.0, atol=1e-9):
            raise InputError("mixture weights must sum to 1")
        return cls(weights, means, covs, covariance_model, math.nan, np.empty((0, len(weights))),
                   math.nan, (), True, 0, -1)

    @property
    def M(self) -> int:
        return len(self.weights)

    @property
    def p(self) -> int:
        return self.means.shape[1]

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.ll_trace) >= -1e-9))

    def component_log_pdf(self, X) -> np.ndarray:
        X = _as_matrix(X)
        if X.shape[1] != self.p:
            raise DimensionMismatch(f"model has p={self.p}, data has {X.shape[1]} columns")
        return _log_gauss(X, self.means, _cholesky_all(self.covariances))

    def posterior(self, X) -> np.ndarray:
        lw = self.component_log_pdf(X) + np.log(self.weights)
        return np.exp(lw - logsumexp(lw, axis=1, keepdims=True))


def n_parameters(M: int, p: int, covariance_model: str) -> int:
    cov = {"spherical": M, "diag": M * p, "full": M * p * (p + 1) // 2}[covariance_model]
    return (M - 1) + M * p + cov


def default_covariance(p: int) -> str:
    return "full" if p <= 10 else "diag"


def _cholesky_all(covs: np.ndarray) -> np.ndarray:
    out = np.empty_like(covs)
    for m, c in enumerate(covs):
        try:
            out[m] = linalg.cholesky(c, lower=True)
        except linalg.LinAlgError:
            raise SingularCovariance(f"covariance of component {m} is not positive definite") from None
    return out


def _log_gauss(X: np.ndarray, means: np.ndarray, chols: np.ndarray) -> np.ndarray:
    n, p = X.shape
    out = np.empty((n, len(means)))
    for m, (mu, L) in enumerate(zip(means, chols)):
        z = linalg.solve_triangular(L, (X - mu).T, lower=True)
        out[:, m] = -0.5 * (z * z).sum(axis=0) - np.log(np.diag(L)).sum() - 0.5 * p * math.log(2 * math.pi)
    return out


def _kmeanspp_centers(X: np.ndarray, M: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    idx = [int(rng.integers(n))]
    d2 = ((X - X[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, M):
        total = d2.sum()
        j = int(rng.choice(n, p=d2 / total)) if total > 0 else int(rng.integers(n))
        idx.append(j)
        d2 = np.minimum(d2, ((X - X[j]) ** 2).sum(axis=1))
    return X[idx]


def _m_step(X: np.ndarray, resp: np.ndarray, covariance_model: str):
    n, p = X.shape
    nk = resp.sum(axis=0) + 10 * np.finfo(float).eps
    weights = nk / nk.sum()
    means = (resp.T @ X) / nk[:, None]
    covs = np.empty((len(nk), p, p))
    for m in range(len(nk)):
        diff = X - means[m]
        if covariance_model == "full":
            c = (resp[:, m, None] * diff).T @ diff / nk[m]
            c = 0.5 * (c + c.T)
            w, v = np.linalg.eigh(c)
            covs[m] = (v * np.maximum(w, COV_FLOOR)) @ v.T
            covs[m] = 0.5 * (covs[m] + covs[m].T)
        else:
            var = (resp[:, m, None] * diff**2).sum(axis=0) / nk[m]
            if covariance_model == "spherical":
                var = np.full(p, var.mean())
            covs[m] = np.diag(np.maximum(var, COV_FLOOR))
    return weights, means, covs


def _e_step(X, weights, means, covs):
    lw = _log_gauss(X, means, _cholesky_all(covs)) + np.log(weights)
    norm = logsumexp(lw, axis=1)
    return float(norm.sum()), np.exp(lw - norm[:, None])


def _em(X, M, covariance_model, rng, max_iter, tol):
    centers = _kmeanspp_centers(X, M, rng)
    nearest = ((X[:, None, :] - centers[None]) ** 2).sum(axis=2).argmin(axis=1)
    resp = np.zeros((X.shape[0], M))
    resp[np.arange(X.shape[0]), nearest] = 1.0
    params = _m_step(X, resp, covariance_model)
    trace: list[float] = []
    converged = False
    for _ in range(max_iter):
        ll, resp = _e_step(X, *params)
        trace.append(ll)
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            converged = True
            break
        params = _m_step(X, resp, covariance_model)
    else:
        # trace[-1] belongs to the parameters before the final M-step
        ll, resp = _e_step(X, *params)
        trace.append(ll)
    return params, resp, trace, converged


def fit_gmm(
    X,
    M_candidates: Iterable[int] = range(1, 10),
    covariance_model: str | None = None,
    seed: int = 0,
    max_iter: int = 500,
    tol: float = 1e-6,
) -> GmmModel:
    """Fit a Gaussian mixture by EM for each candidate M and keep the BIC best.

    BIC is ``-2 logL + q ln n`` (lower is better). Each candidate starts from
    k-means++ seeds drawn from ``default_rng((seed, M))``, so results do not
    depend on which other candidates were tried.
    """
    X = _as_matrix(X)
    n, p = X.shape
    if p == 0:
        raise EmptyMatrix("attribute matrix has no columns")
    covariance_model = covariance_model or default_covariance(p)
    if covariance_model not in COVARIANCE_MODELS:
        raise InputError(f"unknown covariance model {covariance_model!r}")
    candidates = sorted(set(int(m) for m in M_candidates))
    if not candidates or candidates[0] < 1 or candidates[-1] > n:
        raise InputError(f"component counts must lie in [1, {n}], got {candidates}")

    best = None
    bic_by_m = {}
    for M in candidates:
        rng = np.random.default_rng((seed, M))
        params, resp, trace, converged = _em(X, M, covariance_model, rng, max_iter, tol)
        bic = -2.0 * trace[-1] + n_parameters(M, p, covariance_model) * math.log(n)
        bic_by_m[M] = bic
        if not converged:
            warnings.warn(f"EM did not converge for M={M} in {max_iter} iterations", RuntimeWarning)
        if np.any(np.diff(trace) < -1e-9):
            warnings.warn(f"EM log-likelihood decreased for M={M}", RuntimeWarning)
        log.debug("M=%d logL=%.6f bic=%.6f iters=%d", M, trace[-1], bic, len(trace))
        if best is None or bic < best[0]:
            best = (bic, M, params, resp, trace, converged)

    bic, M, (weights, means, covs), resp, trace, converged = best
    return GmmModel(
        weights=weights,
        means=means,
        covariances=covs,
        covariance_model=covariance_model,
        log_likelihood=trace[-1],
        posteriors=resp,
        bic=bic,
        ll_trace=tuple(trace),
        converged=converged,
        n_iter=len(trace),
        seed=seed,
        bic_by_m=bic_by_m,
    )


def _params(model: GmmModel, tag: str) -> dict:
    return {"M": model.M, "covariance": model.covariance_model, "seed": model.seed, "tag": tag}


def mixture_density(model: GmmModel, X) -> DensityVector:
    """Weighted sum of component pdfs at each row of ``X``."""
    lw = model.component_log_pdf(X) + np.log(model.weights)
    return DensityVector(np.exp(logsumexp(lw, axis=1)), "gmm", _params(model, "mixture"))


def componentwise_density(model: GmmModel, X) -> DensityVector:
    """Unweighted pdf of each row under its highest-posterior component.

    Ties in the posterior go to the lowest component index (``argmax``).
    """
    lp = model.component_log_pdf(X)
    best = np.argmax(lp + np.log(model.weights), axis=1)
    vals = np.exp(lp[np.arange(len(best)), best])
    return DensityVector(vals, "gmm-component", _params(model, "component"))


def parse_components(spec: str, n: int) -> list[int]:
    """Parse a component-count spec: ``"3"``, ``"1-9"``, ``"2,4,6"`` or ``"n/2"``."""
    out: list[int] = []
    for part in str(spec).replace(" ", "").split(","):
        if not part:
            continue
        if part.startswith("n/"):
            out.append(max(1, n // int(part[2:])))
        elif "-" in part:
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise InputError(f"empty component spec {spec!r}")
    return out
