"""Partition agreement: normalised mutual information and adjusted Rand index."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyLabeling, LengthMismatch


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(a, b) -> ContingencyTable:
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    if len(a) != len(b):
        raise LengthMismatch(f"labelings have lengths {len(a)} and {len(b)}")
    if len(a) == 0:
        raise EmptyLabeling("labelings are empty")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    counts = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(counts, (ia, ib), 1)
    return ContingencyTable(counts)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return -math.fsum(p * np.log(p))


def nmi(a, b) -> float:
    """``2 I(A;B) / (H(A) + H(B))``; 1 when both labelings are constant.

    Label 0 is an ordinary cluster here (unassigned nodes are not dropped).
    """
    t = contingency(a, b)
    n = t.total
    ha, hb = _entropy(t.row_sums, n), _entropy(t.col_sums, n)
    if ha + hb == 0.0:
        return 1.0
    c = t.counts
    nz = c > 0
    outer = np.outer(t.row_sums, t.col_sums)
    # fsum is order-independent, which keeps nmi(a, b) == nmi(b, a) exactly
    mi = math.fsum(c[nz] / n * np.log(c[nz] * n / outer[nz]))
    return float(min(max(2.0 * mi / (ha + hb), 0.0), 1.0))


def _pairs(x: np.ndarray) -> float:
    x = x.astype(float)
    return math.fsum((x * (x - 1) / 2).ravel())


def ari(a, b) -> float:
    """Hubert-Arabie adjusted Rand index."""
    t = contingency(a, b)
    n = t.total
    index = _pairs(t.counts)
    sa, sb = _pairs(t.row_sums), _pairs(t.col_sums)
    total_pairs = n * (n - 1) / 2
    expected = sa * sb / total_pairs if total_pairs else 0.0
    maximum = 0.5 * (sa + sb)
    if maximum == expected:
        # only reachable when both partitions coincide (both trivial or both singletons)
        same = t.counts.shape[0] == t.counts.shape[1] == int((t.counts > 0).sum())
        return 1.0 if same else 0.0
    return float((index - expected) / (maximum - expected))
