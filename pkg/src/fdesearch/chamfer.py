"""Exact Chamfer / normalized Chamfer similarity and a brute-force top-k.

Chamfer similarity between two sets of vectors Q and P is

    sum over q in Q of  max over p in P of  <q, p>

i.e. every query token is matched to its best document token and the
winning inner products are summed (also known as MaxSim). It is
asymmetric in its arguments. ``nchamfer`` divides by |Q|, which keeps the
value in [-1, 1] for unit-norm rows and does not change document ranking
for a fixed query.

Everything in this module is exact and deliberately simple; it is the
ground-truth reference that the approximate encoding pipeline is measured
against. Scores are accumulated in float64 regardless of input dtype.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .util import as_matrix


class MultiVector:
    """One query's or document's set of token embeddings.

    Thin wrapper over an (m, d) array. Most functions in this package also
    accept a bare ndarray; the wrapper exists to carry the ``normalized``
    flag and to validate shape once at the I/O boundary.
    """

    __slots__ = ("data", "normalized")

    def __init__(self, data, normalized: bool = False):
        arr = np.asarray(data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"MultiVector needs an (m, d) matrix with m,d >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("MultiVector entries must be finite")
        if normalized:
            norms = np.linalg.norm(arr.astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-4):
                worst = float(np.max(np.abs(norms - 1.0)))
                raise ValueError(f"normalized MultiVector has a row with |norm-1| = {worst:.2e} > 1e-4")
        self.data = arr
        self.normalized = bool(normalized)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __repr__(self) -> str:
        return f"MultiVector(rows={self.rows}, dim={self.dim}, normalized={self.normalized})"


def chamfer(Q, P) -> float:
    """Sum over rows of Q of the max inner product against rows of P."""
    q = as_matrix(Q)
    p = as_matrix(P)
    if q.shape[1] != p.shape[1]:
        raise ValueError(f"dimension mismatch: Q has d={q.shape[1]}, P has d={p.shape[1]}")
    sims = q @ p.T
    return float(sims.max(axis=1).sum())


def nchamfer(Q, P) -> float:
    """chamfer(Q, P) divided by the number of rows of Q."""
    q = as_matrix(Q)
    return chamfer(q, P) / q.shape[0]


def brute_force_topk(Q, corpus: Sequence, k: int, doc_ids: Sequence[int] | None = None):
    """Exact Chamfer nearest neighbors of Q over a corpus.

    Returns the min(k, n) highest-scoring documents as (doc_id, score)
    pairs, sorted by descending score with ties broken by ascending
    doc_id. Slow by design: every document is scored.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(corpus)
    if n == 0:
        raise ValueError("corpus is empty")
    if doc_ids is None:
        doc_ids = range(n)
    ids = [int(i) for i in doc_ids]
    if len(ids) != n:
        raise ValueError(f"got {len(ids)} doc ids for {n} documents")
    scored = [(ids[i], chamfer(Q, corpus[i])) for i in range(n)]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[: min(k, n)]
