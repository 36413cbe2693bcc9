"""Two-stage retrieval: encoding dot-product candidates, then exact rerank.

An FdeIndex holds one encoding per document, stored dense or compressed
with product quantization, plus a handle to the raw token embeddings for
reranking. Retrieval encodes the query, asks a MIPS backend for the
k_candidates documents with the largest (asymmetric) dot product, and
reranks those candidates with exact Chamfer similarity.

The shipped backend is an exact scan; anything implementing
``search(query_values, k) -> [(doc_id, dot), ...]`` can be swapped in.

Ball carving optionally shrinks the query before reranking: query tokens
are greedily grouped at a dot-product threshold tau and each group is
replaced by its vector sum, which preserves Chamfer scores for duplicate
tokens exactly and approximates them for near-duplicates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chamfer import chamfer
from .encoding import Fde, FdeConfig, config_fingerprint, fde_dim, generate_query_fdes, generate_doc_fdes
from .pq import PqCodebook, pq_asymmetric_dots_many, pq_encode_many, pq_train
from .util import as_matrix

DEFAULT_CARVE_TAU = 0.7  # recall is flat above this threshold; rerank cost is not


@dataclass(frozen=True)
class PqSpec:
    """Compression request for build_index: c centers per group of g dims."""

    c: int = 256
    g: int = 8


@dataclass
class RetrievalResult:
    """Reranked output of one query."""

    ranking: list  # [(doc_id, chamfer_score)] best first, ties by ascending id
    candidates_retrieved: int
    timings: dict = field(default_factory=dict)  # seconds: fde_gen, mips, rerank


@dataclass(frozen=True, eq=False)
class CarvedQuery:
    """Query tokens grouped at threshold tau; one sum vector per group."""

    vectors: np.ndarray  # (k, d) group sums
    members: tuple  # tuple of tuples of original token indices

    @property
    def num_clusters(self) -> int:
        return self.vectors.shape[0]


class ExactScanBackend:
    """Dense MIPS by scanning every stored encoding."""

    def __init__(self, doc_ids: np.ndarray, fdes: np.ndarray):
        self.doc_ids = doc_ids
        self.fdes = fdes

    def search(self, query_values: np.ndarray, k: int):
        dots = self.fdes.astype(np.float64, copy=False) @ np.asarray(query_values, dtype=np.float64)
        return _top_by_dot(self.doc_ids, dots, k)


class PqScanBackend:
    """MIPS over product-quantized encodings via asymmetric dots."""

    def __init__(self, doc_ids: np.ndarray, codebook: PqCodebook, codes: np.ndarray):
        self.doc_ids = doc_ids
        self.codebook = codebook
        self.codes = codes

    def search(self, query_values: np.ndarray, k: int):
        dots = pq_asymmetric_dots_many(self.codebook, self.codes, np.asarray(query_values, dtype=np.float64))
        return _top_by_dot(self.doc_ids, dots, k)


def _top_by_dot(ids: np.ndarray, dots: np.ndarray, k: int):
    order = np.lexsort((ids, -dots))[: min(k, len(ids))]
    return [(int(ids[i]), float(dots[i])) for i in order]


class FdeIndex:
    """Immutable searchable collection of document encodings."""

    def __init__(self, doc_ids, config: FdeConfig, dense: np.ndarray | None = None,
                 codebook: PqCodebook | None = None, codes: np.ndarray | None = None,
                 corpus: Sequence | None = None):
        self.doc_ids = np.asarray(doc_ids, dtype=np.int64)
        if len(set(self.doc_ids.tolist())) != len(self.doc_ids):
            raise ValueError("doc ids must be unique")
        self.config = config
        self.fingerprint = config_fingerprint(config)
        if (dense is None) == (codebook is None):
            raise ValueError("index stores either dense encodings or codes+codebook, exactly one")
        if codebook is not None and (codes is None or codes.shape[0] != len(self.doc_ids)):
            raise ValueError("compressed index needs one code row per document")
        self.dense = dense
        self.codebook = codebook
        self.codes = codes
        self.corpus = list(corpus) if corpus is not None else None
        self._pos = {int(d): i for i, d in enumerate(self.doc_ids)}
        if self.dense is not None:
            self.backend = ExactScanBackend(self.doc_ids, self.dense)
        else:
            self.backend = PqScanBackend(self.doc_ids, self.codebook, self.codes)

    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def fde_dim(self) -> int:
        return fde_dim(self.config)

    @property
    def payload_bytes_per_doc(self) -> int:
        """Bytes of encoding payload per document (dense f32 or code bytes)."""
        if self.dense is not None:
            return 4 * self.fde_dim
        return self.codebook.code_bytes

    def attach_corpus(self, corpus: Sequence) -> None:
        """Attach raw token embeddings (aligned with doc_ids) for reranking."""
        if len(corpus) != self.num_docs:
            raise ValueError(f"corpus has {len(corpus)} documents, index has {self.num_docs}")
        self.corpus = list(corpus)

    def doc_matrix(self, doc_id: int) -> np.ndarray:
        if self.corpus is None:
            raise ValueError("index has no corpus attached; reranking needs the raw embeddings")
        return self.corpus[self._pos[int(doc_id)]]


def build_index(corpus: Sequence, config: FdeConfig, pq: PqSpec | None = None,
                doc_ids: Sequence[int] | None = None) -> FdeIndex:
    """Encode every document and assemble a searchable index.

    Documents are encoded with empty-cluster filling as configured
    (enabled by default). When a PqSpec is given, a codebook is trained on
    the document encodings and only codes are kept.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    mats = [as_matrix(p) for p in corpus]
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"corpus has mixed dimensions: {sorted(dims)}")
    if doc_ids is None:
        doc_ids = range(len(mats))
    fdes = generate_doc_fdes(mats, config).astype(np.float32)
    if pq is None:
        return FdeIndex(doc_ids, config, dense=fdes, corpus=mats)
    codebook = pq_train(fdes, c=pq.c, g=pq.g, seed=config.seed)
    codes = pq_encode_many(codebook, fdes)
    return FdeIndex(doc_ids, config, codebook=codebook, codes=codes, corpus=mats)


def mips_search(index: FdeIndex, query_fde, k_candidates: int):
    """Top candidates by encoding dot product, ties by ascending doc id."""
    if k_candidates < 1:
        raise ValueError(f"k_candidates must be >= 1, got {k_candidates}")
    values = query_fde
    if isinstance(query_fde, Fde):
        if query_fde.fingerprint != index.fingerprint:
            raise ValueError("query encoding fingerprint does not match the index; regenerate with the index config")
        values = query_fde.values
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (index.fde_dim,):
        raise ValueError(f"query encoding has shape {values.shape}, index stores dimension {index.fde_dim}")
    return index.backend.search(values, k_candidates)


def ball_carve(Q, tau: float) -> CarvedQuery:
    """Greedy grouping of query tokens at dot-product threshold tau.

    Walks tokens in ascending index order; each still-unclustered token
    absorbs every later unclustered token whose dot product with it is at
    least tau. Each group contributes the sum of its members, so the total
    of all output vectors equals the total of the input rows.
    """
    X = as_matrix(Q)
    m = X.shape[0]
    unused = np.ones(m, dtype=bool)
    groups: list[tuple[int, ...]] = []
    for i in range(m):
        if not unused[i]:
            continue
        unused[i] = False
        members = [i]
        if unused.any():
            rest = np.flatnonzero(unused)
            close = rest[(X[rest] @ X[i]) >= tau]
            members.extend(int(j) for j in close)
            unused[close] = False
        groups.append(tuple(members))
    vectors = np.vstack([X[list(g)].sum(axis=0) for g in groups])
    return CarvedQuery(vectors=vectors, members=tuple(groups))


def query(index: FdeIndex, Q, k_candidates: int, final_k: int,
          carve_tau: float | None = None) -> RetrievalResult:
    """Encode Q, over-retrieve k_candidates by dot product, rerank exactly.

    Reranking scores candidates with Chamfer similarity on the raw corpus
    embeddings, using the ball-carved query when carve_tau is given.
    Returns the final_k best candidates.
    """
    if final_k < 1 or final_k > k_candidates:
        raise ValueError(f"need 1 <= final_k <= k_candidates, got final_k={final_k}, k_candidates={k_candidates}")
    t0 = time.perf_counter()
    qvals = generate_query_fdes([Q], index.config)[0]
    t1 = time.perf_counter()
    candidates = index.backend.search(qvals, k_candidates)
    t2 = time.perf_counter()
    rerank_q = ball_carve(Q, carve_tau).vectors if carve_tau is not None else Q
    scored = [(doc_id, chamfer(rerank_q, index.doc_matrix(doc_id))) for doc_id, _ in candidates]
    scored.sort(key=lambda t: (-t[1], t[0]))
    t3 = time.perf_counter()
    return RetrievalResult(
        ranking=scored[:final_k],
        candidates_retrieved=len(candidates),
        timings={"fde_gen": t1 - t0, "mips": t2 - t1, "rerank": t3 - t2},
    )


def batch_query(index: FdeIndex, queries: Sequence, k_candidates: int, final_k: int,
                carve_tau: float | None = None, workers: int = 0) -> list[RetrievalResult]:
    """Run query() over many queries; workers > 0 uses a thread pool.

    Results are positionally aligned with the input and independent of the
    degree of parallelism.
    """
    if workers and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda q: query(index, q, k_candidates, final_k, carve_tau), queries))
    return [query(index, q, k_candidates, final_k, carve_tau) for q in queries]
