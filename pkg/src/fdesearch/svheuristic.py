"""Single-vector heuristic baseline for multi-vector retrieval.

The classic workaround for Chamfer-style retrieval: pool every document
token into one flat index, fetch the k nearest tokens for each query
token by inner product, and read candidate documents off the owners of
those tokens. Candidates are ordered rank-major: all rank-1 hits for
query tokens 1..m, then all rank-2 hits, and so on. Optionally duplicate
document ids are dropped keeping the first occurrence.

The token search is an exact scan on purpose: the baseline's cost model
is "floats touched", which the exact scan makes explicit -- every query
token reads all tokens times d floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .util import as_matrix


@dataclass(eq=False)
class TokenIndex:
    """All corpus tokens stacked flat, with per-token document ownership."""

    tokens: np.ndarray  # (total_tokens, d)
    owners: np.ndarray  # (total_tokens,) doc id per token
    floats_scanned: int = field(default=0, repr=False)  # cumulative scan cost

    @property
    def num_tokens(self) -> int:
        return self.tokens.shape[0]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]

    def scan_cost(self, num_query_vectors: int) -> int:
        """Floats an exact scan touches for a query with that many tokens."""
        return int(num_query_vectors) * self.num_tokens * self.dim


def build_token_index(corpus: Sequence, doc_ids: Sequence[int] | None = None) -> TokenIndex:
    """Stack every document's tokens and remember which document owns each."""
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    mats = [as_matrix(p) for p in corpus]
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"corpus has mixed dimensions: {sorted(dims)}")
    if doc_ids is None:
        doc_ids = range(len(mats))
    ids = [int(i) for i in doc_ids]
    owners = np.concatenate([np.full(m.shape[0], ids[j], dtype=np.int64) for j, m in enumerate(mats)])
    return TokenIndex(tokens=np.vstack(mats), owners=owners)


def sv_candidates(Q, index: TokenIndex, k_per_query: int, dedup: bool) -> list[int]:
    """Ordered candidate doc ids for one query.

    For each query token, the k_per_query nearest corpus tokens by inner
    product (exact scan; ties go to the lower token position). The hits
    are interleaved rank-major and mapped to owning doc ids. With dedup,
    later repeats of a doc id are removed, keeping the first occurrence.
    k_per_query larger than the token count is clamped.
    """
    if k_per_query < 1:
        raise ValueError(f"k_per_query must be >= 1, got {k_per_query}")
    Qa = as_matrix(Q)
    if Qa.shape[1] != index.dim:
        raise ValueError(f"dimension mismatch: query tokens have d={Qa.shape[1]}, index has d={index.dim}")
    k = min(k_per_query, index.num_tokens)
    dots = Qa @ index.tokens.astype(np.float64, copy=False).T  # (m, total_tokens)
    index.floats_scanned += index.scan_cost(Qa.shape[0])
    # stable sort of -dots: equal dots keep ascending token position
    top = np.argsort(-dots, axis=1, kind="stable")[:, :k]  # (m, k)
    interleaved = index.owners[top.T.ravel()]  # rank-major: rank 1 for all tokens, then rank 2, ...
    if not dedup:
        return [int(d) for d in interleaved]
    seen: set[int] = set()
    out: list[int] = []
    for d in interleaved:
        d = int(d)
        if d not in seen:
            seen.add(d)
            out.append(d)
    return out
