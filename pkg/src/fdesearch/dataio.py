"""Binary and text artifact formats.

* ``.mvec``: multi-vector embeddings. Header: magic ``MVEC``, version u32,
  dim u32, count u64. Per record: id u64, num_tokens u32, then
  num_tokens*dim little-endian float32 values.
* index file: magic ``MVIX``, version u32, a length-prefixed JSON header
  (encoding config, fingerprint, storage kind, shapes), doc ids as u64,
  optional k-means partition centers (f64), then the payload: dense f32
  encodings, or a PQ codebook (f64 centers + u16 effective center counts)
  followed by u8 codes.
* qrels: tab-separated ``query_id<TAB>doc_id<TAB>grade`` lines.
* run: tab-separated ``query_id<TAB>doc_id<TAB>rank<TAB>score`` lines;
  ``#`` lines carry the resolved configuration that produced the run.
* config: flat ``key=value`` text.

Binary readers validate magic/version and report truncation with byte
offsets. write-then-read round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .encoding import FdeConfig, config_fingerprint
from .engine import FdeIndex
from .partition import KMeansPartitioner
from .pq import PqCodebook

MVEC_MAGIC = b"MVEC"
INDEX_MAGIC = b"MVIX"
FORMAT_VERSION = 1


class _Reader:
    """Byte cursor with offset-aware truncation errors."""

    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.off = 0
        self.path = str(path)

    def take(self, n: int, what: str) -> bytes:
        if self.off + n > len(self.buf):
            raise ValueError(
                f"{self.path}: truncated file reading {what}: need {n} bytes at offset "
                f"{self.off}, only {len(self.buf) - self.off} remain")
        out = self.buf[self.off:self.off + n]
        self.off += n
        return out

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        dt = np.dtype(dtype)
        raw = self.take(dt.itemsize * count, what)
        return np.frombuffer(raw, dtype=dt).copy()

    def expect_magic(self, magic: bytes) -> None:
        got = self.take(len(magic), "magic")
        if got != magic:
            raise ValueError(f"{self.path}: bad magic {got!r} at offset 0: expected {magic!r}")

    def expect_version(self) -> None:
        v = self.u32("version")
        if v != FORMAT_VERSION:
            raise ValueError(f"{self.path}: unsupported format version {v} at offset 4: expected {FORMAT_VERSION}")

    def done(self) -> None:
        if self.off != len(self.buf):
            raise ValueError(f"{self.path}: {len(self.buf) - self.off} unexpected trailing bytes at offset {self.off}")


def write_mvec(path, records: Sequence) -> None:
    """Write (id, matrix) records; all matrices must share one dimension."""
    if len(records) == 0:
        raise ValueError("no records to write")
    mats = [np.asarray(getattr(m, "data", m)) for _, m in records]
    dims = {m.shape[1] for m in mats}
    if len(dims) != 1:
        raise ValueError(f"records have mixed dimensions: {sorted(dims)}")
    dim = dims.pop()
    parts = [MVEC_MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", dim),
             struct.pack("<Q", len(records))]
    for (doc_id, _), mat in zip(records, mats):
        if mat.shape[0] < 1:
            raise ValueError(f"record {doc_id} has no tokens")
        parts.append(struct.pack("<QI", int(doc_id), mat.shape[0]))
        parts.append(np.ascontiguousarray(mat, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_mvec(path, normalize: bool = False) -> list:
    """Read (id, float32 matrix) records; normalize divides rows by their norm."""
    rd = _Reader(Path(path).read_bytes(), path)
    rd.expect_magic(MVEC_MAGIC)
    rd.expect_version()
    dim = rd.u32("dimension")
    count = rd.u64("record count")
    if dim < 1:
        raise ValueError(f"{path}: dimension must be >= 1, got {dim}")
    records = []
    for i in range(count):
        doc_id = rd.u64(f"record {i} id")
        ntok = rd.u32(f"record {i} token count")
        if ntok < 1:
            raise ValueError(f"{path}: record {i} (id {doc_id}) has num_tokens={ntok}, must be >= 1")
        mat = rd.array("<f4", ntok * dim, f"record {i} values").reshape(ntok, dim)
        if normalize:
            norms = np.linalg.norm(mat.astype(np.float64), axis=1, keepdims=True)
            if np.any(norms == 0):
                raise ValueError(f"{path}: record {i} (id {doc_id}) has a zero row; cannot normalize")
            mat = (mat / norms).astype(np.float32)
        records.append((doc_id, mat))
    rd.done()
    return records


def read_text_embeddings(path) -> list:
    """One-way text import: each line ``id v1 v2 ... vd``.

    Consecutive lines sharing an id form one document, in line order.
    """
    records = []
    cur_id, cur_rows = None, []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                doc_id = int(parts[0])
                row = [float(x) for x in parts[1:]]
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: expected 'id float float ...': {e}") from None
            if not row:
                raise ValueError(f"{path}:{lineno}: no values after the id")
            if doc_id != cur_id and cur_id is not None:
                records.append((cur_id, np.asarray(cur_rows, dtype=np.float32)))
                cur_rows = []
            cur_id = doc_id
            cur_rows.append(row)
    if cur_id is not None:
        records.append((cur_id, np.asarray(cur_rows, dtype=np.float32)))
    if not records:
        raise ValueError(f"{path}: no embeddings found")
    dims = {m.shape[1] for _, m in records}
    if len(dims) != 1:
        raise ValueError(f"{path}: lines have mixed dimensions: {sorted(dims)}")
    return records


def _config_to_json(config: FdeConfig) -> dict:
    return {
        "dim": config.dim, "k_sim": config.k_sim, "d_proj": config.d_proj,
        "r_reps": config.r_reps, "d_final": config.d_final,
        "fill_empty": config.fill_empty, "partitioner": config.partitioner,
        "seed": config.seed,
    }


def _config_from_json(obj: Mapping, partitioners=None) -> FdeConfig:
    return FdeConfig(dim=int(obj["dim"]), k_sim=int(obj["k_sim"]),
                     d_proj=None if obj["d_proj"] is None else int(obj["d_proj"]),
                     r_reps=int(obj["r_reps"]),
                     d_final=None if obj["d_final"] is None else int(obj["d_final"]),
                     fill_empty=bool(obj["fill_empty"]), partitioner=str(obj["partitioner"]),
                     seed=int(obj["seed"]), kmeans_partitioners=partitioners)


def write_index(path, index: FdeIndex) -> None:
    """Serialize an index; the raw corpus is not stored."""
    header = {
        "config": _config_to_json(index.config),
        "fingerprint": index.fingerprint,
        "num_docs": index.num_docs,
        "fde_dim": index.fde_dim,
        "storage": "dense" if index.dense is not None else "pq",
    }
    if index.config.kmeans_partitioners is not None:
        parts = index.config.kmeans_partitioners
        header["kmeans"] = {"b": parts[0].num_clusters, "requested_b": parts[0].requested_b}
    if index.codebook is not None:
        header["pq"] = {"num_groups": index.codebook.num_groups,
                        "c": index.codebook.num_centers, "g": index.codebook.group_dim}
    hdr = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts_out = [INDEX_MAGIC, struct.pack("<I", FORMAT_VERSION),
                 struct.pack("<I", len(hdr)), hdr,
                 np.ascontiguousarray(index.doc_ids, dtype="<u8").tobytes()]
    if index.config.kmeans_partitioners is not None:
        for p in index.config.kmeans_partitioners:
            parts_out.append(np.ascontiguousarray(p.centers, dtype="<f8").tobytes())
    if index.dense is not None:
        parts_out.append(np.ascontiguousarray(index.dense, dtype="<f4").tobytes())
    else:
        parts_out.append(np.ascontiguousarray(index.codebook.effective_c, dtype="<u2").tobytes())
        parts_out.append(np.ascontiguousarray(index.codebook.centers, dtype="<f8").tobytes())
        parts_out.append(np.ascontiguousarray(index.codes, dtype="u1").tobytes())
    Path(path).write_bytes(b"".join(parts_out))


def read_index(path, corpus_records: Sequence | None = None) -> FdeIndex:
    """Load an index; pass mvec records to attach the corpus for reranking."""
    rd = _Reader(Path(path).read_bytes(), path)
    rd.expect_magic(INDEX_MAGIC)
    rd.expect_version()
    hdr_len = rd.u32("header length")
    header = json.loads(rd.take(hdr_len, "header").decode())
    num_docs = int(header["num_docs"])
    doc_ids = rd.array("<u8", num_docs, "doc ids").astype(np.int64)

    partitioners = None
    if "kmeans" in header:
        b = int(header["kmeans"]["b"])
        requested = int(header["kmeans"].get("requested_b", b))
        dim = int(header["config"]["dim"])
        partitioners = []
        for rep in range(int(header["config"]["r_reps"])):
            centers = rd.array("<f8", b * dim, f"kmeans centers rep {rep}").reshape(b, dim)
            partitioners.append(KMeansPartitioner(centers=centers, requested_b=requested))
        partitioners = tuple(partitioners)
    config = _config_from_json(header["config"], partitioners)
    if config_fingerprint(config) != header["fingerprint"]:
        raise ValueError(f"{path}: stored fingerprint does not match the stored config; file is corrupt")

    if header["storage"] == "dense":
        dense = rd.array("<f4", num_docs * int(header["fde_dim"]), "encodings")
        dense = dense.reshape(num_docs, int(header["fde_dim"]))
        index = FdeIndex(doc_ids, config, dense=dense)
    else:
        pq_h = header["pq"]
        groups, c, g = int(pq_h["num_groups"]), int(pq_h["c"]), int(pq_h["g"])
        effective = rd.array("<u2", groups, "effective center counts").astype(np.int64)
        centers = rd.array("<f8", groups * c * g, "codebook").reshape(groups, c, g)
        codes = rd.array("u1", num_docs * groups, "codes").reshape(num_docs, groups)
        codebook = PqCodebook(centers=centers, effective_c=effective)
        index = FdeIndex(doc_ids, config, codebook=codebook, codes=codes)
    rd.done()

    if corpus_records is not None:
        by_id = {int(i): m for i, m in corpus_records}
        missing = [int(d) for d in doc_ids if int(d) not in by_id]
        if missing:
            raise ValueError(f"{path}: corpus records missing indexed doc ids, e.g. {missing[:5]}")
        index.attach_corpus([by_id[int(d)] for d in doc_ids])
    return index


def write_qrels(path, qrels: Mapping) -> None:
    lines = []
    for qid in sorted(qrels):
        entry = qrels[qid]
        items = entry.items() if isinstance(entry, Mapping) else ((d, 1) for d in entry)
        for doc_id, grade in sorted(items):
            lines.append(f"{int(qid)}\t{int(doc_id)}\t{int(grade)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_qrels(path) -> dict:
    qrels: dict[int, dict[int, int]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'query<TAB>doc<TAB>grade', got {line!r}")
        qid, doc_id, grade = (int(x) for x in fields)
        if grade < 1:
            raise ValueError(f"{path}:{lineno}: grade must be >= 1, got {grade}")
        qrels.setdefault(qid, {})[doc_id] = grade
    return qrels


def write_run(path, run: Mapping, meta: Mapping | None = None) -> None:
    """run maps query id -> ranked [(doc_id, score)] or [doc_id]."""
    lines = []
    for key in sorted((meta or {})):
        lines.append(f"# {key}={(meta or {})[key]}")
    for qid in sorted(run):
        for rank, item in enumerate(run[qid], 1):
            doc_id, score = item if isinstance(item, tuple) else (item, 0.0)
            lines.append(f"{int(qid)}\t{int(doc_id)}\t{rank}\t{score:.9g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_run(path) -> tuple[dict, dict]:
    """Returns (meta, run) with run mapping query id -> [(doc_id, score)]."""
    meta: dict[str, str] = {}
    rows: dict[int, list[tuple[int, int, float]]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError(f"{path}:{lineno}: expected 'query<TAB>doc<TAB>rank<TAB>score', got {line!r}")
        qid, doc_id, rank = int(fields[0]), int(fields[1]), int(fields[2])
        rows.setdefault(qid, []).append((rank, doc_id, float(fields[3])))
    run = {qid: [(doc_id, score) for _, doc_id, score in sorted(entries)]
           for qid, entries in rows.items()}
    return meta, run


def write_config_file(path, values: Mapping) -> None:
    lines = [f"{k}={values[k]}" for k in sorted(values)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_config_file(path) -> dict:
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key=value', got {line!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def inspect_path(path) -> str:
    """Human-readable summary of any artifact file."""
    p = Path(path)
    head = p.read_bytes()[:4]
    if head == MVEC_MAGIC:
        records = read_mvec(p)
        tokens = [m.shape[0] for _, m in records]
        return (f"mvec file: {len(records)} records, dim {records[0][1].shape[1]}, "
                f"tokens per record min/mean/max = {min(tokens)}/{sum(tokens) / len(tokens):.1f}/{max(tokens)}")
    if head == INDEX_MAGIC:
        index = read_index(p)
        cfg = index.config
        lines = [
            "index file:",
            f"  num_docs     = {index.num_docs}",
            f"  dim          = {cfg.dim}",
            f"  k_sim        = {cfg.k_sim}",
            f"  d_proj       = {cfg.proj_dim}",
            f"  r_reps       = {cfg.r_reps}",
            f"  d_final      = {cfg.d_final}",
            f"  fde_dim      = {index.fde_dim}",
            f"  fill_empty   = {cfg.fill_empty}",
            f"  partitioner  = {cfg.partitioner}",
            f"  seed         = {cfg.seed}",
            f"  storage      = {'dense' if index.dense is not None else 'pq'}",
            f"  bytes/doc    = {index.payload_bytes_per_doc}",
            f"  fingerprint  = {index.fingerprint}",
        ]
        return "\n".join(lines)
    text = p.read_text(encoding="utf-8", errors="replace")
    sample = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if sample and all(len(ln.split("\t")) == 4 for ln in sample[:20]):
        meta, run = read_run(p)
        depths = [len(v) for v in run.values()]
        meta_str = ", ".join(f"{k}={v}" for k, v in sorted(meta.items())) or "none"
        return (f"run file: {len(run)} queries, depth min/max = {min(depths)}/{max(depths)}, "
                f"meta: {meta_str}")
    if sample and all(len(ln.split("\t")) == 3 for ln in sample[:20]):
        qrels = read_qrels(p)
        rel = sum(len(v) for v in qrels.values())
        return f"qrels file: {len(qrels)} queries, {rel} relevance judgements"
    if sample and all("=" in ln for ln in sample[:20]):
        cfg = read_config_file(p)
        return "config file:\n" + "\n".join(f"  {k}={v}" for k, v in sorted(cfg.items()))
    raise ValueError(f"{path}: unrecognized artifact format")
