"""Command line interface: build / query / eval / baseline / synth / inspect.

Typical round trip:

    fdesearch synth --out data/
    fdesearch build --corpus data/corpus.mvec --out data/index.mvix --k-sim 5 --d-proj 8 --reps 20
    fdesearch query --index data/index.mvix --corpus data/corpus.mvec \
        --queries data/queries.mvec --out data/run.tsv --k-candidates 100 --final-k 10
    fdesearch eval --run data/run.tsv --qrels data/qrels.tsv --n 10,100

Every produced artifact embeds the resolved configuration (seed included)
so results can be regenerated. A flat key=value config file can preset
build flags; explicit flags win.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import dataio
from .encoding import FdeConfig, with_kmeans_partitions
from .engine import DEFAULT_CARVE_TAU, PqSpec, batch_query, build_index
from .evaluation import recall_at_n, reports_to_jsonl, reports_to_table
from .svheuristic import build_token_index, sv_candidates
from .synth import SynthSpec, synth_gen


def _parse_tokens(text: str):
    if ":" in text:
        lo, hi = text.split(":", 1)
        return (int(lo), int(hi))
    return int(text)


def _parse_pq(text: str) -> PqSpec:
    if ":" not in text:
        raise ValueError(f"--pq expects C:G (e.g. 256:8), got {text!r}")
    c, g = text.split(":", 1)
    return PqSpec(c=int(c), g=int(g))


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="fdesearch",
                                  description="Multi-vector retrieval via fixed dimensional encodings")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus/queries/qrels dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--spec", help="key=value spec file (flags override)")
    p.add_argument("--docs", type=int)
    p.add_argument("--tokens", type=_parse_tokens, help="tokens per doc: N or LO:HI")
    p.add_argument("--dim", type=int)
    p.add_argument("--clusters", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--queries", type=int)
    p.add_argument("--query-tokens", type=int)
    p.add_argument("--query-noise", type=float)
    p.add_argument("--doc-bias", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("build", help="encode a corpus into a searchable index file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key=value config file (flags override)")
    p.add_argument("--k-sim", type=int)
    p.add_argument("--d-proj", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--d-final", type=int)
    p.add_argument("--no-fill-empty", action="store_true")
    p.add_argument("--partitioner", choices=["simhash", "kmeans"])
    p.add_argument("--kmeans-b", type=int, help="centers for the kmeans partitioner")
    p.add_argument("--kmeans-all-tokens", action="store_true",
                   help="train kmeans partitions on all tokens instead of a 100k sample")
    p.add_argument("--seed", type=int)
    p.add_argument("--pq", type=_parse_pq, help="compress encodings, format C:G (e.g. 256:8)")
    p.add_argument("--normalize", action="store_true", help="normalize token rows on read")
    p.add_argument("--input-format", choices=["mvec", "text"], default="mvec")

    p = sub.add_parser("query", help="retrieve and rerank; writes a run file")
    p.add_argument("--index", required=True)
    p.add_argument("--corpus", required=True, help="mvec with the raw embeddings for reranking")
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k-candidates", type=int, default=100)
    p.add_argument("--final-k", type=int, default=10)
    p.add_argument("--carve-tau", type=float, nargs="?", const=DEFAULT_CARVE_TAU, default=None,
                   help=f"group query tokens before reranking; bare flag uses {DEFAULT_CARVE_TAU}")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--workers", type=int, default=0)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--n", default="10,100", help="comma-separated cutoffs")
    p.add_argument("--out", help="also write reports as JSONL")

    p = sub.add_parser("baseline", help="baseline candidate generators")
    bsub = p.add_subparsers(dest="baseline_kind", required=True)
    b = bsub.add_parser("sv", help="per-query-token nearest tokens, rank-major interleave")
    b.add_argument("--corpus", required=True)
    b.add_argument("--queries", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--k-per-query", type=int, required=True)
    b.add_argument("--dedup", action="store_true")
    b.add_argument("--normalize", action="store_true")

    p = sub.add_parser("inspect", help="print the header/summary of any artifact file")
    p.add_argument("path")
    return top


def _read_corpus(path, fmt: str, normalize: bool):
    if fmt == "text":
        records = dataio.read_text_embeddings(path)
        if normalize:
            records = [(i, (m / np.linalg.norm(m.astype(np.float64), axis=1, keepdims=True)).astype(np.float32))
                       for i, m in records]
        return records
    return dataio.read_mvec(path, normalize=normalize)


def _cmd_synth(args) -> int:
    values: dict = {}
    if args.spec:
        raw = dataio.read_config_file(args.spec)
        if "num_docs" in raw:
            values["num_docs"] = int(raw["num_docs"])
        if "tokens_per_doc" in raw:
            values["tokens_per_doc"] = _parse_tokens(raw["tokens_per_doc"])
        if "dim" in raw:
            values["dim"] = int(raw["dim"])
        if "num_clusters" in raw:
            values["num_clusters"] = int(raw["num_clusters"])
        if "noise" in raw:
            values["noise"] = float(raw["noise"])
        if "num_queries" in raw:
            values["num_queries"] = int(raw["num_queries"])
        if raw.get("query_tokens"):
            values["query_tokens"] = int(raw["query_tokens"])
        if raw.get("query_noise"):
            values["query_noise"] = float(raw["query_noise"])
        if "doc_bias" in raw:
            values["doc_bias"] = float(raw["doc_bias"])
        if "seed" in raw:
            values["seed"] = int(raw["seed"])
    overrides = {
        "num_docs": args.docs, "tokens_per_doc": args.tokens, "dim": args.dim,
        "num_clusters": args.clusters, "noise": args.noise,
        "num_queries": args.queries, "query_tokens": args.query_tokens,
        "query_noise": args.query_noise, "doc_bias": args.doc_bias, "seed": args.seed,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    spec = SynthSpec(**values)
    paths = synth_gen(spec, args.out)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _cmd_build(args) -> int:
    preset: dict = {}
    if args.config:
        preset = dataio.read_config_file(args.config)

    def setting(flag_value, key, cast, default):
        if flag_value is not None:
            return flag_value
        if key in preset:
            return cast(preset[key])
        return default

    records = _read_corpus(args.corpus, args.input_format, args.normalize)
    dim = records[0][1].shape[1]
    if args.no_fill_empty:
        fill_empty = False
    elif "fill_empty" in preset:
        fill_empty = preset["fill_empty"].lower() in ("1", "true", "yes")
    else:
        fill_empty = True
    config = FdeConfig(
        dim=dim,
        k_sim=setting(args.k_sim, "k_sim", int, 4),
        d_proj=setting(args.d_proj, "d_proj", int, None),
        r_reps=setting(args.reps, "reps", int, 10),
        d_final=setting(args.d_final, "d_final", int, None),
        fill_empty=fill_empty,
        seed=setting(args.seed, "seed", int, 0),
    )
    partitioner = setting(args.partitioner, "partitioner", str, "simhash")
    if partitioner == "kmeans":
        b = setting(args.kmeans_b, "kmeans_b", int, 16)
        tokens = np.vstack([m for _, m in records])
        config = with_kmeans_partitions(config, tokens, b,
                                        max_tokens=None if args.kmeans_all_tokens else 100_000)
    pq = args.pq
    if pq is None and "pq" in preset:
        pq = _parse_pq(preset["pq"])

    ids = [i for i, _ in records]
    index = build_index([m for _, m in records], config, pq=pq, doc_ids=ids)
    dataio.write_index(args.out, index)
    print(f"indexed {index.num_docs} documents, fde_dim={index.fde_dim}, "
          f"storage={'pq' if index.codebook is not None else 'dense'}, "
          f"bytes/doc={index.payload_bytes_per_doc}, fingerprint={index.fingerprint}")
    return 0


def _cmd_query(args) -> int:
    corpus_records = dataio.read_mvec(args.corpus, normalize=args.normalize)
    index = dataio.read_index(args.index, corpus_records=corpus_records)
    queries = dataio.read_mvec(args.queries, normalize=args.normalize)
    results = batch_query(index, [m for _, m in queries], args.k_candidates, args.final_k,
                          carve_tau=args.carve_tau, workers=args.workers)
    run = {qid: res.ranking for (qid, _), res in zip(queries, results)}
    cfg = index.config
    meta = {
        "fingerprint": index.fingerprint, "k_candidates": args.k_candidates,
        "final_k": args.final_k, "carve_tau": args.carve_tau,
        "dim": cfg.dim, "k_sim": cfg.k_sim, "d_proj": cfg.proj_dim, "r_reps": cfg.r_reps,
        "d_final": cfg.d_final, "fill_empty": cfg.fill_empty,
        "partitioner": cfg.partitioner, "seed": cfg.seed,
    }
    dataio.write_run(args.out, run, meta)
    total = {k: sum(r.timings[k] for r in results) for k in ("fde_gen", "mips", "rerank")}
    print(f"ran {len(results)} queries; total seconds: "
          + ", ".join(f"{k}={v:.3f}" for k, v in total.items()))
    return 0


def _cmd_eval(args) -> int:
    meta, run = dataio.read_run(args.run)
    qrels = dataio.read_qrels(args.qrels)
    ids_only = {qid: [doc for doc, _ in ranked] for qid, ranked in run.items()}
    cutoffs = [int(x) for x in args.n.split(",") if x.strip()]
    reports = [recall_at_n(ids_only, qrels, n, fingerprint=meta.get("fingerprint", ""))
               for n in cutoffs]
    print(reports_to_table(reports), end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(reports_to_jsonl(reports))
    return 0


def _cmd_baseline(args) -> int:
    corpus = dataio.read_mvec(args.corpus, normalize=args.normalize)
    queries = dataio.read_mvec(args.queries, normalize=args.normalize)
    token_index = build_token_index([m for _, m in corpus], doc_ids=[i for i, _ in corpus])
    run = {}
    for qid, Q in queries:
        run[qid] = sv_candidates(Q, token_index, args.k_per_query, dedup=args.dedup)
    meta = {
        "method": "sv_heuristic", "k_per_query": args.k_per_query, "dedup": args.dedup,
        "floats_scanned": token_index.floats_scanned,
        "note": "rank column orders candidates; scores are not defined for interleaved lists",
    }
    dataio.write_run(args.out, run, meta)
    print(f"wrote candidates for {len(run)} queries "
          f"(floats scanned: {token_index.floats_scanned})")
    return 0


def cli_main(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "build":
            return _cmd_build(args)
        if args.command == "query":
            return _cmd_query(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "baseline":
            return _cmd_baseline(args)
        if args.command == "inspect":
            print(dataio.inspect_path(args.path))
            return 0
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
