#!/usr/bin/env python3
"""The artifact files and the command line, end to end.

Generates a dataset, builds an index, queries it and evaluates the run,
all through the CLI entry point, then pokes at the files with the library
readers.
"""

import tempfile
from pathlib import Path

from fdesearch.cli import cli_main
from fdesearch.dataio import inspect_path, read_mvec, read_run

work = Path(tempfile.mkdtemp(prefix="fdesearch_demo_"))
print(f"working in {work}\n")

cli_main(["synth", "--out", str(work), "--docs", "200", "--queries", "20", "--seed", "5"])

print("\n$ fdesearch build ... --k-sim 5 --d-proj 8 --reps 20 --pq 256:8")
cli_main(["build", "--corpus", str(work / "corpus.mvec"), "--out", str(work / "index.mvix"),
          "--k-sim", "5", "--d-proj", "8", "--reps", "20", "--pq", "256:8"])

print("\n$ fdesearch inspect index.mvix")
cli_main(["inspect", str(work / "index.mvix")])

print("\n$ fdesearch query ... --k-candidates 50 --final-k 10")
cli_main(["query", "--index", str(work / "index.mvix"), "--corpus", str(work / "corpus.mvec"),
          "--queries", str(work / "queries.mvec"), "--out", str(work / "run.tsv"),
          "--k-candidates", "50", "--final-k", "10"])

print("\n$ fdesearch eval ...")
cli_main(["eval", "--run", str(work / "run.tsv"), "--qrels", str(work / "qrels.tsv"),
          "--n", "1,10"])

print("\n$ fdesearch baseline sv ... --k-per-query 5")
cli_main(["baseline", "sv", "--corpus", str(work / "corpus.mvec"),
          "--queries", str(work / "queries.mvec"), "--out", str(work / "sv_run.tsv"),
          "--k-per-query", "5"])

# the same artifacts through the library readers
records = read_mvec(work / "corpus.mvec")
print(f"\ncorpus.mvec: {len(records)} records, row dtype {records[0][1].dtype}")
meta, run = read_run(work / "run.tsv")
qid = sorted(run)[0]
print(f"run.tsv embeds its configuration: seed={meta['seed']}, "
      f"k_candidates={meta['k_candidates']}, fingerprint={meta['fingerprint']}")
print(f"query {qid} top 3: {run[qid][:3]}")
print("\n" + inspect_path(work / "qrels.tsv"))
