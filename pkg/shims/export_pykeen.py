#!/usr/bin/env python3
"""Dump a trained PyKEEN model's test-set ranks as a pykeen-dump TSV.

Runs inside a PyKEEN environment (pykeen + torch are imported lazily in
main()). The scoring-independent parts (rank computation, filtering, row
formatting) are plain functions so they can be tested without the library.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

HEADER = "head\trelation\ttail\tside\trank"


def load_triples(path):
    """Label triples from a 3-column TSV, order preserved."""
    triples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise SystemExit(f"{path}:{lineno}: expected 3 tab-separated fields")
            triples.append(tuple(fields))
    return triples


def filtered_optimistic_rank(scores, gold_index, filtered_indices):
    """1 + number of strictly better candidates, ignoring known positives.

    ``scores`` is any sequence of floats over all candidate entities;
    ``filtered_indices`` are candidate ids to exclude (the gold id is always
    kept even if listed).
    """
    gold = scores[gold_index]
    skip = set(filtered_indices)
    skip.discard(gold_index)
    better = 0
    for i, s in enumerate(scores):
        if i in skip:
            continue
        if s > gold:
            better += 1
    return 1 + better


def build_filter(triples):
    """(h, r) -> tail set and (r, t) -> head set for filtered ranking."""
    tails, heads = {}, {}
    for h, r, t in triples:
        tails.setdefault((h, r), set()).add(t)
        heads.setdefault((r, t), set()).add(h)
    return tails, heads


def dump_rows(test_triples, score_tails, score_heads, entity_ids, filter_triples):
    """Produce dump rows for every (test triple, direction).

    ``score_tails(h, r)`` / ``score_heads(r, t)`` return a score per entity
    id; ``entity_ids`` maps label -> id. Rows come back as 5-tuples matching
    the dump schema.
    """
    tails, heads = build_filter(filter_triples)
    rows = []
    for h, r, t in test_triples:
        tail_scores = score_tails(h, r)
        known_t = [entity_ids[x] for x in tails.get((h, r), ()) if x in entity_ids]
        rank_t = filtered_optimistic_rank(tail_scores, entity_ids[t], known_t)
        rows.append((h, r, t, "tail", rank_t))
        head_scores = score_heads(r, t)
        known_h = [entity_ids[x] for x in heads.get((r, t), ()) if x in entity_ids]
        rank_h = filtered_optimistic_rank(head_scores, entity_ids[h], known_h)
        rows.append((h, r, t, "head", rank_h))
    return rows


def write_dump(rows, out_path):
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for h, r, t, side, rank in rows:
            if rank < 1:
                raise SystemExit(f"refusing to write non-positive rank {rank}")
            fh.write(f"{h}\t{r}\t{t}\t{side}\t{int(rank)}\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--checkpoint", required=True,
                        help="pykeen trained_model.pkl")
    parser.add_argument("--train", required=True)
    parser.add_argument("--valid", required=True)
    parser.add_argument("--test", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--rank-basis", choices=("filtered", "raw"),
                        default="filtered")
    args = parser.parse_args(argv)

    try:
        import torch
        from pykeen.triples import TriplesFactory
    except ImportError as exc:
        raise SystemExit(
            f"this script must run inside a pykeen environment: {exc}"
        ) from exc

    for path in (args.checkpoint, args.train, args.valid, args.test):
        if not Path(path).exists():
            raise SystemExit(f"missing input: {path}")

    model = torch.load(args.checkpoint, map_location="cpu", weights_only=False)
    model.eval()

    train = load_triples(args.train)
    valid = load_triples(args.valid)
    test = load_triples(args.test)
    factory = TriplesFactory.from_labeled_triples(
        __import__("numpy").asarray(train, dtype=str)
    )
    entity_ids = dict(factory.entity_to_id)
    relation_ids = dict(factory.relation_to_id)

    def score_tails(h, r):
        batch = torch.as_tensor([[entity_ids[h], relation_ids[r]]])
        with torch.no_grad():
            return model.predict_t(batch)[0].cpu().numpy()

    def score_heads(r, t):
        batch = torch.as_tensor([[relation_ids[r], entity_ids[t]]])
        with torch.no_grad():
            return model.predict_h(batch)[0].cpu().numpy()

    filter_triples = (train + valid + test) if args.rank_basis == "filtered" else []
    rows = dump_rows(test, score_tails, score_heads, entity_ids, filter_triples)
    write_dump(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
