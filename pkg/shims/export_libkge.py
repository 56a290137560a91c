#!/usr/bin/env python3
"""Dump a trained LibKGE model's test-set ranks as a libkge-dump TSV.

Runs inside a LibKGE environment (kge + torch are imported lazily in
main()); the ranking and formatting halves are library-free.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

HEADER = "s\tp\to\tdirection\trank"


def load_triples(path):
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
    """1 + number of strictly better candidates outside the filter set."""
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
    objects, subjects = {}, {}
    for s, p, o in triples:
        objects.setdefault((s, p), set()).add(o)
        subjects.setdefault((p, o), set()).add(s)
    return objects, subjects


def dump_rows(test_triples, score_objects, score_subjects, entity_ids,
              filter_triples):
    """Rows for every (test triple, direction), direction in {o, s}."""
    objects, subjects = build_filter(filter_triples)
    rows = []
    for s, p, o in test_triples:
        o_scores = score_objects(s, p)
        known_o = [entity_ids[x] for x in objects.get((s, p), ()) if x in entity_ids]
        rows.append((s, p, o, "o",
                     filtered_optimistic_rank(o_scores, entity_ids[o], known_o)))
        s_scores = score_subjects(p, o)
        known_s = [entity_ids[x] for x in subjects.get((p, o), ()) if x in entity_ids]
        rows.append((s, p, o, "s",
                     filtered_optimistic_rank(s_scores, entity_ids[s], known_s)))
    return rows


def write_dump(rows, out_path):
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for s, p, o, direction, rank in rows:
            if rank < 1:
                raise SystemExit(f"refusing to write non-positive rank {rank}")
            fh.write(f"{s}\t{p}\t{o}\t{direction}\t{int(rank)}\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--checkpoint", required=True,
                        help="libkge checkpoint_best.pt")
    parser.add_argument("--train", required=True)
    parser.add_argument("--valid", required=True)
    parser.add_argument("--test", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--rank-basis", choices=("filtered", "raw"),
                        default="filtered")
    args = parser.parse_args(argv)

    try:
        import torch
        from kge.model import KgeModel
        from kge.util.io import load_checkpoint
    except ImportError as exc:
        raise SystemExit(
            f"this script must run inside a libkge environment: {exc}"
        ) from exc

    for path in (args.checkpoint, args.train, args.valid, args.test):
        if not Path(path).exists():
            raise SystemExit(f"missing input: {path}")

    checkpoint = load_checkpoint(args.checkpoint, device="cpu")
    model = KgeModel.create_from(checkpoint)
    model.eval()
    dataset = model.dataset
    entity_ids = {label: i for i, label in enumerate(dataset.entity_strings())}
    relation_ids = {label: i for i, label in enumerate(dataset.relation_strings())}

    def score_objects(s, p):
        with torch.no_grad():
            return model.score_sp(
                torch.as_tensor([entity_ids[s]]),
                torch.as_tensor([relation_ids[p]]),
            )[0].cpu().numpy()

    def score_subjects(p, o):
        with torch.no_grad():
            return model.score_po(
                torch.as_tensor([relation_ids[p]]),
                torch.as_tensor([entity_ids[o]]),
            )[0].cpu().numpy()

    train = load_triples(args.train)
    valid = load_triples(args.valid)
    test = load_triples(args.test)
    filter_triples = (train + valid + test) if args.rank_basis == "filtered" else []
    rows = dump_rows(test, score_objects, score_subjects, entity_ids,
                     filter_triples)
    write_dump(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)


if __name__ == "__main__":
    main()
