"""Shim tests: the library-free halves, driven by a fake scorer, and the
round trip through the engine's adapters."""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import export_libkge
import export_pykeen
from kgxeval.adapters import AdapterMeta, import_libkge, import_pykeen
from kgxeval.metrics import Metric, aggregate

TRIPLES = [("a", "r0", "b"), ("b", "r0", "c"), ("a", "r1", "c"), ("c", "r1", "a")]
ENTITY_IDS = {"a": 0, "b": 1, "c": 2}


def fake_scorer(seed):
    rng = np.random.default_rng(seed)
    table = {}

    def score(x, y):
        key = (x, y)
        if key not in table:
            table[key] = rng.random(len(ENTITY_IDS))
        return table[key]

    return score


class TestOptimisticRank:
    def test_unique_top(self):
        assert export_pykeen.filtered_optimistic_rank([0.9, 0.2, 0.1], 0, []) == 1

    def test_better_candidates_counted(self):
        assert export_pykeen.filtered_optimistic_rank([0.9, 0.2, 0.5], 1, []) == 3

    def test_filtered_candidates_skipped(self):
        assert export_pykeen.filtered_optimistic_rank([0.9, 0.2, 0.5], 1, [0, 2]) == 1

    def test_gold_never_filtered(self):
        assert export_pykeen.filtered_optimistic_rank([0.9, 0.2], 1, [1, 0]) == 1

    def test_ranks_always_positive(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            scores = rng.random(5).tolist()
            rank = export_libkge.filtered_optimistic_rank(scores, 2, [0])
            assert rank >= 1


class TestDumpRows:
    def test_one_triple_two_rows(self):
        rows = export_pykeen.dump_rows(
            [("a", "r0", "b")], fake_scorer(1), fake_scorer(2), ENTITY_IDS, [])
        assert len(rows) == 2
        assert [row[3] for row in rows] == ["tail", "head"]

    def test_libkge_directions(self):
        rows = export_libkge.dump_rows(
            [("a", "r0", "b")], fake_scorer(1), fake_scorer(2), ENTITY_IDS, [])
        assert [row[3] for row in rows] == ["o", "s"]

    def test_filtering_never_worsens_rank(self):
        raw = export_pykeen.dump_rows(TRIPLES, fake_scorer(3), fake_scorer(4),
                                      ENTITY_IDS, [])
        filt = export_pykeen.dump_rows(TRIPLES, fake_scorer(3), fake_scorer(4),
                                       ENTITY_IDS, TRIPLES)
        for r_raw, r_filt in zip(raw, filt):
            assert r_filt[4] <= r_raw[4]


class TestAdapterRoundTrip:
    def test_pykeen_dump_imports_cleanly(self, tmp_path, recwarn):
        rows = export_pykeen.dump_rows(TRIPLES, fake_scorer(5), fake_scorer(6),
                                       ENTITY_IDS, TRIPLES)
        out = tmp_path / "dump.tsv"
        export_pykeen.write_dump(rows, out)
        meta = AdapterMeta(system_name="shimmed", dataset_name="toy",
                           rank_basis="filtered")
        s = import_pykeen(str(out), meta)
        assert len(recwarn) == 0
        assert len(s.records) == len(rows)
        want = sum(1.0 / row[4] for row in rows) / len(rows)
        assert aggregate(Metric.from_name("mrr"), s.ranks()) == pytest.approx(want)

    def test_libkge_dump_imports_cleanly(self, tmp_path, recwarn):
        rows = export_libkge.dump_rows(TRIPLES, fake_scorer(7), fake_scorer(8),
                                       ENTITY_IDS, TRIPLES)
        out = tmp_path / "dump.tsv"
        export_libkge.write_dump(rows, out)
        meta = AdapterMeta(system_name="shimmed", dataset_name="toy",
                           rank_basis="filtered")
        s = import_libkge(str(out), meta)
        assert len(recwarn) == 0
        assert [rec.gold_rank for rec in s.records] == [row[4] for row in rows]

    def test_write_dump_refuses_bad_rank(self, tmp_path):
        with pytest.raises(SystemExit):
            export_pykeen.write_dump([("a", "r", "b", "tail", 0)],
                                     tmp_path / "bad.tsv")

    def test_load_triples_roundtrip(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("a\tr0\tb\nb\tr0\tc\n")
        assert export_pykeen.load_triples(path) == [("a", "r0", "b"),
                                                    ("b", "r0", "c")]

    def test_load_triples_rejects_bad_line(self, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("only two\tfields\n")
        with pytest.raises(SystemExit):
            export_libkge.load_triples(bad)
