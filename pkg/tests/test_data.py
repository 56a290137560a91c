"""Triple loading, graph statistics, cardinality classes, synthetic data."""

import io
from collections import Counter

import pytest

from kgxeval.data import (
    DuplicateTripleWarning,
    SyntheticConfig,
    Triple,
    TripleSet,
    Vocabulary,
    classify_relation_cardinality,
    compute_stats,
    generate_synthetic,
    load_tsv,
    read_symmetric_relations,
    read_type_map,
    save_tsv,
    write_symmetric_relations,
)
from kgxeval.errors import ConfigurationError, DataError


def make_set(labeled, split="train", vocab=None):
    vocab = vocab or Vocabulary()
    triples = tuple(
        Triple(vocab.entity_id(h, add=True), vocab.relation_id(r, add=True),
               vocab.entity_id(t, add=True))
        for h, r, t in labeled
    )
    return TripleSet(split, triples, vocab)


class TestLoadTsv:
    def test_single_line(self):
        ts = load_tsv(b"a\tr\tb\n")
        assert len(ts) == 1
        assert ts.vocab.entity_labels == ("a", "b")
        assert ts.vocab.relation_labels == ("r",)
        assert ts.labeled() == [("a", "r", "b")]

    def test_empty_stream(self):
        vocab = Vocabulary()
        ts = load_tsv(b"", vocab)
        assert len(ts) == 0
        assert vocab.n_entities == 0 and vocab.n_relations == 0

    def test_preserves_line_order_and_extends_vocab(self):
        vocab = Vocabulary()
        vocab.entity_id("z", add=True)
        ts = load_tsv(b"a\tr\tb\nb\ts\tz\n", vocab)
        assert ts.labeled() == [("a", "r", "b"), ("b", "s", "z")]
        assert vocab.entity_labels == ("z", "a", "b")

    def test_malformed_line_names_line_number(self):
        with pytest.raises(DataError, match="line 2"):
            load_tsv(b"a\tr\tb\na\tr\n")
        with pytest.raises(DataError, match="line 1"):
            load_tsv(b"a b c\n")

    def test_duplicate_dropped_with_warning(self):
        with pytest.warns(DuplicateTripleWarning, match="line 3"):
            ts = load_tsv(b"a\tr\tb\nc\tr\td\na\tr\tb\n")
        assert len(ts) == 2

    def test_large_file_counts(self, tmp_path):
        # stand-in for the public-split check: known line and relation counts
        n_lines, n_relations = 20000, 237
        path = tmp_path / "train.tsv"
        with open(path, "w") as fh:
            for i in range(n_lines):
                fh.write(f"e{i % 4000}\trel{i % n_relations}\te{(i * 7 + 1) % 4000}\n")
        ts = load_tsv(path)
        assert len(ts) == n_lines
        assert ts.vocab.n_relations == n_relations

    def test_save_roundtrip(self, tmp_path):
        ts = make_set([("a", "r", "b"), ("b", "r", "c")])
        save_tsv(ts, tmp_path / "out.tsv")
        again = load_tsv(tmp_path / "out.tsv")
        assert again.labeled() == ts.labeled()


class TestVocabulary:
    def test_roundtrip_property(self, rng):
        vocab = Vocabulary()
        labels = [f"entity {i}" for i in range(100)]
        for lb in labels:
            vocab.entity_id(lb, add=True)
        for lb in labels:
            assert vocab.entity_label(vocab.entity_id(lb)) == lb

    def test_unknown_label_raises(self):
        with pytest.raises(DataError):
            Vocabulary().entity_id("nope")
        with pytest.raises(DataError):
            Vocabulary().relation_label(3)


class TestComputeStats:
    def test_hand_counts(self):
        ts = make_set([("a", "r", "b"), ("a", "r", "c")])
        stats = compute_stats(ts)
        v = ts.vocab
        assert stats.entity_frequency[v.entity_id("a")] == 2
        assert stats.entity_frequency[v.entity_id("b")] == 1
        assert stats.entity_frequency[v.entity_id("c")] == 1
        profile = stats.per_relation[v.relation_id("r")]
        assert (profile.distinct_heads, profile.distinct_tails, profile.triple_count) \
            == (1, 2, 2)

    def test_single_triple(self):
        stats = compute_stats(make_set([("a", "r", "b")]))
        assert all(c == 1 for c in stats.entity_frequency.values())
        assert all(c == 1 for c in stats.relation_frequency.values())

    def test_matches_brute_force_on_random_set(self, rng):
        labeled = [
            (f"e{rng.integers(40)}", f"r{rng.integers(8)}", f"e{rng.integers(40)}")
            for _ in range(500)
        ]
        labeled = list(dict.fromkeys(labeled))  # sets must be duplicate-free
        ts = make_set(labeled)
        stats = compute_stats(ts)
        v = ts.vocab
        ent_counts = Counter()
        rel_counts = Counter()
        heads, tails = {}, {}
        for h, r, t in labeled:
            ent_counts[h] += 1
            ent_counts[t] += 1
            rel_counts[r] += 1
            heads.setdefault(r, set()).add(h)
            tails.setdefault(r, set()).add(t)
        assert {v.entity_label(e): c for e, c in stats.entity_frequency.items()} \
            == dict(ent_counts)
        assert {v.relation_label(r): c for r, c in stats.relation_frequency.items()} \
            == dict(rel_counts)
        for r, profile in stats.per_relation.items():
            label = v.relation_label(r)
            assert profile.distinct_heads == len(heads[label])
            assert profile.distinct_tails == len(tails[label])

    def test_relation_frequency_sums_to_train_size(self, rng):
        labeled = list(dict.fromkeys(
            (f"e{rng.integers(30)}", f"r{rng.integers(5)}", f"e{rng.integers(30)}")
            for _ in range(300)
        ))
        ts = make_set(labeled)
        stats = compute_stats(ts)
        assert sum(stats.relation_frequency.values()) == len(ts)

    def test_empty_train_rejected(self):
        with pytest.raises(DataError):
            compute_stats(TripleSet("train", (), Vocabulary()))


class TestCardinality:
    def cls(self, labeled):
        ts = make_set(labeled)
        stats = compute_stats(ts)
        return classify_relation_cardinality(stats, ts.vocab.relation_id("r"))

    def test_one_pair(self):
        assert self.cls([("a", "r", "b")]) == "1-1"

    def test_one_to_many(self):
        # tails/head = 4/2 = 2.0 >= 1.5; heads/tail = 4/3 < 1.5
        assert self.cls([("a", "r", "b"), ("a", "r", "c"),
                         ("a", "r", "d"), ("e", "r", "b")]) == "1-M"

    def test_many_to_one_mirror(self):
        assert self.cls([("a", "r", "b"), ("c", "r", "b"),
                         ("d", "r", "b"), ("a", "r", "e")]) == "M-1"

    def test_many_to_many(self):
        triples = [(f"h{i}", "r", f"t{j}") for i in range(3) for j in range(3)]
        assert self.cls(triples) == "M-M"

    def test_unknown_relation(self):
        ts = make_set([("a", "r", "b")])
        with pytest.raises(DataError):
            classify_relation_cardinality(compute_stats(ts), 99)

    def test_invariant_under_reordering(self, rng):
        labeled = list(dict.fromkeys(
            (f"e{rng.integers(10)}", "r", f"e{rng.integers(10)}") for _ in range(40)
        ))
        base = self.cls(labeled)
        for _ in range(5):
            shuffled = list(labeled)
            rng.shuffle(shuffled)
            assert self.cls(shuffled) == base


class TestSynthetic:
    def test_deterministic_under_seed(self, tmp_path):
        config = SyntheticConfig(n_entities=64, n_relations=4, n_triples=400, seed=7)
        a, b = generate_synthetic(config), generate_synthetic(config)
        for split in ("train", "valid", "test"):
            pa, pb = tmp_path / f"a_{split}.tsv", tmp_path / f"b_{split}.tsv"
            save_tsv(getattr(a, split), pa)
            save_tsv(getattr(b, split), pb)
            assert pa.read_bytes() == pb.read_bytes()
        assert a.symmetric_relations == b.symmetric_relations

    def test_zero_symmetric_fraction(self):
        ds = generate_synthetic(
            SyntheticConfig(n_entities=64, n_relations=4, n_triples=300,
                            symmetric_fraction=0.0, seed=3)
        )
        assert ds.symmetric_relations == frozenset()

    def test_full_symmetric_fraction_reverse_density(self):
        ds = generate_synthetic(
            SyntheticConfig(n_entities=64, n_relations=2, n_triples=400,
                            symmetric_fraction=1.0, seed=5)
        )
        assert len(ds.symmetric_relations) == 2
        train = set(ds.train.triples)
        with_reverse = sum(1 for h, r, t in train if Triple(t, r, h) in train)
        assert with_reverse / len(train) >= 0.5

    def test_splits_disjoint(self):
        ds = generate_synthetic(
            SyntheticConfig(n_entities=80, n_relations=5, n_triples=600, seed=9)
        )
        train, valid, test = map(set, (ds.train.triples, ds.valid.triples,
                                       ds.test.triples))
        assert not (train & valid) and not (train & test) and not (valid & test)

    def test_infeasible_config_rejected(self):
        with pytest.raises(ConfigurationError):
            generate_synthetic(SyntheticConfig(n_triples=5))
        with pytest.raises(ConfigurationError):
            generate_synthetic(SyntheticConfig(n_entities=16, n_relations=1,
                                               n_triples=100000))
        with pytest.raises(ConfigurationError):
            generate_synthetic(SyntheticConfig(symmetric_fraction=1.5))


class TestResourceFiles:
    def test_symmetric_relations_roundtrip(self, tmp_path):
        path = tmp_path / "sym.txt"
        write_symmetric_relations({"marriedTo", "adjoins"}, path)
        assert read_symmetric_relations(path) == {"marriedTo", "adjoins"}

    def test_type_map(self, tmp_path):
        path = tmp_path / "types.tsv"
        path.write_text("Obama\tAgent\tPerson\tPolitician\nParis\tPlace\n",
                        encoding="utf-8")
        tm = read_type_map(path)
        assert tm["Obama"] == ("Agent", "Person", "Politician")
        assert tm["Paris"] == ("Place",)

    def test_type_map_malformed(self, tmp_path):
        path = tmp_path / "types.tsv"
        path.write_text("loner\n", encoding="utf-8")
        with pytest.raises(DataError, match="line 1"):
            read_type_map(path)
