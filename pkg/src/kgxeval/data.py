"""Knowledge-graph triple splits, vocabularies, and training-set statistics.

Datasets are UTF-8 TSV files with one ``head<TAB>relation<TAB>tail`` triple
per line (the common train.tsv/valid.tsv/test.tsv layout).  Labels are mapped
to dense integer ids in first-seen order, so ingestion is deterministic.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, NamedTuple

import numpy as np

from kgxeval.errors import ConfigurationError, DataError

# A relation side counts as "many" when the average fan-out meets this
# threshold (Bordes-style 1-1/1-M/M-1/M-M classification).
CARDINALITY_THRESHOLD = 1.5


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


class DuplicateTripleWarning(UserWarning):
    """Raised (as a warning) when a split contains the same triple twice."""


class Vocabulary:
    """Bidirectional label/id maps for entities and relations.

    Ids are dense and assigned in first-seen order; ``label -> id -> label``
    round-trips exactly.
    """

    def __init__(self):
        self._entities: list[str] = []
        self._relations: list[str] = []
        self._entity_ids: dict[str, int] = {}
        self._relation_ids: dict[str, int] = {}

    @property
    def n_entities(self) -> int:
        return len(self._entities)

    @property
    def n_relations(self) -> int:
        return len(self._relations)

    @property
    def entity_labels(self) -> tuple[str, ...]:
        return tuple(self._entities)

    @property
    def relation_labels(self) -> tuple[str, ...]:
        return tuple(self._relations)

    def entity_id(self, label: str, add: bool = False) -> int:
        eid = self._entity_ids.get(label)
        if eid is None:
            if not add:
                raise DataError(f"unknown entity label {label!r}")
            eid = len(self._entities)
            self._entities.append(label)
            self._entity_ids[label] = eid
        return eid

    def relation_id(self, label: str, add: bool = False) -> int:
        rid = self._relation_ids.get(label)
        if rid is None:
            if not add:
                raise DataError(f"unknown relation label {label!r}")
            rid = len(self._relations)
            self._relations.append(label)
            self._relation_ids[label] = rid
        return rid

    def entity_label(self, eid: int) -> str:
        try:
            return self._entities[eid]
        except IndexError:
            raise DataError(f"entity id {eid} out of range") from None

    def relation_label(self, rid: int) -> str:
        try:
            return self._relations[rid]
        except IndexError:
            raise DataError(f"relation id {rid} out of range") from None

    def has_entity(self, label: str) -> bool:
        return label in self._entity_ids

    def has_relation(self, label: str) -> bool:
        return label in self._relation_ids


@dataclass(frozen=True)
class TripleSet:
    """An ordered, duplicate-free list of triples belonging to one split."""

    split: str  # "train" | "valid" | "test"
    triples: tuple[Triple, ...]
    vocab: Vocabulary

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    def as_array(self) -> np.ndarray:
        """(n, 3) int64 array of (head, relation, tail) ids."""
        if not self.triples:
            return np.empty((0, 3), dtype=np.int64)
        return np.asarray(self.triples, dtype=np.int64)

    def as_set(self) -> frozenset[Triple]:
        return frozenset(self.triples)

    def labeled(self) -> list[tuple[str, str, str]]:
        v = self.vocab
        return [
            (v.entity_label(h), v.relation_label(r), v.entity_label(t))
            for h, r, t in self.triples
        ]


@dataclass(frozen=True)
class RelationProfile:
    distinct_heads: int
    distinct_tails: int
    triple_count: int


@dataclass(frozen=True)
class GraphStats:
    """Exact occurrence counts over a training split."""

    entity_frequency: dict[int, int]
    relation_frequency: dict[int, int]
    per_relation: dict[int, RelationProfile]
    vocab: Vocabulary


def load_tsv(
    source: str | os.PathLike | BinaryIO | bytes,
    vocab: Vocabulary | None = None,
    split: str = "train",
) -> TripleSet:
    """Load a TSV triple file into a :class:`TripleSet`.

    ``source`` may be a path, a binary stream, or raw bytes.  Line order is
    preserved; unseen labels extend ``vocab`` (a fresh one is created when
    omitted).  A malformed line raises :class:`DataError` carrying the line
    number; duplicate triples are dropped with a
    :class:`DuplicateTripleWarning`.
    """
    if vocab is None:
        vocab = Vocabulary()
    if isinstance(source, bytes):
        stream: BinaryIO = io.BytesIO(source)
        close = True
    elif isinstance(source, (str, os.PathLike)):
        stream = open(source, "rb")
        close = True
    else:
        stream = source
        close = False

    triples: list[Triple] = []
    seen: set[Triple] = set()
    try:
        for lineno, raw in enumerate(stream, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise DataError(f"line {lineno}: not valid UTF-8 ({exc})") from None
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DataError(
                    f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}"
                )
            h, r, t = fields
            triple = Triple(
                vocab.entity_id(h, add=True),
                vocab.relation_id(r, add=True),
                vocab.entity_id(t, add=True),
            )
            if triple in seen:
                warnings.warn(
                    DuplicateTripleWarning(
                        f"line {lineno}: duplicate triple ({h}, {r}, {t}) dropped"
                    ),
                    stacklevel=2,
                )
                continue
            seen.add(triple)
            triples.append(triple)
    finally:
        if close:
            stream.close()
    return TripleSet(split=split, triples=tuple(triples), vocab=vocab)


def save_tsv(ts: TripleSet, path: str | os.PathLike) -> None:
    """Write a TripleSet back to TSV (LF line endings, UTF-8)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for h, r, t in ts.labeled():
            fh.write(f"{h}\t{r}\t{t}\n")


def compute_stats(train: TripleSet) -> GraphStats:
    """Entity/relation frequencies and per-relation fan-out over ``train``.

    Entity frequency counts occurrences in either position (head or tail).
    """
    if len(train) == 0:
        raise DataError("cannot compute stats over an empty training split")
    entity_freq: Counter[int] = Counter()
    relation_freq: Counter[int] = Counter()
    heads: dict[int, set[int]] = {}
    tails: dict[int, set[int]] = {}
    for h, r, t in train.triples:
        entity_freq[h] += 1
        entity_freq[t] += 1
        relation_freq[r] += 1
        heads.setdefault(r, set()).add(h)
        tails.setdefault(r, set()).add(t)
    per_relation = {
        r: RelationProfile(
            distinct_heads=len(heads[r]),
            distinct_tails=len(tails[r]),
            triple_count=relation_freq[r],
        )
        for r in relation_freq
    }
    return GraphStats(
        entity_frequency=dict(entity_freq),
        relation_frequency=dict(relation_freq),
        per_relation=per_relation,
        vocab=train.vocab,
    )


def classify_relation_cardinality(
    stats: GraphStats,
    relation: int,
    threshold: float = CARDINALITY_THRESHOLD,
) -> str:
    """Classify a relation as 1-1, 1-M, M-1, or M-M.

    The tail side is "M" when the average number of tails per head
    (triple count / distinct heads) is >= ``threshold``, and symmetrically
    for the head side.  The class reads head-side, then tail-side.
    """
    profile = stats.per_relation.get(relation)
    if profile is None:
        raise DataError(f"relation id {relation} not present in stats")
    tail_side = "M" if profile.triple_count / profile.distinct_heads >= threshold else "1"
    head_side = "M" if profile.triple_count / profile.distinct_tails >= threshold else "1"
    return f"{head_side}-{tail_side}"


@dataclass(frozen=True)
class SyntheticConfig:
    """Configuration for the deterministic desk-scale dataset generator."""

    n_entities: int = 120
    n_relations: int = 6
    n_triples: int = 2000
    symmetric_fraction: float = 0.5
    seed: int = 0
    cluster_size: int = 8
    valid_fraction: float = 0.1
    test_fraction: float = 0.1
    reverse_probability: float = 0.5

    def validate(self) -> None:
        if self.n_triples < 10:
            raise ConfigurationError("n_triples must be >= 10")
        if self.n_entities < 2 * self.cluster_size:
            raise ConfigurationError(
                f"n_entities must be >= {2 * self.cluster_size} (two clusters)"
            )
        if self.n_relations < 1:
            raise ConfigurationError("n_relations must be >= 1")
        if not 0.0 <= self.symmetric_fraction <= 1.0:
            raise ConfigurationError("symmetric_fraction must be in [0, 1]")
        if self.valid_fraction + self.test_fraction >= 0.9:
            raise ConfigurationError("valid+test fractions leave too little train data")
        n_clusters = self.n_entities // self.cluster_size
        capacity = self.n_relations * n_clusters * self.cluster_size**2
        if self.n_triples > capacity // 2:
            raise ConfigurationError(
                f"n_triples={self.n_triples} infeasible for "
                f"{self.n_entities} entities / {self.n_relations} relations"
            )


@dataclass(frozen=True)
class SyntheticDataset:
    train: TripleSet
    valid: TripleSet
    test: TripleSet
    symmetric_relations: frozenset[str]
    config: SyntheticConfig = field(repr=False)


def generate_synthetic(config: SyntheticConfig) -> SyntheticDataset:
    """Generate a learnable synthetic KG with train/valid/test splits.

    Entities are grouped into clusters of ``cluster_size``; each relation is a
    random permutation over clusters and triples connect a head to a tail in
    the head's image cluster.  Relations flagged symmetric use involutive
    permutations, and for every emitted symmetric triple the reverse is added
    to train with probability ``reverse_probability`` -- this plants the
    partially-observed symmetry that the debugger mines for.

    Output is deterministic under ``seed``; the three splits are disjoint.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    n_clusters = config.n_entities // config.cluster_size

    # entity e belongs to cluster e // cluster_size; leftover entities join
    # the last cluster
    def cluster_of(e: int) -> int:
        return min(e // config.cluster_size, n_clusters - 1)

    members: list[list[int]] = [[] for _ in range(n_clusters)]
    for e in range(config.n_entities):
        members[cluster_of(e)].append(e)

    n_sym = round(config.symmetric_fraction * config.n_relations)
    sym_ids = set(rng.choice(config.n_relations, size=n_sym, replace=False).tolist())

    perms: list[np.ndarray] = []
    for r in range(config.n_relations):
        if r in sym_ids:
            perms.append(_random_involution(n_clusters, rng))
        else:
            perms.append(rng.permutation(n_clusters))

    base: list[Triple] = []
    base_seen: set[Triple] = set()
    attempts = 0
    max_attempts = 80 * config.n_triples
    while len(base) < config.n_triples:
        attempts += 1
        if attempts > max_attempts:
            raise ConfigurationError(
                "could not generate enough distinct triples; lower n_triples"
            )
        r = int(rng.integers(config.n_relations))
        h = int(rng.integers(config.n_entities))
        target = members[int(perms[r][cluster_of(h)])]
        t = int(target[int(rng.integers(len(target)))])
        if h == t:
            continue
        triple = Triple(h, r, t)
        if triple in base_seen:
            continue
        base_seen.add(triple)
        base.append(triple)

    n_valid = int(math.floor(config.valid_fraction * config.n_triples))
    n_test = int(math.floor(config.test_fraction * config.n_triples))
    order = rng.permutation(config.n_triples)
    valid_triples = [base[i] for i in order[:n_valid]]
    test_triples = [base[i] for i in order[n_valid : n_valid + n_test]]
    train_triples = [base[i] for i in order[n_valid + n_test :]]

    # plant reverses of symmetric triples into train (never colliding with
    # held-out splits, so the splits stay disjoint)
    train_seen = set(train_triples)
    held_out = set(valid_triples) | set(test_triples)
    for h, r, t in base:
        if r not in sym_ids:
            continue
        if rng.random() >= config.reverse_probability:
            continue
        reverse = Triple(t, r, h)
        if reverse in train_seen or reverse in held_out or reverse.head == reverse.tail:
            continue
        train_seen.add(reverse)
        train_triples.append(reverse)

    vocab = Vocabulary()
    width_e = len(str(config.n_entities - 1))
    for e in range(config.n_entities):
        vocab.entity_id(f"e{e:0{width_e}d}", add=True)
    for r in range(config.n_relations):
        vocab.relation_id(f"r{r}", add=True)

    symmetric_labels = frozenset(f"r{r}" for r in sorted(sym_ids))
    return SyntheticDataset(
        train=TripleSet("train", tuple(train_triples), vocab),
        valid=TripleSet("valid", tuple(valid_triples), vocab),
        test=TripleSet("test", tuple(test_triples), vocab),
        symmetric_relations=symmetric_labels,
        config=config,
    )


def _random_involution(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random permutation with p[p[i]] == i (pairs plus fixed points)."""
    perm = np.arange(n)
    order = rng.permutation(n)
    i = 0
    while i + 1 < n:
        a, b = order[i], order[i + 1]
        # leave roughly one in five clusters fixed so self-symmetric clusters exist
        if rng.random() < 0.8:
            perm[a], perm[b] = b, a
        i += 2
    return perm


def write_symmetric_relations(labels: Iterable[str], path: str | os.PathLike) -> None:
    """Write the symmetric-relations resource file: one relation label per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label in sorted(labels):
            fh.write(label + "\n")


def read_symmetric_relations(path: str | os.PathLike) -> frozenset[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip())


def read_type_map(path: str | os.PathLike) -> dict[str, tuple[str, ...]]:
    """Read the entity type-map sidecar: ``entity<TAB>level1<TAB>level2...``.

    Levels are ordered general -> specific.
    """
    mapping: dict[str, tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise DataError(f"type map line {lineno}: expected entity and >=1 type level")
            mapping[fields[0]] = tuple(fields[1:])
    return mapping
