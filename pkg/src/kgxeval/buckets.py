"""Partitioning evaluation records into buckets.

Every feature assigns each record exactly one bucket label, so the buckets of
one feature partition the evaluation set.  Built-in features derive labels
from the triple itself plus optional resources (training-set statistics, a
symmetric-relation list, an entity type map); custom features read the values
already attached to records and, for continuous values, cut them into
equal-mass quantile intervals.

Records whose lookup fails (entity absent from the training statistics or
type map) land in the reserved ``UNKNOWN`` bucket.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from kgxeval.data import GraphStats, classify_relation_cardinality
from kgxeval.errors import ConfigurationError, DataError
from kgxeval.sysout import ExampleRecord, SystemOutput

UNKNOWN_LABEL = "UNKNOWN"
OTHER_LABEL = "OTHER"

# quantile interval count for numeric built-ins unless overridden
DEFAULT_NUM_BUCKETS = 4

BUILTIN_KINDS = (
    "head-length",
    "tail-length",
    "head-frequency",
    "tail-frequency",
    "relation-frequency",
    "relation-symmetry",
    "entity-type-level",
    "relation-label",
    "relation-cardinality",
    "tail-type-level-1",
    "tail-type-level-2",
)

_NEEDS_STATS = {"head-frequency", "tail-frequency", "relation-frequency",
                "relation-cardinality"}
_NEEDS_SYMMETRY = {"relation-symmetry"}
_NEEDS_TYPE_MAP = {"entity-type-level", "tail-type-level-1", "tail-type-level-2"}
_NUMERIC_KINDS = {"head-length", "tail-length", "head-frequency", "tail-frequency",
                  "relation-frequency"}


@dataclass(frozen=True)
class BuiltinFeature:
    """A built-in bucketization: ``kind`` plus whatever resource it needs.

    ``num_buckets`` caps the bucket count: interval count for numeric kinds
    (default :data:`DEFAULT_NUM_BUCKETS`), OTHER-collapse cap for label kinds
    (default uncapped).
    """

    kind: str
    stats: GraphStats | None = None
    symmetric_relations: frozenset[str] | None = None
    type_map: Mapping[str, tuple[str, ...]] | None = None
    num_buckets: int | None = None

    def __post_init__(self):
        if self.kind not in BUILTIN_KINDS:
            raise ConfigurationError(f"unknown built-in feature kind {self.kind!r}")
        if self.kind in _NEEDS_STATS and self.stats is None:
            raise ConfigurationError(f"feature {self.kind!r} requires training stats")
        if self.kind in _NEEDS_SYMMETRY and self.symmetric_relations is None:
            raise ConfigurationError(
                f"feature {self.kind!r} requires a symmetric-relation set"
            )
        if self.kind in _NEEDS_TYPE_MAP and self.type_map is None:
            raise ConfigurationError(f"feature {self.kind!r} requires a type map")
        if self.num_buckets is not None and self.num_buckets < 1:
            raise ConfigurationError("num_buckets must be >= 1")


@dataclass(frozen=True)
class BucketSpec:
    """Bucket inventory of one feature: ordered labels, plus interval edges
    when the feature was cut from continuous values."""

    feature_name: str
    labels: tuple[str, ...]
    boundaries: tuple[float, ...] | None = None

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise DataError(f"{self.feature_name}: duplicate bucket labels")
        if self.boundaries is not None:
            edges = self.boundaries
            if any(edges[i] >= edges[i + 1] for i in range(len(edges) - 1)):
                raise DataError(f"{self.feature_name}: boundaries not strictly increasing")


@dataclass(frozen=True)
class BucketAssignment:
    feature_name: str
    by_record: dict[str, str] = field(default_factory=dict)

    def label_of(self, record_id: str) -> str:
        return self.by_record[record_id]


def entity_token_count(label: str) -> int:
    """Entity "length": number of whitespace-separated tokens in the label."""
    return len(label.split())


def bucketize_continuous(values: Sequence[float], num_buckets: int) -> BucketSpec:
    """Cut real values into at most ``num_buckets`` equal-mass intervals.

    Edges sit at the empirical i/n quantiles; intervals are left-closed
    right-open with the last interval closed.  Duplicate edges collapse, so
    degenerate (all-equal) input yields a single bucket.
    """
    if num_buckets < 1:
        raise DataError("num_buckets must be >= 1")
    vals = np.asarray(values, dtype=np.float64)
    if vals.size == 0:
        raise DataError("cannot bucketize an empty value list")
    lo, hi = float(vals.min()), float(vals.max())
    edges = [lo]
    for i in range(1, num_buckets):
        q = float(np.quantile(vals, i / num_buckets, method="higher"))
        if q > edges[-1] and q < hi:
            edges.append(q)
    if hi > edges[-1]:
        edges.append(hi)
    labels = _interval_labels(edges)
    return BucketSpec(feature_name="", labels=labels, boundaries=tuple(edges))


def _fmt_edge(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.6g}"


def _interval_labels(edges: Sequence[float]) -> tuple[str, ...]:
    if len(edges) == 1:
        return (f"[{_fmt_edge(edges[0])}, {_fmt_edge(edges[0])}]",)
    labels = []
    for i in range(len(edges) - 1):
        closer = "]" if i == len(edges) - 2 else ")"
        labels.append(f"[{_fmt_edge(edges[i])}, {_fmt_edge(edges[i + 1])}{closer}")
    return tuple(labels)


def interval_label_for(spec: BucketSpec, value: float) -> str:
    """Label of the interval containing ``value`` (clamped to the outer bins)."""
    edges = spec.boundaries
    if edges is None:
        raise DataError(f"{spec.feature_name}: not an interval bucketing")
    if len(edges) == 1:
        return spec.labels[0]
    idx = int(np.searchsorted(edges, value, side="right")) - 1
    idx = min(max(idx, 0), len(spec.labels) - 1)
    return spec.labels[idx]


def _collapse_rare_labels(
    raw: dict[str, str], cap: int | None
) -> tuple[tuple[str, ...], dict[str, str]]:
    """Order labels by frequency and collapse beyond-cap labels into OTHER."""
    counts = Counter(raw.values())
    ordered = sorted(counts, key=lambda lb: (-counts[lb], lb))
    if cap is None or len(ordered) <= cap:
        return tuple(ordered), dict(raw)
    keep = set(ordered[: cap - 1])
    collapsed = {
        rid: (lb if lb in keep else OTHER_LABEL) for rid, lb in raw.items()
    }
    labels = tuple(ordered[: cap - 1]) + (OTHER_LABEL,)
    return labels, collapsed


def _numeric_assignment(
    name: str,
    values: dict[str, float | None],
    num_buckets: int,
) -> tuple[BucketSpec, BucketAssignment]:
    known = [v for v in values.values() if v is not None]
    if not known:
        spec = BucketSpec(feature_name=name, labels=(UNKNOWN_LABEL,))
        return spec, BucketAssignment(name, {rid: UNKNOWN_LABEL for rid in values})
    base = bucketize_continuous(known, num_buckets)
    assignment = {}
    used: set[str] = set()
    for rid, v in values.items():
        if v is None:
            label = UNKNOWN_LABEL
        else:
            label = interval_label_for(base, v)
        assignment[rid] = label
        used.add(label)
    labels = tuple(lb for lb in base.labels if lb in used)
    if UNKNOWN_LABEL in used:
        labels = labels + (UNKNOWN_LABEL,)
    spec = BucketSpec(feature_name=name, labels=labels, boundaries=base.boundaries)
    return spec, BucketAssignment(name, assignment)


def assign_builtin(
    records: SystemOutput, feature: BuiltinFeature
) -> tuple[BucketSpec, BucketAssignment]:
    """Assign every record a bucket label for one built-in feature."""
    kind = feature.kind
    recs = records.records

    if kind in _NUMERIC_KINDS:
        values: dict[str, float | None] = {}
        for rec in recs:
            values[rec.id] = _numeric_value(rec, feature)
        return _numeric_assignment(
            kind, values, feature.num_buckets or DEFAULT_NUM_BUCKETS
        )

    raw: dict[str, str] = {rec.id: _label_value(rec, feature) for rec in recs}
    if kind == "relation-label":
        # one bucket per distinct relation; num_buckets acts as a collapse cap
        labels, collapsed = _collapse_rare_labels(raw, feature.num_buckets)
        return (
            BucketSpec(feature_name=kind, labels=labels),
            BucketAssignment(kind, collapsed),
        )
    labels = tuple(sorted(set(raw.values())))
    return BucketSpec(feature_name=kind, labels=labels), BucketAssignment(kind, raw)


def _numeric_value(rec: ExampleRecord, feature: BuiltinFeature) -> float | None:
    kind = feature.kind
    if kind == "head-length":
        return float(entity_token_count(rec.head))
    if kind == "tail-length":
        return float(entity_token_count(rec.tail))
    stats = feature.stats
    assert stats is not None
    if kind == "relation-frequency":
        if not stats.vocab.has_relation(rec.relation):
            return None
        count = stats.relation_frequency.get(stats.vocab.relation_id(rec.relation))
        return None if count is None else float(count)
    label = rec.head if kind == "head-frequency" else rec.tail
    if not stats.vocab.has_entity(label):
        return None
    count = stats.entity_frequency.get(stats.vocab.entity_id(label))
    return None if count is None else float(count)


def _label_value(rec: ExampleRecord, feature: BuiltinFeature) -> str:
    kind = feature.kind
    if kind == "relation-label":
        return rec.relation
    if kind == "relation-symmetry":
        assert feature.symmetric_relations is not None
        return "symmetric" if rec.relation in feature.symmetric_relations else "asymmetric"
    if kind == "relation-cardinality":
        stats = feature.stats
        assert stats is not None
        if not stats.vocab.has_relation(rec.relation):
            return UNKNOWN_LABEL
        rid = stats.vocab.relation_id(rec.relation)
        if rid not in stats.per_relation:
            return UNKNOWN_LABEL
        return classify_relation_cardinality(stats, rid)
    # type-hierarchy features: the map lists levels general -> specific
    assert feature.type_map is not None
    types = feature.type_map.get(rec.tail)
    if not types:
        return UNKNOWN_LABEL
    if kind == "entity-type-level":
        # the most specific level available, as a level index
        return str(len(types))
    level = 1 if kind == "tail-type-level-1" else 2
    if len(types) < level:
        return UNKNOWN_LABEL
    return types[level - 1]


def resolve_custom_feature(
    s: SystemOutput, name: str
) -> tuple[BucketSpec, BucketAssignment]:
    """Bucketize records by a feature declared in the header.

    string/number dtypes use the attached values as labels (with the
    num_buckets collapse cap); continuous dtype cuts values into quantile
    intervals with the declared num_buckets.
    """
    fd = s.header.custom_features.get(name)
    if fd is None:
        raise ConfigurationError(f"feature {name!r} not declared in header")
    if fd.dtype == "continuous":
        values: dict[str, float | None] = {}
        for rec in s.records:
            v = rec.features.get(name)
            values[rec.id] = float(v) if v is not None else None
        return _numeric_assignment(name, values, fd.num_buckets)
    raw: dict[str, str] = {}
    for rec in s.records:
        v = rec.features.get(name)
        if v is None:
            raw[rec.id] = UNKNOWN_LABEL
        elif fd.dtype == "number":
            raw[rec.id] = _fmt_edge(float(v))
        else:
            raw[rec.id] = str(v)
    labels, collapsed = _collapse_rare_labels(raw, fd.num_buckets)
    return BucketSpec(feature_name=name, labels=labels), BucketAssignment(name, collapsed)


def partition(
    records: SystemOutput, assignment: BucketAssignment
) -> dict[str, list[str]]:
    """Group record ids by bucket label; groups are disjoint and cover all records."""
    groups: dict[str, list[str]] = {}
    for rec in records.records:
        label = assignment.by_record.get(rec.id)
        if label is None:
            raise DataError(
                f"record {rec.id!r} has no bucket under {assignment.feature_name!r}"
            )
        groups.setdefault(label, []).append(rec.id)
    return groups
