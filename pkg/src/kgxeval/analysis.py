"""Single-system analysis reports and multi-system comparison.

A single analysis breaks each metric down over the buckets of each requested
feature, attaching confidence intervals where the bucket is large enough.
Because every metric is a plain mean of per-example values, the overall value
always equals the size-weighted mean of the bucket values (the decomposition
invariant; checked to 1e-9 in the tests).

A comparison ranks two or more systems overall and per bucket (competition
ranking: tied systems share the best rank) and reports, per system, the
fraction of buckets whose ranking agrees with the overall ranking (``b_eq``)
versus disagrees (``b_neq``); the two always sum to exactly 1.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from kgxeval.buckets import (
    BUILTIN_KINDS,
    BucketAssignment,
    BucketSpec,
    BuiltinFeature,
    assign_builtin,
    partition,
    resolve_custom_feature,
)
from kgxeval.confidence import CiConfig, ConfidenceInterval
from kgxeval.data import GraphStats
from kgxeval.errors import ComparabilityError, ConfigurationError, DataError, NotFoundError
from kgxeval.metrics import DEFAULT_METRIC_NAMES, Metric
from kgxeval.sysout import ExampleRecord, SystemOutput

REPORT_SCHEMA_VERSION = "1.0"
DEFAULT_SAMPLE_CAP = 20


@dataclass(frozen=True)
class FeatureResources:
    """Resources handed to built-in features during analysis."""

    stats: GraphStats | None = None
    symmetric_relations: frozenset[str] | None = None
    type_map: Mapping[str, tuple[str, ...]] | None = None
    num_buckets: int | None = None


def resolve_feature(
    s: SystemOutput,
    name: str,
    resources: FeatureResources | None = None,
) -> tuple[BucketSpec, BucketAssignment]:
    """Resolve a feature name to a bucket assignment over ``s``.

    Custom features declared in the header win; otherwise the name must be a
    built-in kind, for which the needed resources must be present.
    """
    if name in s.header.custom_features:
        return resolve_custom_feature(s, name)
    if name in BUILTIN_KINDS:
        res = resources or FeatureResources()
        feature = BuiltinFeature(
            kind=name,
            stats=res.stats,
            symmetric_relations=res.symmetric_relations,
            type_map=res.type_map,
            num_buckets=res.num_buckets,
        )
        return assign_builtin(s, feature)
    raise ConfigurationError(
        f"feature {name!r} is neither declared in the header nor a built-in"
    )


@dataclass(frozen=True)
class BucketReport:
    feature_name: str
    label: str
    n: int
    values: dict[str, float]
    intervals: dict[str, ConfidenceInterval | None]
    sample_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "values": self.values,
            "intervals": {
                m: (ci.to_dict() if ci is not None else None)
                for m, ci in self.intervals.items()
            },
            "sample_ids": list(self.sample_ids),
        }


@dataclass(frozen=True)
class SingleAnalysisReport:
    system_name: str
    dataset_name: str
    rank_basis: str
    record_count: int
    record_ids_digest: str
    metrics: tuple[str, ...]
    overall: dict[str, float]
    overall_intervals: dict[str, ConfidenceInterval | None]
    features: dict[str, tuple[BucketReport, ...]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "single_analysis",
            "system_name": self.system_name,
            "dataset_name": self.dataset_name,
            "rank_basis": self.rank_basis,
            "record_count": self.record_count,
            "record_ids_digest": self.record_ids_digest,
            "metrics": list(self.metrics),
            "overall": {
                "values": self.overall,
                "intervals": {
                    m: (ci.to_dict() if ci is not None else None)
                    for m, ci in self.overall_intervals.items()
                },
            },
            "features": {
                fname: [b.to_dict() for b in buckets]
                for fname, buckets in self.features.items()
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True,
                          separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "SingleAnalysisReport":
        if d.get("kind") != "single_analysis":
            raise DataError("not a single_analysis report")
        features = {}
        for fname, buckets in d.get("features", {}).items():
            features[fname] = tuple(
                BucketReport(
                    feature_name=fname,
                    label=b["label"],
                    n=b["n"],
                    values=dict(b["values"]),
                    intervals={
                        m: (ConfidenceInterval.from_dict(ci) if ci is not None else None)
                        for m, ci in b["intervals"].items()
                    },
                    sample_ids=tuple(b.get("sample_ids", ())),
                )
                for b in buckets
            )
        return cls(
            system_name=d["system_name"],
            dataset_name=d["dataset_name"],
            rank_basis=d["rank_basis"],
            record_count=d["record_count"],
            record_ids_digest=d["record_ids_digest"],
            metrics=tuple(d["metrics"]),
            overall=dict(d["overall"]["values"]),
            overall_intervals={
                m: (ConfidenceInterval.from_dict(ci) if ci is not None else None)
                for m, ci in d["overall"]["intervals"].items()
            },
            features=features,
        )

    @classmethod
    def from_json(cls, text: str | bytes) -> "SingleAnalysisReport":
        return cls.from_dict(json.loads(text))


def record_ids_digest(ids: Sequence[str]) -> str:
    h = hashlib.sha256()
    for rid in sorted(ids):
        h.update(rid.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


def _metric_list(metrics: Sequence[str | Metric] | None) -> list[Metric]:
    names = metrics if metrics is not None else DEFAULT_METRIC_NAMES
    out = []
    for m in names:
        out.append(m if isinstance(m, Metric) else Metric.from_name(m))
    return out


def single_analysis(
    s: SystemOutput,
    features: Sequence[str] | None = None,
    metrics: Sequence[str | Metric] | None = None,
    ci: CiConfig | None = None,
    resources: FeatureResources | None = None,
    sample_cap: int = DEFAULT_SAMPLE_CAP,
) -> SingleAnalysisReport:
    """Overall and per-bucket metric values, with intervals, for one system.

    ``features`` defaults to all custom features declared in the header.
    Empty buckets never appear (a bucket exists only if some record landed in
    it).  Raises :class:`ConfigurationError` when a feature cannot be
    resolved and :class:`DataError` for an empty system output.
    """
    if len(s.records) == 0:
        raise DataError("cannot analyze an empty system output")
    ci = ci or CiConfig()
    metric_objs = _metric_list(metrics)
    if features is None:
        features = sorted(s.header.custom_features)

    ranks = np.asarray(s.ranks(), dtype=np.float64)
    ids = [rec.id for rec in s.records]
    index_of = {rid: i for i, rid in enumerate(ids)}

    per_example = {m.name: m.per_example(ranks) for m in metric_objs}

    overall: dict[str, float] = {}
    overall_intervals: dict[str, ConfidenceInterval | None] = {}
    for m in metric_objs:
        vals = per_example[m.name]
        overall[m.name] = float(vals.mean())
        overall_intervals[m.name] = _clamped_interval(ci, vals, m)

    feature_reports: dict[str, tuple[BucketReport, ...]] = {}
    for fname in features:
        spec, assignment = resolve_feature(s, fname, resources)
        groups = partition(s, assignment)
        buckets = []
        # keep the spec's label order, then any stragglers alphabetically
        ordered = [lb for lb in spec.labels if lb in groups]
        ordered += sorted(set(groups) - set(spec.labels))
        for label in ordered:
            rids = groups[label]
            idx = np.asarray([index_of[rid] for rid in rids], dtype=np.intp)
            values = {}
            intervals = {}
            for m in metric_objs:
                vals = per_example[m.name][idx]
                values[m.name] = float(vals.mean())
                intervals[m.name] = _clamped_interval(ci, vals, m)
            buckets.append(
                BucketReport(
                    feature_name=fname,
                    label=label,
                    n=len(rids),
                    values=values,
                    intervals=intervals,
                    sample_ids=tuple(sorted(rids)[:sample_cap]),
                )
            )
        feature_reports[fname] = tuple(buckets)

    return SingleAnalysisReport(
        system_name=s.header.system_name,
        dataset_name=s.header.dataset_name,
        rank_basis=s.header.rank_basis,
        record_count=len(s.records),
        record_ids_digest=record_ids_digest(ids),
        metrics=tuple(m.name for m in metric_objs),
        overall=overall,
        overall_intervals=overall_intervals,
        features=feature_reports,
    )


def _clamped_interval(ci: CiConfig, vals: np.ndarray, metric: Metric):
    interval = ci.interval(vals)
    if interval is None:
        return None
    low, high = metric.clamp_interval(interval.low, interval.high)
    return ConfidenceInterval(low=low, high=high, level=interval.level,
                              method=interval.method, n=interval.n)


@dataclass(frozen=True)
class ComparisonReport:
    systems: tuple[str, ...]
    metric: str
    overall_values: dict[str, float]
    overall_ranking: dict[str, int]
    buckets: tuple[dict, ...]  # {feature, label, n, values: {sys}, ranks: {sys}}
    per_system: dict[str, dict[str, float]]  # sys -> {"b_eq", "b_neq"}

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": "comparison",
            "systems": list(self.systems),
            "metric": self.metric,
            "overall_values": self.overall_values,
            "overall_ranking": self.overall_ranking,
            "buckets": list(self.buckets),
            "per_system": self.per_system,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True,
                          separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        if d.get("kind") != "comparison":
            raise DataError("not a comparison report")
        return cls(
            systems=tuple(d["systems"]),
            metric=d["metric"],
            overall_values=dict(d["overall_values"]),
            overall_ranking=dict(d["overall_ranking"]),
            buckets=tuple(d["buckets"]),
            per_system={k: dict(v) for k, v in d["per_system"].items()},
        )


def competition_ranks(values: Mapping[str, float], higher_is_better: bool) -> dict[str, int]:
    """Competition ranking (1, 1, 3): rank = 1 + number of strictly better systems."""
    ranks = {}
    for name, v in values.items():
        if higher_is_better:
            better = sum(1 for w in values.values() if w > v)
        else:
            better = sum(1 for w in values.values() if w < v)
        ranks[name] = 1 + better
    return ranks


def compare_systems(
    reports: Sequence[SingleAnalysisReport],
    metric: str | Metric,
) -> ComparisonReport:
    """Rank systems overall and per bucket; account for rank flips.

    All reports must describe the same evaluation: same dataset, same record
    ids, same rank basis, and the same feature/bucket inventory -- otherwise a
    :class:`ComparabilityError` is raised.  A bucket counts toward ``b_eq``
    for a system exactly when its competition rank there equals the system's
    overall rank.
    """
    if len(reports) < 2:
        raise ComparabilityError("need at least 2 reports to compare")
    metric_obj = metric if isinstance(metric, Metric) else Metric.from_name(metric)
    mname = metric_obj.name

    names = [r.system_name for r in reports]
    if len(set(names)) != len(names):
        raise ComparabilityError("system names must be distinct")
    first = reports[0]
    for r in reports[1:]:
        if r.dataset_name != first.dataset_name:
            raise ComparabilityError(
                f"dataset mismatch: {r.dataset_name!r} vs {first.dataset_name!r}"
            )
        if r.rank_basis != first.rank_basis:
            raise ComparabilityError(
                f"rank basis mismatch: {r.rank_basis!r} vs {first.rank_basis!r}"
            )
        if r.record_ids_digest != first.record_ids_digest:
            raise ComparabilityError("record-id sets differ between systems")
    inventory = _bucket_inventory(first)
    for r in reports[1:]:
        if _bucket_inventory(r) != inventory:
            raise ComparabilityError("feature/bucket inventories differ between systems")
    for r in reports:
        if mname not in r.overall:
            raise ComparabilityError(f"report {r.system_name!r} lacks metric {mname!r}")

    overall_values = {r.system_name: r.overall[mname] for r in reports}
    overall_ranking = competition_ranks(overall_values, metric_obj.higher_is_better)

    bucket_rows = []
    eq_counts = {name: 0 for name in names}
    total_buckets = 0
    for feature, label, _n in inventory:
        values = {}
        for r in reports:
            bucket = next(b for b in r.features[feature] if b.label == label)
            values[r.system_name] = bucket.values[mname]
        ranks = competition_ranks(values, metric_obj.higher_is_better)
        total_buckets += 1
        for name in names:
            if ranks[name] == overall_ranking[name]:
                eq_counts[name] += 1
        bucket_rows.append(
            {"feature": feature, "label": label, "n": _n,
             "values": values, "ranks": ranks}
        )

    per_system = {}
    for name in names:
        if total_buckets == 0:
            raise ComparabilityError("no buckets shared by the compared reports")
        b_eq = eq_counts[name] / total_buckets
        per_system[name] = {"b_eq": b_eq, "b_neq": 1.0 - b_eq}

    return ComparisonReport(
        systems=tuple(names),
        metric=mname,
        overall_values=overall_values,
        overall_ranking=overall_ranking,
        buckets=tuple(bucket_rows),
        per_system=per_system,
    )


def _bucket_inventory(report: SingleAnalysisReport) -> tuple[tuple[str, str, int], ...]:
    rows = []
    for feature in sorted(report.features):
        for bucket in report.features[feature]:
            rows.append((feature, bucket.label, bucket.n))
    return tuple(sorted(rows))


def drill_down(
    s: SystemOutput,
    feature: str,
    label: str,
    offset: int = 0,
    limit: int | None = None,
    resources: FeatureResources | None = None,
) -> list[ExampleRecord]:
    """Page through the records of one bucket, ordered by record id."""
    _spec, assignment = resolve_feature(s, feature, resources)
    groups = partition(s, assignment)
    if label not in groups:
        raise NotFoundError(f"no bucket {label!r} under feature {feature!r}")
    ids = sorted(groups[label])
    if offset < 0 or (limit is not None and limit < 0):
        raise DataError("offset and limit must be non-negative")
    end = None if limit is None else offset + limit
    page = ids[offset:end]
    by_id = {rec.id: rec for rec in s.records}
    return [by_id[rid] for rid in page]
