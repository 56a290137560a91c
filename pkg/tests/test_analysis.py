"""Single analysis, comparison accounting, and drill-down paging."""

import numpy as np
import pytest

from kgxeval.analysis import (
    FeatureResources,
    SingleAnalysisReport,
    compare_systems,
    competition_ranks,
    drill_down,
    resolve_feature,
    single_analysis,
)
from kgxeval.buckets import partition
from kgxeval.confidence import CiConfig
from kgxeval.errors import ComparabilityError, ConfigurationError, NotFoundError
from kgxeval.metrics import Metric, aggregate

from conftest import build_sysout

NO_CI = CiConfig(method="none")


class TestSingleAnalysis:
    def test_two_bucket_hand_fixture(self):
        s = build_sysout([1, 2, 5, 11], features={"g": ["lo", "lo", "hi", "hi"]})
        report = single_analysis(s, metrics=["mrr"], ci=NO_CI)
        by_label = {b.label: b for b in report.features["g"]}
        assert by_label["lo"].values["mrr"] == pytest.approx(0.75)
        assert by_label["hi"].values["mrr"] == pytest.approx((1 / 5 + 1 / 11) / 2)
        assert report.overall["mrr"] == pytest.approx(0.4477272727272727)
        # equal-size buckets: overall is the plain mean of the bucket means
        assert report.overall["mrr"] == pytest.approx(
            (by_label["lo"].values["mrr"] + by_label["hi"].values["mrr"]) / 2
        )

    def test_single_bucket_equals_overall(self):
        s = build_sysout([3, 4, 9], features={"g": ["all", "all", "all"]})
        report = single_analysis(s, ci=NO_CI)
        bucket = report.features["g"][0]
        for name in report.metrics:
            assert bucket.values[name] == pytest.approx(report.overall[name])

    def test_decomposition_invariant(self, rng):
        for _ in range(30):
            n = int(rng.integers(2, 120))
            ranks = rng.integers(1, 60, size=n).astype(float)
            labels = [f"b{rng.integers(1, 7)}" for _ in range(n)]
            s = build_sysout(ranks, features={"g": labels})
            report = single_analysis(s, ci=NO_CI)
            for name in report.metrics:
                weighted = sum(
                    b.n * b.values[name] for b in report.features["g"]
                ) / n
                assert abs(report.overall[name] - weighted) < 1e-9

    def test_empty_buckets_omitted(self):
        s = build_sysout([1, 2], features={"g": ["a", "a"]})
        report = single_analysis(s, ci=NO_CI)
        assert [b.label for b in report.features["g"]] == ["a"]

    def test_intervals_present_and_clamped(self):
        s = build_sysout([1] * 30 + [40] * 10, features={"g": ["x"] * 40})
        report = single_analysis(s, metrics=["hits@1", "mr"],
                                 ci=CiConfig(method="ttest"))
        hits_ci = report.overall_intervals["hits@1"]
        assert 0.0 <= hits_ci.low <= hits_ci.high <= 1.0
        mr_ci = report.overall_intervals["mr"]
        assert mr_ci.low >= 1.0

    def test_small_bucket_interval_absent(self):
        s = build_sysout([1, 2, 3], features={"g": ["a", "a", "b"]})
        report = single_analysis(s, metrics=["mrr"],
                                 ci=CiConfig(method="bootstrap", min_bucket_size=5))
        for bucket in report.features["g"]:
            assert bucket.intervals["mrr"] is None

    def test_missing_resource_is_configuration_error(self):
        s = build_sysout([1, 2])
        with pytest.raises(ConfigurationError):
            single_analysis(s, features=["relation-cardinality"], ci=NO_CI)

    def test_builtin_feature_via_resources(self):
        s = build_sysout([1, 2, 3], relations=["a", "b", "a"])
        report = single_analysis(
            s, features=["relation-symmetry"], ci=NO_CI,
            resources=FeatureResources(symmetric_relations=frozenset({"a"})),
        )
        labels = {b.label for b in report.features["relation-symmetry"]}
        assert labels == {"symmetric", "asymmetric"}

    def test_report_json_roundtrip(self, rng):
        ranks = rng.integers(1, 30, size=40).astype(float)
        s = build_sysout(ranks, features={"g": [f"b{i % 3}" for i in range(40)]})
        report = single_analysis(s, ci=CiConfig(method="bootstrap", seed=3))
        again = SingleAnalysisReport.from_json(report.to_json())
        assert again == report
        assert again.to_json() == report.to_json()


class TestCompetitionRanks:
    def test_plain(self):
        assert competition_ranks({"a": 0.9, "b": 0.5, "c": 0.7}, True) \
            == {"a": 1, "b": 3, "c": 2}

    def test_ties_share_best_rank(self):
        assert competition_ranks({"a": 0.5, "b": 0.5, "c": 0.1}, True) \
            == {"a": 1, "b": 1, "c": 3}

    def test_lower_better(self):
        assert competition_ranks({"a": 10.0, "b": 2.0}, False) == {"a": 2, "b": 1}


def two_system_reports(ranks_a, ranks_b, labels):
    sa = build_sysout(ranks_a, features={"g": labels}, system_name="A")
    sb = build_sysout(ranks_b, features={"g": labels}, system_name="B")
    return (single_analysis(sa, ci=NO_CI), single_analysis(sb, ci=NO_CI))


class TestCompareSystems:
    def test_identical_systems_tie_everywhere(self):
        ra, rb = two_system_reports([1, 2, 3, 4], [1, 2, 3, 4],
                                    ["x", "x", "y", "y"])
        comparison = compare_systems([ra, rb], "mrr")
        assert comparison.overall_ranking == {"A": 1, "B": 1}
        for row in comparison.buckets:
            assert row["ranks"] == {"A": 1, "B": 1}
        for name in ("A", "B"):
            assert comparison.per_system[name]["b_eq"] == 1.0

    def test_two_bucket_flip_fixture(self):
        # A wins overall and bucket x; B wins bucket y -> b_eq = 0.5 for both
        ra, rb = two_system_reports([1, 1, 9, 9], [2, 2, 2, 2],
                                    ["x", "x", "y", "y"])
        comparison = compare_systems([ra, rb], "mrr")
        assert comparison.overall_ranking == {"A": 1, "B": 2}
        assert comparison.per_system["A"]["b_eq"] == 0.5
        assert comparison.per_system["B"]["b_eq"] == 0.5

    def test_b_eq_plus_b_neq_exactly_one(self, rng):
        for _ in range(20):
            n = 30
            labels = [f"b{rng.integers(1, 4)}" for _ in range(n)]
            reports = []
            for name in ("s1", "s2", "s3"):
                ranks = rng.integers(1, 40, size=n).astype(float)
                s = build_sysout(ranks, features={"g": labels}, system_name=name)
                reports.append(single_analysis(s, ci=NO_CI))
            comparison = compare_systems(reports, "mrr")
            for acc in comparison.per_system.values():
                assert acc["b_eq"] + acc["b_neq"] == 1.0

    def test_order_invariance(self, rng):
        labels = [f"b{rng.integers(1, 5)}" for _ in range(40)]
        reports = []
        for name in ("s1", "s2", "s3", "s4"):
            ranks = rng.integers(1, 40, size=40).astype(float)
            s = build_sysout(ranks, features={"g": labels}, system_name=name)
            reports.append(single_analysis(s, ci=NO_CI))
        fwd = compare_systems(reports, "mrr")
        rev = compare_systems(list(reversed(reports)), "mrr")
        assert fwd.overall_ranking == rev.overall_ranking
        assert fwd.per_system == rev.per_system
        assert {(r["feature"], r["label"]): r["ranks"] for r in fwd.buckets} \
            == {(r["feature"], r["label"]): r["ranks"] for r in rev.buckets}

    def test_mr_direction_inverts(self):
        # A has better (lower) MR but worse MRR than B
        ra, rb = two_system_reports([2, 2, 2, 2], [1, 1, 9, 9],
                                    ["x", "x", "y", "y"])
        by_mr = compare_systems([ra, rb], "mr")
        by_mrr = compare_systems([ra, rb], "mrr")
        assert by_mr.overall_ranking["A"] == 1 and by_mr.overall_ranking["B"] == 2
        assert by_mrr.overall_ranking["A"] == 2 and by_mrr.overall_ranking["B"] == 1

    def test_mismatched_record_ids_rejected(self):
        sa = build_sysout([1, 2], features={"g": ["x", "x"]}, system_name="A")
        sb = build_sysout([1, 2, 3], features={"g": ["x", "x", "x"]}, system_name="B")
        with pytest.raises(ComparabilityError):
            compare_systems([single_analysis(sa, ci=NO_CI),
                             single_analysis(sb, ci=NO_CI)], "mrr")

    def test_mismatched_rank_basis_rejected(self):
        sa = build_sysout([1, 2], features={"g": ["x", "x"]}, system_name="A")
        sb = build_sysout([1, 2], features={"g": ["x", "x"]}, system_name="B",
                          rank_basis="raw")
        with pytest.raises(ComparabilityError, match="rank basis"):
            compare_systems([single_analysis(sa, ci=NO_CI),
                             single_analysis(sb, ci=NO_CI)], "mrr")

    def test_single_report_rejected(self):
        sa = build_sysout([1], features={"g": ["x"]}, system_name="A")
        with pytest.raises(ComparabilityError):
            compare_systems([single_analysis(sa, ci=NO_CI)], "mrr")

    def test_six_system_structural(self, rng):
        # Table-1-shaped check: six systems, b_eq + b_neq = 1, >= 1 rank flip
        labels = [f"b{i % 6}" for i in range(60)]
        reports = []
        for k in range(6):
            ranks = rng.integers(1, 30, size=60).astype(float)
            s = build_sysout(ranks, features={"g": labels}, system_name=f"model{k}")
            reports.append(single_analysis(s, ci=NO_CI))
        comparison = compare_systems(reports, "mrr")
        assert set(comparison.overall_ranking.values()) <= set(range(1, 7))
        accounting_ok = all(
            acc["b_eq"] + acc["b_neq"] == 1.0
            for acc in comparison.per_system.values()
        )
        assert accounting_ok
        flips = sum(
            1 for row in comparison.buckets
            if row["ranks"] != comparison.overall_ranking
        )
        assert flips >= 1


class TestDrillDown:
    def setup_method(self):
        self.s = build_sysout(
            list(range(1, 11)),
            features={"g": ["even" if i % 2 == 0 else "odd" for i in range(10)]},
        )

    def test_limit_zero(self):
        assert drill_down(self.s, "g", "even", offset=0, limit=0) == []

    def test_offset_beyond_bucket(self):
        assert drill_down(self.s, "g", "even", offset=99, limit=10) == []

    def test_full_iteration_matches_partition(self):
        _spec, assignment = resolve_feature(self.s, "g")
        groups = partition(self.s, assignment)
        records = drill_down(self.s, "g", "odd")
        assert [r.id for r in records] == sorted(groups["odd"])

    def test_stable_ordering_and_paging(self):
        first = drill_down(self.s, "g", "even", offset=0, limit=2)
        second = drill_down(self.s, "g", "even", offset=2, limit=2)
        ids = [r.id for r in first + second]
        assert ids == sorted(ids)
        assert len(set(ids)) == 4

    def test_unknown_bucket(self):
        with pytest.raises(NotFoundError):
            drill_down(self.s, "g", "nope")
