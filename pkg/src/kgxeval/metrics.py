"""Link-prediction ranking metrics: Hits@k, MRR, MR.

All three metrics are arithmetic means of a per-example value derived from the
gold entity's rank:

    hits@k : 1 if rank <= k else 0
    mrr    : 1 / rank
    mr     : rank

Ranks are reals >= 1.  Integer ranks are the common case; the ``realistic``
tie strategy can produce half-integer ranks (mean position of a tied block)
and every metric accepts them.

Metric names used in reports and on the CLI are lowercase and exact:
``hits@K`` (K a positive integer), ``mrr``, ``mr``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from kgxeval.errors import DataError

DEFAULT_METRIC_NAMES = ("hits@1", "hits@5", "hits@10", "mrr", "mr")

_HITS_RE = re.compile(r"^hits@([1-9][0-9]*)$")


class TieStrategy(str, Enum):
    """How the rank of a gold answer is resolved among same-score candidates.

    optimistic   : best position in the tied block, 1 + #{score > gold}
    pessimistic  : worst position, #{score >= gold}
    realistic    : mean of the two (may be a half-integer)
    """

    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"
    REALISTIC = "realistic"


@dataclass(frozen=True)
class Metric:
    """A metric identity: ``kind`` is one of Hits/MRR/MR, ``k`` only for Hits."""

    kind: str  # "hits" | "mrr" | "mr"
    k: int | None = None

    def __post_init__(self):
        if self.kind not in ("hits", "mrr", "mr"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "hits":
            if self.k is None or self.k < 1:
                raise ValueError("hits metric requires k >= 1")
        elif self.k is not None:
            raise ValueError(f"{self.kind} does not take k")

    @property
    def name(self) -> str:
        return f"hits@{self.k}" if self.kind == "hits" else self.kind

    @property
    def higher_is_better(self) -> bool:
        return self.kind != "mr"

    @classmethod
    def from_name(cls, name: str) -> "Metric":
        m = _HITS_RE.match(name)
        if m:
            return cls("hits", int(m.group(1)))
        if name in ("mrr", "mr"):
            return cls(name)
        raise DataError(f"unknown metric name {name!r} (expected hits@K, mrr, or mr)")

    def per_example(self, ranks: Sequence[float] | np.ndarray) -> np.ndarray:
        """Per-example metric values for an array of ranks."""
        r = np.asarray(ranks, dtype=np.float64)
        if r.size and r.min() < 1:
            raise DataError("ranks must be >= 1")
        if self.kind == "hits":
            return (r <= self.k).astype(np.float64)
        if self.kind == "mrr":
            return 1.0 / r
        return r

    def clamp_interval(self, low: float, high: float) -> tuple[float, float]:
        """Clamp an interval into the metric's value domain."""
        if self.kind == "mr":
            return max(low, 1.0), max(high, 1.0)
        return min(max(low, 0.0), 1.0), min(max(high, 0.0), 1.0)


def aggregate(metric: Metric, ranks: Sequence[float] | np.ndarray) -> float:
    """Aggregate a nonempty list of gold ranks into a single metric value.

    The result is the exact arithmetic mean of the per-example values, so for
    any partition of ``ranks`` into groups the size-weighted mean of group
    aggregates equals the overall aggregate.
    """
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise DataError(f"cannot aggregate {metric.name} over an empty rank list")
    return float(metric.per_example(r).mean())


def rank_from_scores(
    gold: str,
    candidates: Sequence[tuple[str, float]],
    tie: TieStrategy = TieStrategy.REALISTIC,
) -> float:
    """Rank of ``gold`` among scored candidates (higher score = better).

    With ties resolved per ``tie``; optimistic/pessimistic ranks are whole
    numbers, realistic ranks may end in .5.  Raises if gold is absent.
    """
    gold_score = None
    for label, score in candidates:
        if label == gold:
            gold_score = score
            break
    if gold_score is None:
        raise DataError(f"gold entity {gold!r} not among candidates")
    scores = np.asarray([s for _, s in candidates], dtype=np.float64)
    return _rank_of_score(float(gold_score), scores, tie)


def _rank_of_score(gold_score: float, scores: np.ndarray, tie: TieStrategy) -> float:
    optimistic = 1 + int(np.sum(scores > gold_score))
    pessimistic = int(np.sum(scores >= gold_score))
    if tie is TieStrategy.OPTIMISTIC:
        return float(optimistic)
    if tie is TieStrategy.PESSIMISTIC:
        return float(pessimistic)
    return (optimistic + pessimistic) / 2.0


def filtered_rank(
    gold: str,
    candidates: Sequence[tuple[str, float]],
    known_positives: Iterable[str],
    tie: TieStrategy = TieStrategy.REALISTIC,
) -> float:
    """Rank of ``gold`` after removing other known-true answers.

    Candidates whose label is in ``known_positives`` are deleted before
    ranking, except the gold entity itself, which is never filtered.  The
    filtered rank is therefore <= the raw rank under every tie strategy.
    """
    removal = set(known_positives)
    removal.discard(gold)
    kept = [(label, score) for label, score in candidates if label not in removal]
    return rank_from_scores(gold, kept, tie)


def masked_rank(
    scores: np.ndarray,
    gold_index: int,
    filter_mask: np.ndarray | None = None,
    tie: TieStrategy = TieStrategy.REALISTIC,
) -> float:
    """Array variant of :func:`filtered_rank` used by the model evaluator.

    ``scores`` holds one score per candidate entity id; entries where
    ``filter_mask`` is True are excluded from the ranking (the gold index is
    always kept regardless of the mask).
    """
    gold_score = float(scores[gold_index])
    if not np.isfinite(gold_score):
        raise DataError("gold candidate has non-finite score")
    if filter_mask is not None:
        keep = ~filter_mask
        keep[gold_index] = True
        scores = scores[keep]
    return _rank_of_score(gold_score, scores, tie)
