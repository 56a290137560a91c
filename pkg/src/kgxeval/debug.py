"""Debugging embedding models on the relation-symmetry bucket.

The pipeline mines *strict symmetry violations*: triples (h, r, t) whose
reverse (t, r, h) sits in the training set and is predicted at rank one,
while the forward query (h, r, ?) ranks t worse than one.  Ten violations
form the debugging set, the rest the debugging test set.

Two repair strategies are run side by side:

  naive      intensive fine-tuning on the debugging set alone: repeat one
             fine-tuning epoch until every debugging triple reaches rank one
             (or an epoch cap).  Entity embeddings stay frozen -- updating
             them would not generalize to held-out entities -- so the entity
             table is bit-identical before and after.
  in-danger  collect up to twenty training triples that were rank one under
             the original model but fell after the naive round, then rerun
             intensive fine-tuning from the *original* parameters on the
             debugging set plus these anchors.

All ranks in this module are filtered against the training set (reverse
triples would otherwise crowd the top ranks); the original-test evaluation
filters against train + test.  Queries are tail-direction, matching the
(h, r, ?) orientation of the mined violations.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from kgxeval.data import Triple, TripleSet
from kgxeval.errors import InsufficientViolationsError, TrainingError
from kgxeval.metrics import Metric, TieStrategy, aggregate
from kgxeval.models import (
    FilterIndex,
    KgeModel,
    TrainConfig,
    _epoch_pass,
    _make_optimizer,
    _wrap_phases,
    evaluate_to_system_output,
    rank_of,
)
from kgxeval.sysout import SystemOutput

log = logging.getLogger(__name__)

DEBUG_METRICS = ("hits@1", "hits@5", "hits@10", "mr", "mrr")
VARIANTS = ("before", "naive", "in-danger")
EVAL_SETS = ("debugging-test", "original-test")

EventHook = Callable[[str, dict], None]


@dataclass(frozen=True)
class DebugConfig:
    debug_set_size: int = 10
    in_danger_size: int = 20
    finetune_lr: float = 0.01
    epoch_cap: int = 500
    seed: int = 0
    # in-danger scan looks at most at scan_cap_factor * in_danger_size
    # shuffled training triples (full-train rank checks are the hotspot)
    scan_cap_factor: int = 50
    batch_size: int = 64
    negatives_per_positive: int = 5

    def __post_init__(self):
        if self.debug_set_size < 1 or self.in_danger_size < 1:
            raise ValueError("set sizes must be positive")
        if self.epoch_cap < 1:
            raise ValueError("epoch_cap must be >= 1")


@dataclass(frozen=True)
class ViolationRecord:
    forward: Triple
    forward_rank: float  # > 1
    reverse_rank: float  # 1 by construction
    reverse_in_train: bool = True
    forward_in_train: bool = False


@dataclass(frozen=True)
class ViolationScan:
    by_relation: dict[int, tuple[ViolationRecord, ...]]
    most_violated: int | None

    def count(self, relation: int) -> int:
        return len(self.by_relation.get(relation, ()))


def find_symmetry_violations(
    m: KgeModel,
    train: TripleSet,
    relation: int | None = None,
    tie: TieStrategy = TieStrategy.REALISTIC,
    relations: Sequence[int] | frozenset[int] | None = None,
) -> ViolationScan:
    """Mine strict symmetry violations from reversals of training triples.

    Candidates are the (deduplicated) reversals (h, r, t) of training triples
    (t, r, h); a candidate is a violation when the reverse is ranked one and
    the forward gold worse than one, both filtered against train.  Violations
    come back grouped by relation together with the argmax relation by count.

    ``relations`` scopes mining to a relation subset -- pass the
    symmetric-relation list to carve the violation sub-bucket out of the
    symmetry bucket (every reversal of a memorized triple of an asymmetric
    relation also "violates symmetry", which swamps the counts otherwise).
    """
    findex = FilterIndex(train)
    ent64 = m.entity_table.astype(np.float64)
    rel64 = m.relation_table.astype(np.float64)
    scope = None if relations is None else set(relations)
    train_set = train.as_set()
    by_relation: dict[int, list[ViolationRecord]] = {}
    seen: set[Triple] = set()
    for t, r, h in train.triples:
        if relation is not None and r != relation:
            continue
        if scope is not None and r not in scope:
            continue
        if h == t:
            continue
        forward = Triple(h, r, t)
        if forward in seen:
            continue
        seen.add(forward)
        reverse_rank = rank_of(m, Triple(t, r, h), "tail", findex, tie, ent64, rel64)
        if reverse_rank > 1.0:
            continue
        forward_rank = rank_of(m, forward, "tail", findex, tie, ent64, rel64)
        if forward_rank <= 1.0:
            continue
        by_relation.setdefault(r, []).append(
            ViolationRecord(
                forward=forward,
                forward_rank=forward_rank,
                reverse_rank=reverse_rank,
                reverse_in_train=True,
                forward_in_train=forward in train_set,
            )
        )
    most = None
    if by_relation:
        most = min(by_relation, key=lambda rid: (-len(by_relation[rid]), rid))
    return ViolationScan(
        by_relation={r: tuple(v) for r, v in by_relation.items()},
        most_violated=most,
    )


def split_debug_sets(
    violations: Sequence[ViolationRecord], config: DebugConfig
) -> tuple[list[ViolationRecord], list[ViolationRecord]]:
    """Split violations into a debugging set of ``debug_set_size`` and the rest.

    Seeded uniform sampling without replacement; the two sets are disjoint and
    together cover all violations.  Requires strictly more violations than
    the debugging-set size so the test side is nonempty.
    """
    if len(violations) <= config.debug_set_size:
        raise InsufficientViolationsError(
            f"need more than {config.debug_set_size} violations, got {len(violations)}"
        )
    rng = np.random.default_rng([config.seed, 1])
    chosen = set(rng.choice(len(violations), size=config.debug_set_size,
                            replace=False).tolist())
    debug_set = [violations[i] for i in sorted(chosen)]
    debug_test = [v for i, v in enumerate(violations) if i not in chosen]
    return debug_set, debug_test


def intensive_finetune(
    m: KgeModel,
    examples: Sequence[Triple],
    train: TripleSet,
    config: DebugConfig,
) -> tuple[KgeModel, bool, int]:
    """Fine-tune relation parameters until every example reaches rank one.

    Entity embeddings are frozen: the returned model's entity table is the
    same bytes as the input's.  Each loop iteration runs one fine-tuning
    epoch over ``examples`` (training loss restricted to them, fresh
    optimizer state) followed by a filtered-rank check against train; the
    loop stops when all examples are at rank one or after ``epoch_cap``
    epochs.  Returns (model, converged, epochs_run).
    """
    if not examples:
        raise ValueError("examples must be nonempty")
    findex = FilterIndex(train)
    ent64 = m.entity_table.astype(np.float64)
    rel64 = m.relation_table.astype(np.float64)

    def all_rank_one(model: KgeModel) -> bool:
        # check against the model's own (float32) tables, not the float64
        # working copy, so convergence reflects what callers will observe
        check_rel = model.relation_table.astype(np.float64)
        return all(
            rank_of(model, tr, "tail", findex, TieStrategy.REALISTIC,
                    ent64, check_rel) <= 1.0
            for tr in examples
        )

    if all_rank_one(m):
        return m, True, 0

    tconf = TrainConfig(
        epochs=1,
        batch_size=config.batch_size,
        negatives_per_positive=config.negatives_per_positive,
        learning_rate=config.finetune_lr,
        dim=m.dim,
        seed=config.seed,
        optimizer="adagrad",
    )
    rng = np.random.default_rng([config.seed, 2])
    positives = np.asarray(examples, dtype=np.int64)
    opt_ent = _make_optimizer(ent64.shape, tconf)  # never stepped; entities frozen
    opt_rel = _make_optimizer(rel64.shape, tconf)
    current = m
    converged = False
    epochs_run = 0
    for epoch in range(1, config.epoch_cap + 1):
        loss = _epoch_pass(m.kind, ent64, rel64, positives, tconf, rng,
                           opt_ent, opt_rel, update_entities=False)
        if not np.isfinite(loss):
            raise TrainingError("fine-tuning loss became non-finite", epoch=epoch)
        epochs_run = epoch
        rel32 = rel64.astype(np.float32)
        if m.kind == "rotate":
            rel32 = _wrap_phases(rel32)
        current = replace(m, relation_table=rel32)
        if all_rank_one(current):
            converged = True
            break
    log.info("intensive fine-tune: %d epochs, converged=%s", epochs_run, converged)
    return current, converged, epochs_run


def collect_in_danger(
    m_orig: KgeModel,
    m_naive: KgeModel,
    train: TripleSet,
    config: DebugConfig,
    exclude: Sequence[Triple] = (),
) -> list[Triple]:
    """Training triples rank-one under the original model whose rank fell.

    Scans a seeded shuffle of the training triples, keeping those with
    filtered rank one under ``m_orig`` but worse under ``m_naive``, skipping
    anything in ``exclude`` (the debugging set).  Stops at
    ``in_danger_size`` hits or after the scan cap; may return fewer.
    """
    findex = FilterIndex(train)
    excluded = set(exclude)
    ent_o = m_orig.entity_table.astype(np.float64)
    rel_o = m_orig.relation_table.astype(np.float64)
    ent_n = m_naive.entity_table.astype(np.float64)
    rel_n = m_naive.relation_table.astype(np.float64)
    rng = np.random.default_rng([config.seed, 3])
    order = rng.permutation(len(train.triples))
    cap = config.scan_cap_factor * config.in_danger_size
    hits: list[Triple] = []
    for idx in order[:cap]:
        triple = train.triples[int(idx)]
        if triple in excluded:
            continue
        r_orig = rank_of(m_orig, triple, "tail", findex,
                         TieStrategy.REALISTIC, ent_o, rel_o)
        if r_orig > 1.0:
            continue
        r_naive = rank_of(m_naive, triple, "tail", findex,
                          TieStrategy.REALISTIC, ent_n, rel_n)
        if r_naive > 1.0:
            hits.append(triple)
            if len(hits) >= config.in_danger_size:
                break
    return hits


@dataclass(frozen=True)
class DebugReport:
    """Before/naive/in-danger metric cells on both evaluation sets."""

    relation: str
    cells: dict[str, dict[str, dict[str, float]]]  # variant -> set -> metric -> value
    converged: dict[str, bool]
    violation_counts: dict[str, int]  # relation label -> count
    debug_set_size: int
    debug_test_size: int
    in_danger_count: int

    def to_dict(self) -> dict:
        return {
            "schema_version": "1.0",
            "kind": "debug_report",
            "relation": self.relation,
            "cells": self.cells,
            "converged": self.converged,
            "violation_counts": self.violation_counts,
            "debug_set_size": self.debug_set_size,
            "debug_test_size": self.debug_test_size,
            "in_danger_count": self.in_danger_count,
        }


@dataclass(frozen=True)
class DebugSessionResult:
    report: DebugReport
    models: dict[str, KgeModel]
    system_outputs: dict[str, SystemOutput]
    debug_set: tuple[Triple, ...]
    debug_test: tuple[Triple, ...]
    in_danger: tuple[Triple, ...]
    skipped_relations: dict[str, int] = field(default_factory=dict)


def _metric_cells(ranks: Sequence[float]) -> dict[str, float]:
    return {name: aggregate(Metric.from_name(name), ranks) for name in DEBUG_METRICS}


def _ranks_for(model: KgeModel, triples: Sequence[Triple],
               findex: FilterIndex) -> list[float]:
    ent64 = model.entity_table.astype(np.float64)
    rel64 = model.relation_table.astype(np.float64)
    return [
        rank_of(model, tr, "tail", findex, TieStrategy.REALISTIC, ent64, rel64)
        for tr in triples
    ]


def _table_digest(m: KgeModel) -> str:
    h = hashlib.sha256()
    h.update(m.entity_table.tobytes())
    h.update(m.relation_table.tobytes())
    return h.hexdigest()


def run_debug_session(
    m: KgeModel,
    train: TripleSet,
    test: TripleSet,
    relation: int | str | None = None,
    config: DebugConfig | None = None,
    on_event: EventHook | None = None,
    relations: Sequence[int] | frozenset[int] | None = None,
) -> DebugSessionResult:
    """Run the full two-strategy debugging protocol on one relation.

    Mines violations (within ``relations`` when given, e.g. the symmetric
    relations; or just ``relation``; or everywhere), debugs the relation with
    the most violations, and reports before/naive/in-danger metrics on the
    debugging test set and the original test set.  Relations without enough
    violations to fill a debugging set are skipped; if none remain,
    :class:`InsufficientViolationsError` is raised.

    ``on_event`` receives ("finetune_start", payload) before each fine-tuning
    round; the payload's base-model digest makes it checkable that the
    in-danger round starts from the original parameters.
    """
    config = config or DebugConfig()
    if isinstance(relation, str):
        relation = train.vocab.relation_id(relation)
    scan = find_symmetry_violations(m, train, relation, relations=relations)
    vocab = train.vocab
    counts = {vocab.relation_label(r): len(v) for r, v in scan.by_relation.items()}
    eligible = {
        r: v for r, v in scan.by_relation.items() if len(v) > config.debug_set_size
    }
    skipped = {
        vocab.relation_label(r): len(v)
        for r, v in scan.by_relation.items()
        if r not in eligible
    }
    if relation is not None:
        if relation not in eligible:
            raise InsufficientViolationsError(
                f"relation {vocab.relation_label(relation)!r} has "
                f"{scan.count(relation)} violations; need more than "
                f"{config.debug_set_size}"
            )
        chosen = relation
    else:
        if not eligible:
            raise InsufficientViolationsError(
                "no relation has enough symmetry violations to fill a debugging set"
            )
        chosen = min(eligible, key=lambda rid: (-len(eligible[rid]), rid))

    debug_recs, test_recs = split_debug_sets(eligible[chosen], config)
    debug_triples = [v.forward for v in debug_recs]
    debug_test_triples = [v.forward for v in test_recs]

    train_index = FilterIndex(train)
    eval_index = FilterIndex(list(train.triples) + list(test.triples))

    def emit(name: str, payload: dict):
        if on_event is not None:
            on_event(name, payload)

    orig_digest = _table_digest(m)

    emit("finetune_start", {"variant": "naive", "base_digest": orig_digest})
    naive_model, naive_converged, naive_epochs = intensive_finetune(
        m, debug_triples, train, config
    )
    in_danger = collect_in_danger(m, naive_model, train, config,
                                  exclude=debug_triples)
    emit("finetune_start", {"variant": "in-danger", "base_digest": _table_digest(m)})
    indanger_model, indanger_converged, indanger_epochs = intensive_finetune(
        m, list(debug_triples) + in_danger, train, config
    )

    variants = {"before": m, "naive": naive_model, "in-danger": indanger_model}
    cells: dict[str, dict[str, dict[str, float]]] = {}
    sysouts: dict[str, SystemOutput] = {}
    for name, model in variants.items():
        cells[name] = {
            "debugging-test": _metric_cells(
                _ranks_for(model, debug_test_triples, train_index)
            ),
            "original-test": _metric_cells(
                _ranks_for(model, list(test.triples), eval_index)
            ),
        }
        sysouts[name] = evaluate_to_system_output(
            model, test, filter_triples=list(train.triples) + list(test.triples),
            directions="tail",
            system_name=f"{m.kind}-{name}",
            dataset_name="debug-session",
        )

    report = DebugReport(
        relation=vocab.relation_label(chosen),
        cells=cells,
        converged={"naive": naive_converged, "in-danger": indanger_converged},
        violation_counts=counts,
        debug_set_size=len(debug_triples),
        debug_test_size=len(debug_test_triples),
        in_danger_count=len(in_danger),
    )
    log.info(
        "debug session on %r: naive %d epochs (converged=%s), "
        "in-danger %d epochs (converged=%s), %d anchors",
        report.relation, naive_epochs, naive_converged,
        indanger_epochs, indanger_converged, len(in_danger),
    )
    return DebugSessionResult(
        report=report,
        models=variants,
        system_outputs=sysouts,
        debug_set=tuple(debug_triples),
        debug_test=tuple(debug_test_triples),
        in_danger=tuple(in_danger),
        skipped_relations=skipped,
    )
