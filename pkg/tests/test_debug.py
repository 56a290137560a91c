"""Symmetry-violation mining, fine-tuning contracts, and the full session."""

import numpy as np
import pytest

from kgxeval.data import Triple, TripleSet, Vocabulary
from kgxeval.debug import (
    DebugConfig,
    EVAL_SETS,
    VARIANTS,
    collect_in_danger,
    find_symmetry_violations,
    intensive_finetune,
    run_debug_session,
    split_debug_sets,
)
from kgxeval.errors import InsufficientViolationsError
from kgxeval.metrics import TieStrategy
from kgxeval.models import FilterIndex, KgeModel, rank_of, scores_for

SESSION_CONFIG = DebugConfig(seed=5, finetune_lr=0.1, epoch_cap=500)


def one_hot_rescal(w: np.ndarray, n_relations: int = 1) -> KgeModel:
    """RESCAL over one-hot entities: score(e_i, r, e_j) is exactly W_r[i, j]."""
    n = w.shape[-1]
    vocab = Vocabulary()
    for i in range(n):
        vocab.entity_id(f"e{i}", add=True)
    for i in range(n_relations):
        vocab.relation_id(f"r{i}", add=True)
    rel = np.asarray(w, dtype=np.float32).reshape(n_relations, n, n)
    return KgeModel("rescal", n, np.eye(n, dtype=np.float32), rel, vocab)


def triple_set(triples, vocab, split="train"):
    return TripleSet(split, tuple(Triple(*t) for t in triples), vocab)


class TestFindViolations:
    def test_hand_built_single_violation(self):
        w = np.zeros((4, 4))
        w[0, 1] = 5.0  # (e0, r0, ?) ranks e1 first: reverse predicted at rank 1
        w[1, 0] = 1.0  # (e1, r0, ?) ranks e2 (3.0) above gold e0: forward rank 2
        w[1, 2] = 3.0
        m = one_hot_rescal(w)
        train = triple_set([(0, 0, 1)], m.vocab)
        scan = find_symmetry_violations(m, train)
        assert scan.most_violated == 0
        violations = scan.by_relation[0]
        assert len(violations) == 1
        v = violations[0]
        assert v.forward == Triple(1, 0, 0)
        assert v.forward_rank == 2.0
        assert v.reverse_rank == 1.0
        assert v.reverse_in_train and not v.forward_in_train

    def test_symmetric_perfect_model_no_violations(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 5.0  # both directions predicted at rank one
        m = one_hot_rescal(w)
        train = triple_set([(0, 0, 1)], m.vocab)
        scan = find_symmetry_violations(m, train)
        assert scan.by_relation == {}
        assert scan.most_violated is None

    def test_relation_filter(self, rescal_model, synth_main):
        scan_all = find_symmetry_violations(rescal_model, synth_main.train)
        some_rel = scan_all.most_violated
        scan_one = find_symmetry_violations(rescal_model, synth_main.train,
                                            relation=some_rel)
        assert set(scan_one.by_relation) == {some_rel}
        assert scan_one.by_relation[some_rel] == scan_all.by_relation[some_rel]

    def test_relations_scope(self, rescal_model, synth_main, symmetric_ids):
        scan = find_symmetry_violations(rescal_model, synth_main.train,
                                        relations=symmetric_ids)
        assert set(scan.by_relation) <= set(symmetric_ids)
        assert scan.most_violated in symmetric_ids

    def test_forward_in_train_flagged(self, rescal_model, synth_main):
        scan = find_symmetry_violations(rescal_model, synth_main.train)
        train_set = synth_main.train.as_set()
        flagged = [v for vs in scan.by_relation.values() for v in vs]
        assert all((v.forward in train_set) == v.forward_in_train for v in flagged)


class TestSplitDebugSets:
    def fake_violations(self, n):
        w = np.zeros((4, 4))
        m = one_hot_rescal(w)
        from kgxeval.debug import ViolationRecord
        return [ViolationRecord(Triple(i % 4, 0, (i + 1) % 4), 2.0, 1.0)
                for i in range(n)]

    def test_eleven_gives_test_of_one(self):
        debug, test = split_debug_sets(self.fake_violations(11), DebugConfig(seed=1))
        assert len(debug) == 10 and len(test) == 1

    def test_same_seed_same_split(self):
        violations = self.fake_violations(40)
        a = split_debug_sets(violations, DebugConfig(seed=9))
        b = split_debug_sets(violations, DebugConfig(seed=9))
        assert a == b

    def test_disjoint_union(self):
        violations = self.fake_violations(77)
        debug, test = split_debug_sets(violations, DebugConfig(seed=4))
        assert len(debug) + len(test) == 77
        ids = {id(v) for v in debug} | {id(v) for v in test}
        assert len(ids) == 77

    def test_too_few_raises(self):
        with pytest.raises(InsufficientViolationsError):
            split_debug_sets(self.fake_violations(10), DebugConfig(seed=1))


class TestIntensiveFinetune:
    def test_already_rank_one_returns_unchanged(self):
        w = np.zeros((4, 4))
        w[0, 1] = 5.0
        m = one_hot_rescal(w)
        train = triple_set([(0, 0, 1)], m.vocab)
        out, converged, epochs = intensive_finetune(
            m, [Triple(0, 0, 1)], train, DebugConfig(seed=1))
        assert converged and epochs == 0
        assert out.relation_table.tobytes() == m.relation_table.tobytes()
        assert out.entity_table.tobytes() == m.entity_table.tobytes()

    def test_entity_table_frozen(self, rescal_model, synth_main, symmetric_ids):
        scan = find_symmetry_violations(rescal_model, synth_main.train,
                                        relations=symmetric_ids)
        violations = scan.by_relation[scan.most_violated]
        examples = [v.forward for v in violations[:10]]
        out, _converged, epochs = intensive_finetune(
            rescal_model, examples, synth_main.train,
            DebugConfig(seed=2, finetune_lr=0.1, epoch_cap=60))
        assert epochs >= 1
        assert out.entity_table.tobytes() == rescal_model.entity_table.tobytes()

    def test_convergence_forces_rank_one(self, rescal_model, synth_main,
                                         symmetric_ids):
        scan = find_symmetry_violations(rescal_model, synth_main.train,
                                        relations=symmetric_ids)
        debug_recs, _rest = split_debug_sets(
            scan.by_relation[scan.most_violated], SESSION_CONFIG)
        examples = [v.forward for v in debug_recs]
        out, converged, _ = intensive_finetune(
            rescal_model, examples, synth_main.train, SESSION_CONFIG)
        assert converged
        findex = FilterIndex(synth_main.train)
        ranks = [rank_of(out, t, "tail", findex) for t in examples]
        assert all(r <= 1.0 for r in ranks)


class TestCollectInDanger:
    def test_identical_models_empty(self):
        w = np.zeros((4, 4))
        w[0, 1] = 5.0
        m = one_hot_rescal(w)
        train = triple_set([(0, 0, 1)], m.vocab)
        assert collect_in_danger(m, m, train, DebugConfig(seed=1)) == []

    def test_hand_built_flip_detected(self):
        w = np.zeros((4, 4))
        w[0, 1] = 5.0
        w[2, 3] = 5.0
        m_orig = one_hot_rescal(w)
        w2 = w.copy()
        w2[2, 3] = 0.1  # (e2, r0, e3) falls below e0 (0.2): rank drops
        w2[2, 0] = 0.2
        m_naive = one_hot_rescal(w2)
        train = triple_set([(0, 0, 1), (2, 0, 3)], m_orig.vocab)
        hits = collect_in_danger(m_orig, m_naive, train, DebugConfig(seed=1))
        assert hits == [Triple(2, 0, 3)]

    def test_exclusion_and_cap(self):
        w = np.zeros((4, 4))
        w[0, 1] = 5.0
        w[2, 3] = 5.0
        m_orig = one_hot_rescal(w)
        w2 = w.copy()
        w2[2, 3] = -1.0
        w2[0, 1] = -1.0
        m_naive = one_hot_rescal(w2)
        train = triple_set([(0, 0, 1), (2, 0, 3)], m_orig.vocab)
        hits = collect_in_danger(m_orig, m_naive, train, DebugConfig(seed=1),
                                 exclude=[Triple(0, 0, 1)])
        assert hits == [Triple(2, 0, 3)]
        assert len(hits) <= DebugConfig(seed=1).in_danger_size


@pytest.fixture(scope="module")
def session(rescal_model, synth_main, symmetric_ids):
    events = []
    result = run_debug_session(
        rescal_model, synth_main.train, synth_main.test,
        config=SESSION_CONFIG, relations=symmetric_ids,
        on_event=lambda name, payload: events.append((name, payload)),
    )
    return result, events, rescal_model


class TestRunDebugSession:
    def test_report_shape_complete(self, session):
        result, _events, _m = session
        for variant in VARIANTS:
            for eval_set in EVAL_SETS:
                cells = result.report.cells[variant][eval_set]
                assert set(cells) == {"hits@1", "hits@5", "hits@10", "mr", "mrr"}

    def test_before_debugging_test_hits1_zero(self, session):
        result, _events, _m = session
        assert result.report.cells["before"]["debugging-test"]["hits@1"] == 0.0

    def test_naive_improves_debugging_test(self, session):
        result, _events, _m = session
        assert result.report.cells["naive"]["debugging-test"]["hits@1"] > 0.0

    def test_entity_tables_bit_identical(self, session):
        result, _events, m = session
        for variant in VARIANTS:
            assert result.models[variant].entity_table.tobytes() \
                == m.entity_table.tobytes()

    def test_original_test_drift_small(self, session):
        result, _events, _m = session
        before = result.report.cells["before"]["original-test"]["hits@1"]
        for variant in ("naive", "in-danger"):
            after = result.report.cells[variant]["original-test"]["hits@1"]
            assert abs(after - before) < 0.01

    def test_sets_disjoint(self, session):
        result, _events, _m = session
        assert not set(result.debug_set) & set(result.debug_test)
        assert not set(result.debug_set) & set(result.in_danger)
        assert len(result.debug_set) == 10
        assert len(result.in_danger) <= 20

    def test_in_danger_round_starts_from_original(self, session):
        result, events, m = session
        import hashlib
        digest = hashlib.sha256()
        digest.update(m.entity_table.tobytes())
        digest.update(m.relation_table.tobytes())
        orig = digest.hexdigest()
        starts = {p["variant"]: p["base_digest"] for name, p in events
                  if name == "finetune_start"}
        assert starts["naive"] == orig
        assert starts["in-danger"] == orig

    def test_off_relation_scores_bit_identical(self, session, synth_main):
        result, _events, m = session
        debugged = synth_main.train.vocab.relation_id(result.report.relation)
        others = np.asarray(
            [t for t in synth_main.test.triples if t.relation != debugged],
            dtype=np.int64,
        )
        ent = m.entity_table.astype(np.float64)
        before = scores_for(m.kind, ent, m.relation_table.astype(np.float64), others)
        for variant in ("naive", "in-danger"):
            table = result.models[variant].relation_table.astype(np.float64)
            after = scores_for(m.kind, ent, table, others)
            assert np.array_equal(before, after)

    def test_system_outputs_emitted(self, session):
        result, _events, _m = session
        assert set(result.system_outputs) == set(VARIANTS)
        n = {len(s.records) for s in result.system_outputs.values()}
        assert len(n) == 1

    def test_explicit_relation_with_too_few_violations(self, rescal_model,
                                                       synth_main):
        config = DebugConfig(seed=1, debug_set_size=10_000)
        with pytest.raises(InsufficientViolationsError):
            run_debug_session(rescal_model, synth_main.train, synth_main.test,
                              relation=0, config=config)

    def test_no_eligible_relation(self, rescal_model, synth_main):
        config = DebugConfig(seed=1, debug_set_size=10_000)
        with pytest.raises(InsufficientViolationsError):
            run_debug_session(rescal_model, synth_main.train, synth_main.test,
                              config=config)

    def test_rotate_session_drift(self, rotate_model, synth_main, symmetric_ids):
        result = run_debug_session(
            rotate_model, synth_main.train, synth_main.test,
            config=SESSION_CONFIG, relations=symmetric_ids,
        )
        before = result.report.cells["before"]["original-test"]["hits@1"]
        for variant in ("naive", "in-danger"):
            after = result.report.cells[variant]["original-test"]["hits@1"]
            assert abs(after - before) < 0.01
        for variant in VARIANTS:
            assert result.models[variant].entity_table.tobytes() \
                == rotate_model.entity_table.tobytes()
