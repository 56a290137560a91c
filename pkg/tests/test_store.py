"""Store integrity: idempotence, atomicity, cache behavior."""

import os

import pytest

from kgxeval.confidence import CiConfig
from kgxeval.analysis import SingleAnalysisReport, single_analysis
from kgxeval.errors import NotFoundError
from kgxeval.store import AnalysisRequest, SystemStore
from kgxeval.sysout import emit_bytes

from conftest import build_sysout


@pytest.fixture()
def store(tmp_path):
    return SystemStore(tmp_path / "store")


def sample_output(name="sys", n=20):
    return build_sysout(list(range(1, n + 1)),
                        features={"g": [f"b{i % 3}" for i in range(n)]},
                        system_name=name)


class TestPut:
    def test_put_idempotent(self, store):
        s = sample_output()
        first = store.put(s)
        second = store.put(s)
        assert first == second
        assert len(store.list()) == 1

    def test_put_then_get_content_equal(self, store):
        s = sample_output()
        system_id = store.put(s)
        assert store.get(system_id) == s

    def test_distinct_contents_distinct_ids(self, store):
        a = store.put(sample_output("a"))
        b = store.put(sample_output("b"))
        assert a != b
        assert len(store.list()) == 2

    def test_put_bytes_canonicalizes(self, store):
        s = sample_output()
        data = emit_bytes(s)
        # extra blank lines do not change identity: content is canonicalized
        sloppy = data.replace(b"\n", b"\n\n", 3)
        assert store.put_bytes(sloppy) == store.put(s)

    def test_atomicity_under_rename_fault(self, store, monkeypatch):
        s = sample_output()
        real_replace = os.replace

        def exploding_replace(src, dst):
            raise OSError("injected crash between temp-write and rename")

        monkeypatch.setattr(os, "replace", exploding_replace)
        with pytest.raises(OSError, match="injected"):
            store.put(s)
        monkeypatch.setattr(os, "replace", real_replace)
        # old state: nothing visible, no partial entry
        assert store.list() == []
        # new state reachable afterwards
        system_id = store.put(s)
        assert store.get(system_id) == s

    def test_interrupted_staging_invisible(self, store):
        (store.root / ".staging-zzz").mkdir()
        (store.root / ".staging-zzz" / "output.jsonl").write_bytes(b"junk")
        assert store.list() == []


class TestListGetDelete:
    def test_empty_store(self, store):
        assert store.list() == []

    def test_insertion_order(self, store):
        ids = [store.put(sample_output(f"s{i}")) for i in range(3)]
        assert [e.system_id for e in store.list()] == ids

    def test_delete_then_get_not_found(self, store):
        system_id = store.put(sample_output())
        store.delete(system_id)
        with pytest.raises(NotFoundError):
            store.get(system_id)
        with pytest.raises(NotFoundError):
            store.delete(system_id)

    def test_unknown_id(self, store):
        with pytest.raises(NotFoundError):
            store.get("0" * 64)
        with pytest.raises(NotFoundError):
            store.get("../escape")

    def test_entry_metadata(self, store):
        s = sample_output(n=7)
        system_id = store.put(s)
        entry = store.get_entry(system_id)
        assert entry.record_count == 7
        assert entry.header.system_name == "sys"


class TestAnalysisCache:
    def test_second_call_serves_cache_byte_identical(self, store):
        system_id = store.put(sample_output())
        request = AnalysisRequest(ci=CiConfig(method="bootstrap", seed=1))
        first = store.analysis(system_id, request)
        computes = store.compute_count
        second = store.analysis(system_id, request)
        assert second == first
        assert store.compute_count == computes  # no recomputation

    def test_changed_seed_distinct_key(self, store):
        system_id = store.put(sample_output())
        a = AnalysisRequest(ci=CiConfig(method="bootstrap", seed=1))
        b = AnalysisRequest(ci=CiConfig(method="bootstrap", seed=2))
        assert a.cache_key() != b.cache_key()
        store.analysis(system_id, a)
        before = store.compute_count
        store.analysis(system_id, b)
        assert store.compute_count == before + 1

    def test_cached_equals_fresh_recomputation(self, store):
        s = sample_output()
        system_id = store.put(s)
        request = AnalysisRequest(metrics=("mrr", "hits@1"),
                                  ci=CiConfig(method="bootstrap", seed=9))
        cached = SingleAnalysisReport.from_json(store.analysis(system_id, request))
        fresh = single_analysis(s, metrics=["mrr", "hits@1"],
                                ci=CiConfig(method="bootstrap", seed=9))
        assert cached == fresh

    def test_delete_drops_cache(self, store):
        s = sample_output()
        system_id = store.put(s)
        store.analysis(system_id)
        store.delete(system_id)
        with pytest.raises(NotFoundError):
            store.analysis(system_id)
        # re-putting recomputes rather than resurrecting the old cache
        store.put(s)
        before = store.compute_count
        store.analysis(system_id)
        assert store.compute_count == before + 1
