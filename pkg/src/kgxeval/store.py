"""File-backed store for uploaded system outputs and cached reports.

Layout under the store root, one directory per system:

    <root>/<system-id>/meta.json       id, header fields, created_at, counts
    <root>/<system-id>/output.jsonl    canonical native system-output
    <root>/<system-id>/cache/<key>.json   cached analysis reports

System ids are the sha256 of the canonical serialization, so putting the
same content twice is a no-op that returns the same id.  Every write goes
through write-temp-then-rename (the directory itself is staged and renamed
on put), so readers never observe a partially written entry.  Writes are
serialized by a per-store lock; reads are lock-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from kgxeval.analysis import FeatureResources, single_analysis
from kgxeval.confidence import CiConfig
from kgxeval.errors import NotFoundError, StorageError
from kgxeval.sysout import (
    SystemHeader,
    SystemOutput,
    emit_bytes,
    header_to_dict,
    parse_system_output,
)

_META = "meta.json"
_OUTPUT = "output.jsonl"
_CACHE = "cache"


@dataclass(frozen=True)
class SystemEntry:
    system_id: str
    header: SystemHeader
    created_at: float
    seq: int
    record_count: int
    path: Path

    def to_dict(self) -> dict:
        return {
            "id": self.system_id,
            "created_at": self.created_at,
            "record_count": self.record_count,
            "header": header_to_dict(self.header),
        }


@dataclass(frozen=True)
class AnalysisRequest:
    """Normalized analysis configuration; doubles as the cache key source."""

    features: tuple[str, ...] | None = None
    metrics: tuple[str, ...] | None = None
    ci: CiConfig = CiConfig()

    def cache_key(self) -> str:
        normalized = {
            "features": list(self.features) if self.features is not None else None,
            "metrics": list(self.metrics) if self.metrics is not None else None,
            "ci": {
                "method": self.ci.method,
                "level": self.ci.level,
                "n_resamples": self.ci.n_resamples,
                "seed": self.ci.seed,
                "min_bucket_size": self.ci.min_bucket_size,
            },
        }
        blob = json.dumps(normalized, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class SystemStore:
    def __init__(self, root: str | os.PathLike,
                 resources: FeatureResources | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.resources = resources
        self._write_lock = threading.Lock()
        # instrumentation: number of analysis computations that missed the cache
        self.compute_count = 0

    # -- write path ---------------------------------------------------------

    def put(self, s: SystemOutput) -> str:
        """Persist a system output; idempotent on content, atomic on disk."""
        data = emit_bytes(s)
        system_id = hashlib.sha256(data).hexdigest()
        final = self.root / system_id
        with self._write_lock:
            if (final / _META).exists():
                return system_id
            if final.exists():
                shutil.rmtree(final)  # partial garbage from an earlier crash
            meta = {
                "id": system_id,
                "created_at": time.time(),
                "seq": self._next_seq(),
                "record_count": len(s.records),
                "header": header_to_dict(s.header),
            }
            staging = Path(
                tempfile.mkdtemp(dir=self.root, prefix=".staging-")
            )
            try:
                (staging / _CACHE).mkdir()
                (staging / _OUTPUT).write_bytes(data)
                (staging / _META).write_bytes(
                    json.dumps(meta, sort_keys=True).encode("utf-8")
                )
                os.replace(staging, final)
            except BaseException:
                shutil.rmtree(staging, ignore_errors=True)
                raise
        return system_id

    def put_bytes(self, data: bytes) -> str:
        """Parse, validate, and store raw native-format bytes (canonicalized)."""
        return self.put(parse_system_output(data))

    def delete(self, system_id: str) -> None:
        """Remove an entry and every cached report derived from it."""
        path = self._entry_dir(system_id)
        with self._write_lock:
            if not path.exists():
                raise NotFoundError(f"unknown system id {system_id!r}")
            doomed = self.root / f".deleting-{system_id}"
            os.replace(path, doomed)
            shutil.rmtree(doomed)

    def _next_seq(self) -> int:
        seqs = [e.seq for e in self.list()]
        return (max(seqs) + 1) if seqs else 0

    # -- read path ----------------------------------------------------------

    def _entry_dir(self, system_id: str) -> Path:
        if not system_id or "/" in system_id or system_id.startswith("."):
            raise NotFoundError(f"unknown system id {system_id!r}")
        return self.root / system_id

    def list(self) -> list[SystemEntry]:
        entries = []
        for child in self.root.iterdir():
            if child.name.startswith("."):
                continue
            meta_path = child / _META
            if not meta_path.is_file():
                continue
            meta = json.loads(meta_path.read_bytes())
            header = parse_system_output(
                (json.dumps(meta["header"]) + "\n").encode("utf-8")
            ).header
            entries.append(
                SystemEntry(
                    system_id=meta["id"],
                    header=header,
                    created_at=meta["created_at"],
                    seq=meta.get("seq", 0),
                    record_count=meta["record_count"],
                    path=child,
                )
            )
        entries.sort(key=lambda e: (e.created_at, e.seq, e.system_id))
        return entries

    def get_entry(self, system_id: str) -> SystemEntry:
        path = self._entry_dir(system_id)
        meta_path = path / _META
        if not meta_path.is_file():
            raise NotFoundError(f"unknown system id {system_id!r}")
        meta = json.loads(meta_path.read_bytes())
        header = parse_system_output(
            (json.dumps(meta["header"]) + "\n").encode("utf-8")
        ).header
        return SystemEntry(
            system_id=meta["id"], header=header, created_at=meta["created_at"],
            seq=meta.get("seq", 0), record_count=meta["record_count"], path=path,
        )

    def get(self, system_id: str) -> SystemOutput:
        path = self._entry_dir(system_id) / _OUTPUT
        if not path.is_file():
            raise NotFoundError(f"unknown system id {system_id!r}")
        return parse_system_output(path)

    # -- cached analysis ----------------------------------------------------

    def analysis(self, system_id: str, request: AnalysisRequest | None = None) -> bytes:
        """Serialized single-analysis report, computed once per (id, config).

        The first call computes and caches; later identical calls return the
        cached bytes unchanged.  Deleting the system drops its cache.
        """
        request = request or AnalysisRequest()
        entry_dir = self._entry_dir(system_id)
        if not (entry_dir / _META).is_file():
            raise NotFoundError(f"unknown system id {system_id!r}")
        cache_path = entry_dir / _CACHE / f"{request.cache_key()}.json"
        if cache_path.is_file():
            return cache_path.read_bytes()
        s = self.get(system_id)
        report = single_analysis(
            s,
            features=list(request.features) if request.features is not None else None,
            metrics=list(request.metrics) if request.metrics is not None else None,
            ci=request.ci,
            resources=self.resources,
        )
        self.compute_count += 1
        data = report.to_json().encode("utf-8")
        with self._write_lock:
            cache_path.parent.mkdir(exist_ok=True)
            try:
                _atomic_write(cache_path, data)
            except OSError as exc:
                raise StorageError(f"could not cache report: {exc}") from exc
        return data
