"""The native system-output file format and its in-memory model.

A system-output file is UTF-8 text with one JSON record per line:

  line 1     header: ``schema_version``, ``system_name``, ``dataset_name``,
             ``task`` (always ``"link-prediction"``), ``rank_basis``
             (``"filtered"`` or ``"raw"``), and ``custom_features`` -- a map
             of feature name to ``{"dtype", "description", "num_buckets"}``.
  lines 2..n example records: ``id``, ``head``, ``relation``, ``tail``,
             ``direction`` (``"tail-query"`` or ``"head-query"``),
             ``gold_rank``, optional ``top_k`` (label/score pairs sorted by
             score descending), optional ``features``.

Field names are case-sensitive and normative.  Emission is canonical: keys
in the order above, feature maps sorted by name, compact separators -- two
emissions of equal content are byte-identical, and ``parse(emit(s)) == s``.

Feature dtypes: ``string`` carries categorical labels, ``number`` discrete
numeric labels, ``continuous`` real values destined for interval bucketing
(``number``/``continuous`` extend the original string-only scheme).  For
string features ``num_buckets`` is an advisory cap: when there are more
distinct labels, the least frequent collapse into an ``OTHER`` bucket at
analysis time.

``gold_rank`` is a real >= 1: integer for optimistic/pessimistic tie
handling, possibly half-integer under the realistic strategy.  Integral
ranks are always emitted as JSON integers.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import BinaryIO, Callable, Iterable, Mapping

from kgxeval.errors import ValidationError

SCHEMA_VERSION = "1.0"
TASK = "link-prediction"
RANK_BASES = ("filtered", "raw")
DIRECTIONS = ("tail-query", "head-query")
FEATURE_DTYPES = ("string", "number", "continuous")

FeatureValue = str | float | int


@dataclass(frozen=True)
class FeatureDef:
    name: str
    dtype: str
    description: str = ""
    num_buckets: int = 2

    def __post_init__(self):
        if self.dtype not in FEATURE_DTYPES:
            raise ValidationError(
                f"feature {self.name!r}: unknown dtype {self.dtype!r}",
                field="dtype", rule=f"dtype must be one of {FEATURE_DTYPES}",
            )
        if not isinstance(self.num_buckets, int) or self.num_buckets < 1:
            raise ValidationError(
                f"feature {self.name!r}: num_buckets must be a positive integer",
                field="num_buckets", rule="num_buckets >= 1",
            )

    def accepts(self, value: FeatureValue) -> bool:
        if self.dtype == "string":
            return isinstance(value, str)
        return isinstance(value, (int, float)) and not isinstance(value, bool) \
            and math.isfinite(value)


@dataclass(frozen=True)
class SystemHeader:
    system_name: str
    dataset_name: str
    rank_basis: str
    custom_features: dict[str, FeatureDef] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION
    task: str = TASK

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValidationError(
                f"unrecognized schema_version {self.schema_version!r}",
                field="schema_version", rule=f"supported: {SCHEMA_VERSION}",
            )
        if self.task != TASK:
            raise ValidationError(
                f"unsupported task {self.task!r}", field="task", rule=f"task must be {TASK!r}"
            )
        if self.rank_basis not in RANK_BASES:
            raise ValidationError(
                f"rank_basis {self.rank_basis!r} not declared correctly",
                field="rank_basis", rule=f"one of {RANK_BASES}",
            )
        for name, fd in self.custom_features.items():
            if name != fd.name:
                raise ValidationError(
                    f"custom_features key {name!r} != def name {fd.name!r}",
                    field="custom_features", rule="map key equals feature name",
                )

    def with_feature(self, fd: FeatureDef) -> "SystemHeader":
        feats = dict(self.custom_features)
        feats[fd.name] = fd
        return SystemHeader(
            system_name=self.system_name,
            dataset_name=self.dataset_name,
            rank_basis=self.rank_basis,
            custom_features=feats,
            schema_version=self.schema_version,
            task=self.task,
        )


@dataclass(frozen=True)
class ExampleRecord:
    id: str
    head: str
    relation: str
    tail: str
    direction: str
    gold_rank: float
    top_k: tuple[tuple[str, float], ...] | None = None
    features: dict[str, FeatureValue] = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValidationError(
                f"record {self.id!r}: bad direction {self.direction!r}",
                field="direction", rule=f"one of {DIRECTIONS}",
            )
        rank = self.gold_rank
        if isinstance(rank, bool) or not isinstance(rank, (int, float)) \
                or not math.isfinite(rank) or rank < 1:
            raise ValidationError(
                f"record {self.id!r}: gold_rank {rank!r} outside rank domain",
                field="gold_rank", rule="gold_rank >= 1",
            )
        if self.top_k is not None:
            scores = [s for _, s in self.top_k]
            if any(not math.isfinite(s) for s in scores):
                raise ValidationError(
                    f"record {self.id!r}: non-finite top_k score",
                    field="top_k", rule="scores finite",
                )
            if any(scores[i] < scores[i + 1] for i in range(len(scores) - 1)):
                raise ValidationError(
                    f"record {self.id!r}: top_k not sorted by score descending",
                    field="top_k", rule="descending score order",
                )

    def with_feature(self, name: str, value: FeatureValue) -> "ExampleRecord":
        feats = dict(self.features)
        feats[name] = value
        return ExampleRecord(
            id=self.id, head=self.head, relation=self.relation, tail=self.tail,
            direction=self.direction, gold_rank=self.gold_rank,
            top_k=self.top_k, features=feats,
        )


@dataclass(frozen=True)
class SystemOutput:
    header: SystemHeader
    records: tuple[ExampleRecord, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(
                    f"duplicate record id {rec.id!r}", field="id", rule="record ids unique"
                )
            seen.add(rec.id)
            for fname, fval in rec.features.items():
                fd = self.header.custom_features.get(fname)
                if fd is None:
                    raise ValidationError(
                        f"record {rec.id!r}: feature {fname!r} not declared in header",
                        field="features", rule="every features key declared",
                    )
                if not fd.accepts(fval):
                    raise ValidationError(
                        f"record {rec.id!r}: value {fval!r} outside dtype "
                        f"{fd.dtype!r} of feature {fname!r}",
                        field="features", rule="value matches declared dtype",
                    )

    def __len__(self) -> int:
        return len(self.records)

    def ranks(self) -> list[float]:
        return [rec.gold_rank for rec in self.records]

    def record_by_id(self, rec_id: str) -> ExampleRecord:
        for rec in self.records:
            if rec.id == rec_id:
                return rec
        raise KeyError(rec_id)


def _json_rank(rank: float):
    return int(rank) if float(rank).is_integer() else float(rank)


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def header_to_dict(header: SystemHeader) -> dict:
    return {
        "schema_version": header.schema_version,
        "system_name": header.system_name,
        "dataset_name": header.dataset_name,
        "task": header.task,
        "rank_basis": header.rank_basis,
        "custom_features": {
            name: {
                "dtype": fd.dtype,
                "description": fd.description,
                "num_buckets": fd.num_buckets,
            }
            for name, fd in sorted(header.custom_features.items())
        },
    }


def record_to_dict(rec: ExampleRecord) -> dict:
    out = {
        "id": rec.id,
        "head": rec.head,
        "relation": rec.relation,
        "tail": rec.tail,
        "direction": rec.direction,
        "gold_rank": _json_rank(rec.gold_rank),
    }
    if rec.top_k is not None:
        out["top_k"] = [[label, float(score)] for label, score in rec.top_k]
    if rec.features:
        out["features"] = {
            k: (_json_rank(v) if isinstance(v, (int, float)) else v)
            for k, v in sorted(rec.features.items())
        }
    return out


def emit_system_output(s: SystemOutput, sink: BinaryIO | str | os.PathLike) -> None:
    """Write the canonical serialization of ``s`` (byte-stable for equal content)."""
    data = emit_bytes(s)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    else:
        sink.write(data)


def emit_bytes(s: SystemOutput) -> bytes:
    lines = [_dump(header_to_dict(s.header))]
    lines.extend(_dump(record_to_dict(rec)) for rec in s.records)
    return ("\n".join(lines) + "\n").encode("utf-8")


def _require(cond: bool, message: str, line: int, fld: str, rule: str):
    if not cond:
        raise ValidationError(message, line=line, field=fld, rule=rule)


def _parse_header(obj:
                  dict, lineno: int) -> SystemHeader:
    _require(isinstance(obj, dict), "header must be an object", lineno, "-", "object line")
    for key in ("schema_version", "system_name", "dataset_name", "task", "rank_basis"):
        _require(key in obj, f"header missing {key!r}", lineno, key, "required header field")
        _require(isinstance(obj[key], str), f"header {key!r} must be a string",
                 lineno, key, "string field")
    feats_raw = obj.get("custom_features", {})
    _require(isinstance(feats_raw, dict), "custom_features must be a map",
             lineno, "custom_features", "object field")
    feats: dict[str, FeatureDef] = {}
    for name, spec in feats_raw.items():
        _require(isinstance(spec, dict), f"feature {name!r} must map to an object",
                 lineno, "custom_features", "object entries")
        for key in ("dtype", "description", "num_buckets"):
            _require(key in spec, f"feature {name!r} missing {key!r}",
                     lineno, "custom_features", "dtype/description/num_buckets required")
        try:
            feats[name] = FeatureDef(
                name=name, dtype=spec["dtype"],
                description=spec["description"], num_buckets=spec["num_buckets"],
            )
        except ValidationError as exc:
            raise ValidationError(str(exc), line=lineno) from None
    try:
        return SystemHeader(
            system_name=obj["system_name"], dataset_name=obj["dataset_name"],
            rank_basis=obj["rank_basis"], custom_features=feats,
            schema_version=obj["schema_version"], task=obj["task"],
        )
    except ValidationError as exc:
        raise ValidationError(str(exc), line=lineno) from None


def _parse_record(obj: dict, lineno: int) -> ExampleRecord:
    _require(isinstance(obj, dict), "record must be an object", lineno, "-", "object line")
    for key in ("id", "head", "relation", "tail", "direction"):
        _require(key in obj, f"record missing {key!r}", lineno, key, "required record field")
        _require(isinstance(obj[key], str), f"record {key!r} must be a string",
                 lineno, key, "string field")
    _require("gold_rank" in obj, "record missing 'gold_rank'", lineno,
             "gold_rank", "required record field")
    rank = obj["gold_rank"]
    _require(
        isinstance(rank, (int, float)) and not isinstance(rank, bool),
        f"gold_rank must be a number, got {rank!r}", lineno, "gold_rank", "numeric field",
    )
    top_k = None
    if "top_k" in obj:
        raw = obj["top_k"]
        _require(isinstance(raw, list), "top_k must be a list", lineno, "top_k", "list field")
        pairs = []
        for item in raw:
            _require(
                isinstance(item, list) and len(item) == 2 and isinstance(item[0], str)
                and isinstance(item[1], (int, float)) and not isinstance(item[1], bool),
                f"top_k entries must be [label, score] pairs, got {item!r}",
                lineno, "top_k", "label/score pairs",
            )
            pairs.append((item[0], float(item[1])))
        top_k = tuple(pairs)
    features = obj.get("features", {})
    _require(isinstance(features, dict), "features must be a map",
             lineno, "features", "object field")
    for fname, fval in features.items():
        _require(
            isinstance(fval, (str, int, float)) and not isinstance(fval, bool),
            f"feature {fname!r} value must be string or number",
            lineno, "features", "scalar feature values",
        )
    try:
        return ExampleRecord(
            id=obj["id"], head=obj["head"], relation=obj["relation"], tail=obj["tail"],
            direction=obj["direction"], gold_rank=rank, top_k=top_k,
            features=dict(features),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc), line=lineno) from None


def parse_system_output(source: BinaryIO | bytes | str | os.PathLike) -> SystemOutput:
    """Parse and validate a native system-output file.

    Schema violations raise :class:`ValidationError` naming the line, field,
    and violated rule.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    else:
        text = source.read().decode("utf-8")

    header: SystemHeader | None = None
    records: list[ExampleRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON: {exc.msg}", line=lineno,
                                  field="-", rule="one JSON object per line") from None
        if header is None:
            header = _parse_header(obj, lineno)
        else:
            records.append(_parse_record(obj, lineno))
    if header is None:
        raise ValidationError("empty file: first line must be a header record",
                              line=1, field="-", rule="header first")
    try:
        return SystemOutput(header=header, records=tuple(records))
    except ValidationError:
        raise


def apply_bucketization_function(
    s: SystemOutput,
    fdef: FeatureDef,
    assign: Callable[[ExampleRecord], FeatureValue],
) -> SystemOutput:
    """Attach a new feature to every record via a user bucketization function.

    ``assign`` maps each record to a bucket label (or numeric value) of the
    declared dtype.  Returns a new SystemOutput whose header declares ``fdef``
    and whose records each carry a value for it; ids, triples, ranks, and
    top_k are untouched.
    """
    if fdef.name in s.header.custom_features:
        raise ValidationError(
            f"feature {fdef.name!r} already present in header",
            field="custom_features", rule="new feature name",
        )
    new_records = []
    for rec in s.records:
        value = assign(rec)
        if not fdef.accepts(value):
            raise ValidationError(
                f"bucketization function returned {value!r} outside dtype "
                f"{fdef.dtype!r} for record {rec.id!r}",
                field=fdef.name, rule="value matches declared dtype",
            )
        new_records.append(rec.with_feature(fdef.name, value))
    return SystemOutput(header=s.header.with_feature(fdef), records=tuple(new_records))


def symmetry_assigner(symmetric_relations: Iterable[str]) -> Callable[[ExampleRecord], str]:
    """Bucketization function: ``symmetric`` if the record's relation is listed."""
    s_rels = frozenset(symmetric_relations)

    def assign(rec: ExampleRecord) -> str:
        return "symmetric" if rec.relation in s_rels else "asymmetric"

    return assign


def make_header(
    system_name: str,
    dataset_name: str,
    rank_basis: str,
    custom_features: Mapping[str, FeatureDef] | Iterable[FeatureDef] = (),
) -> SystemHeader:
    if isinstance(custom_features, Mapping):
        feats = dict(custom_features)
    else:
        feats = {fd.name: fd for fd in custom_features}
    return SystemHeader(
        system_name=system_name, dataset_name=dataset_name,
        rank_basis=rank_basis, custom_features=feats,
    )
