"""Importers for rank dumps produced by the exporter shims.

Two dump schemas are supported, both UTF-8 TSV with a header row:

  pykeen-dump : ``head  relation  tail  side  rank``   side in {head, tail}
  libkge-dump : ``s  p  o  direction  rank``           direction in {s, o}

Each row becomes one example record; ids are synthesized as
``{row-index}-{head|tail}`` (row indices count data rows from 0).  Ranks must
be positive; the rank basis is declared out-of-band via :class:`AdapterMeta`
because the dumps carry none.  No custom features are attached -- attach them
afterwards with bucketization functions.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from typing import BinaryIO

from kgxeval.errors import ValidationError
from kgxeval.sysout import ExampleRecord, SystemOutput, make_header

PYKEEN_COLUMNS = ("head", "relation", "tail", "side", "rank")
LIBKGE_COLUMNS = ("s", "p", "o", "direction", "rank")


@dataclass(frozen=True)
class AdapterMeta:
    system_name: str
    dataset_name: str
    rank_basis: str = "filtered"

    def __post_init__(self):
        if not self.system_name or not self.dataset_name or not self.rank_basis:
            raise ValidationError("adapter metadata fields must be nonempty")


def _read_lines(source: str | os.PathLike | BinaryIO | bytes) -> list[str]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    else:
        text = source.read().decode("utf-8")
    return text.splitlines()


def _parse_dump(
    source, meta: AdapterMeta, columns: tuple[str, ...],
    side_field: str, tail_values: tuple[str, str],
) -> SystemOutput:
    lines = _read_lines(source)
    if not lines:
        raise ValidationError("empty dump: missing header row", line=1)
    header_fields = tuple(lines[0].rstrip("\r").split("\t"))
    if header_fields != columns:
        missing = set(columns) - set(header_fields)
        raise ValidationError(
            f"dump header {header_fields!r} does not match expected columns {columns!r}"
            + (f"; missing {sorted(missing)}" if missing else ""),
            line=1, field=side_field, rule="exact header row",
        )
    tail_marker, head_marker = tail_values
    records = []
    row_index = 0
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.rstrip("\r")
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != len(columns):
            raise ValidationError(
                f"expected {len(columns)} columns, got {len(fields)}",
                line=lineno, field="-", rule="one row per prediction",
            )
        head, relation, tail, side, rank_text = fields
        if side == tail_marker:
            direction = "tail-query"
            suffix = "tail"
        elif side == head_marker:
            direction = "head-query"
            suffix = "head"
        else:
            raise ValidationError(
                f"bad {side_field} value {side!r}",
                line=lineno, field=side_field,
                rule=f"one of {tail_values}",
            )
        try:
            rank = int(rank_text)
        except ValueError:
            raise ValidationError(
                f"rank {rank_text!r} is not an integer",
                line=lineno, field="rank", rule="positive integer rank",
            ) from None
        if rank < 1:
            raise ValidationError(
                f"rank {rank} outside rank domain",
                line=lineno, field="rank", rule="rank >= 1",
            )
        records.append(
            ExampleRecord(
                id=f"{row_index}-{suffix}",
                head=head, relation=relation, tail=tail,
                direction=direction, gold_rank=rank,
            )
        )
        row_index += 1
    header = make_header(
        system_name=meta.system_name,
        dataset_name=meta.dataset_name,
        rank_basis=meta.rank_basis,
    )
    return SystemOutput(header=header, records=tuple(records))


def import_pykeen(source: str | os.PathLike | BinaryIO | bytes,
                  meta: AdapterMeta) -> SystemOutput:
    """Convert a pykeen-style rank dump into a native SystemOutput."""
    return _parse_dump(source, meta, PYKEEN_COLUMNS, "side", ("tail", "head"))


def import_libkge(source: str | os.PathLike | BinaryIO | bytes,
                  meta: AdapterMeta) -> SystemOutput:
    """Convert a libkge-style rank dump (s/p/o naming) into a native SystemOutput."""
    return _parse_dump(source, meta, LIBKGE_COLUMNS, "direction", ("o", "s"))
