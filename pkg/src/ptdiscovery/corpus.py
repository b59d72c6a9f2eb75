"""Ingestion and normalization of the two raw knowledge sources.

The product catalog and the search-query log arrive as line-delimited JSON
(one record per line, UTF-8) and are turned into immutable in-memory stores
with stable identifiers and a content digest for provenance. All phrase-like
text goes through :func:`normalize_phrase` so that query and catalog phrases
compare equal.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import DuplicateId, EmptyPhrase, NegativeCount, ParseError


def normalize_phrase(raw: str) -> str:
    """Normalize free text into a canonical phrase.

    Lowercases, collapses whitespace runs, and strips punctuation except
    hyphens between word characters ("drill-bit"), periods inside numbers
    ("7.4"), and slashes inside tokens ("1/2"). Idempotent by construction:
    kept punctuation always sits between characters that are themselves kept.

    Raises:
        EmptyPhrase: if no tokens remain.
    """
    lowered = raw.lower()
    n = len(lowered)
    out: list[str] = []
    for i, ch in enumerate(lowered):
        if ch.isalnum():
            out.append(ch)
            continue
        prev = lowered[i - 1] if i > 0 else ""
        nxt = lowered[i + 1] if i + 1 < n else ""
        if ch == "-" and prev.isalnum() and nxt.isalnum():
            out.append(ch)
        elif ch == "." and prev.isdigit() and nxt.isdigit():
            out.append(ch)
        elif ch == "/" and prev.isalnum() and nxt.isalnum():
            out.append(ch)
        else:
            out.append(" ")
    phrase = " ".join("".join(out).split())
    if not phrase:
        raise EmptyPhrase(f"no tokens remain after normalizing {raw!r}")
    return phrase


def phrase_tokens(phrase: str) -> tuple[str, ...]:
    """Split a normalized phrase into its tokens."""
    return tuple(phrase.split(" "))


@dataclass(frozen=True)
class Sku:
    """A single catalog product with normalized text fields."""

    sku_id: str
    title: tuple[str, ...]
    description: tuple[str, ...]
    category: str
    brand: str | None = None


@dataclass
class QueryRecord:
    """One normalized search query with aggregate behavior counts."""

    query: str
    volume: int
    category_volumes: dict[str, int] = field(default_factory=dict)
    sku_clicks: dict[str, int] = field(default_factory=dict)

    @property
    def total_clicks(self) -> int:
        return sum(self.sku_clicks.values())


@dataclass
class Catalog:
    """Keyed SKU store; insertion order preserves file record order."""

    skus: dict[str, Sku]
    digest: str

    def __len__(self) -> int:
        return len(self.skus)

    def __iter__(self):
        return iter(self.skus.values())


@dataclass
class QueryLog:
    """Keyed query store; records with equal normalized query are merged."""

    records: dict[str, QueryRecord]
    digest: str

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())


def _file_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _parse_jsonl(data: bytes) -> Iterable[tuple[int, dict]]:
    for line_no, line in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise ParseError(line_no, "record is not an object")
        yield line_no, record


def _require_str(record: dict, key: str, line_no: int) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise ParseError(line_no, f"missing or non-string field {key!r}")
    return value


def load_catalog(path: str | Path) -> Catalog:
    """Load a line-delimited catalog file.

    Each record needs sku_id, title, description, category and an optional
    brand. Titles and descriptions are normalized; a title must keep at least
    one token.

    Raises:
        ParseError: malformed record (with its line number).
        DuplicateId: two records share a sku_id.
    """
    data = Path(path).read_bytes()
    skus: dict[str, Sku] = {}
    for line_no, record in _parse_jsonl(data):
        sku_id = _require_str(record, "sku_id", line_no)
        if not sku_id:
            raise ParseError(line_no, "empty sku_id")
        if sku_id in skus:
            raise DuplicateId(sku_id)
        try:
            title = phrase_tokens(normalize_phrase(_require_str(record, "title", line_no)))
        except EmptyPhrase:
            raise ParseError(line_no, "title has no tokens after normalization") from None
        raw_desc = record.get("description", "")
        if not isinstance(raw_desc, str):
            raise ParseError(line_no, "non-string description")
        try:
            description = phrase_tokens(normalize_phrase(raw_desc)) if raw_desc.strip() else ()
        except EmptyPhrase:
            description = ()
        category = _require_str(record, "category", line_no)
        raw_brand = record.get("brand")
        brand: str | None = None
        if raw_brand is not None:
            if not isinstance(raw_brand, str):
                raise ParseError(line_no, "non-string brand")
            if raw_brand.strip():
                brand = normalize_phrase(raw_brand)
        skus[sku_id] = Sku(sku_id, title, description, category, brand)
    return Catalog(skus=skus, digest=_file_digest(data))


def _parse_count_map(value, field_name: str, line_no: int) -> dict[str, int]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ParseError(line_no, f"{field_name} is not a map")
    out: dict[str, int] = {}
    for key, count in value.items():
        if not isinstance(count, int) or isinstance(count, bool):
            raise ParseError(line_no, f"non-integer count in {field_name}")
        if count < 0:
            raise NegativeCount(line_no, f"negative count in {field_name}")
        out[str(key)] = count
    return out


def load_query_log(path: str | Path) -> QueryLog:
    """Load a line-delimited query-log file, merging on normalized query.

    Records whose queries normalize identically are merged by summing volumes
    and click/category maps, so volume is conserved under merge.

    Raises:
        ParseError: malformed record or violated schema invariant.
        NegativeCount: any negative count.
    """
    data = Path(path).read_bytes()
    records: dict[str, QueryRecord] = {}
    for line_no, record in _parse_jsonl(data):
        raw_query = _require_str(record, "query", line_no)
        volume = record.get("volume")
        if not isinstance(volume, int) or isinstance(volume, bool):
            raise ParseError(line_no, "missing or non-integer volume")
        if volume < 0:
            raise NegativeCount(line_no, "negative volume")
        if volume == 0:
            raise ParseError(line_no, "volume must be >= 1")
        try:
            query = normalize_phrase(raw_query)
        except EmptyPhrase:
            raise ParseError(line_no, "query has no tokens after normalization") from None
        category_volumes = _parse_count_map(record.get("category_volumes"), "category_volumes", line_no)
        sku_clicks = _parse_count_map(record.get("sku_clicks"), "sku_clicks", line_no)
        if sum(category_volumes.values()) > volume:
            raise ParseError(line_no, "sum of category_volumes exceeds volume")
        existing = records.get(query)
        if existing is None:
            records[query] = QueryRecord(query, volume, category_volumes, sku_clicks)
        else:
            existing.volume += volume
            for cat, count in category_volumes.items():
                existing.category_volumes[cat] = existing.category_volumes.get(cat, 0) + count
            for sku_id, count in sku_clicks.items():
                existing.sku_clicks[sku_id] = existing.sku_clicks.get(sku_id, 0) + count
    return QueryLog(records=records, digest=_file_digest(data))


def write_catalog(path: str | Path, skus: Iterable[Sku]) -> None:
    """Write SKUs back to the catalog file format (normalized text)."""
    with open(path, "w", encoding="utf-8") as fh:
        for sku in skus:
            record = {
                "sku_id": sku.sku_id,
                "title": " ".join(sku.title),
                "description": " ".join(sku.description),
                "category": sku.category,
            }
            if sku.brand:
                record["brand"] = sku.brand
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_query_log(path: str | Path, records: Iterable[QueryRecord]) -> None:
    """Write query records back to the query-log file format."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            record = {
                "query": rec.query,
                "volume": rec.volume,
                "category_volumes": dict(sorted(rec.category_volumes.items())),
                "sku_clicks": dict(sorted(rec.sku_clicks.items())),
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def catalog_from_skus(skus: Iterable[Sku]) -> Catalog:
    """Build an in-memory catalog (digest over the serialized records)."""
    by_id: dict[str, Sku] = {}
    for sku in skus:
        if sku.sku_id in by_id:
            raise DuplicateId(sku.sku_id)
        by_id[sku.sku_id] = sku
    payload = json.dumps(
        [(s.sku_id, s.title, s.description, s.category, s.brand) for s in by_id.values()]
    ).encode("utf-8")
    return Catalog(skus=by_id, digest=_file_digest(payload))


def query_log_from_records(records: Iterable[QueryRecord]) -> QueryLog:
    """Build an in-memory query log, merging duplicates like the loader."""
    merged: dict[str, QueryRecord] = {}
    for rec in records:
        existing = merged.get(rec.query)
        if existing is None:
            merged[rec.query] = QueryRecord(
                rec.query, rec.volume, dict(rec.category_volumes), dict(rec.sku_clicks)
            )
        else:
            existing.volume += rec.volume
            for cat, count in rec.category_volumes.items():
                existing.category_volumes[cat] = existing.category_volumes.get(cat, 0) + count
            for sku_id, count in rec.sku_clicks.items():
                existing.sku_clicks[sku_id] = existing.sku_clicks.get(sku_id, 0) + count
    payload = json.dumps(
        [
            (r.query, r.volume, sorted(r.category_volumes.items()), sorted(r.sku_clicks.items()))
            for r in merged.values()
        ]
    ).encode("utf-8")
    return QueryLog(records=merged, digest=_file_digest(payload))
