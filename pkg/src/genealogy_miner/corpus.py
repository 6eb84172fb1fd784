"""Loading and writing publication records and ground-truth advisor pairs.

Publications are stored as JSONL (canonical) or a restricted CSV layout where
list-valued columns are ``;``-separated::

    paper_id,title,year,field,authors,affiliations,references

``affiliations`` is aligned with ``authors``; an empty slot means no
affiliation.  Ground truth is a CSV with header
``advisee_name,advisor_name,field,start_year``.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .errors import DuplicateId, ParseError, SelfPairError, YearOutOfRange

MIN_YEAR = 1800
MAX_YEAR = 2100

PUBLICATION_CSV_HEADER = ["paper_id", "title", "year", "field", "authors", "affiliations", "references"]
GROUND_TRUTH_HEADER = ["advisee_name", "advisor_name", "field", "start_year"]

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Trim and collapse internal whitespace, keeping the original casing."""
    return _WS.sub(" ", name).strip()


def name_key(name: str) -> str:
    """Matching key for a printed name."""
    return normalize_name(name).casefold()


@dataclass(frozen=True)
class AuthorMention:
    name: str
    affiliation: Optional[str] = None

    def __post_init__(self):
        name = normalize_name(self.name or "")
        if not name:
            raise ParseError("author name is empty")
        object.__setattr__(self, "name", name)
        aff = self.affiliation
        if aff is not None:
            aff = normalize_name(aff) or None
        object.__setattr__(self, "affiliation", aff)

    @property
    def key(self) -> str:
        return name_key(self.name)


@dataclass(frozen=True)
class PublicationRecord:
    paper_id: str
    title: str
    year: int
    field: str
    authors: tuple
    references: tuple = ()

    def __post_init__(self):
        if not self.authors:
            raise ParseError(f"paper {self.paper_id!r} has no authors")
        if not (MIN_YEAR <= self.year <= MAX_YEAR):
            raise YearOutOfRange(f"paper {self.paper_id!r}: year {self.year} outside [{MIN_YEAR}, {MAX_YEAR}]")
        object.__setattr__(self, "authors", tuple(self.authors))
        object.__setattr__(self, "references", tuple(self.references))

    def to_json(self) -> dict:
        return {
            "paper_id": self.paper_id,
            "title": self.title,
            "year": self.year,
            "field": self.field,
            "authors": [{"name": a.name, "affiliation": a.affiliation} for a in self.authors],
            "references": list(self.references),
        }


@dataclass(frozen=True)
class GroundTruthPair:
    advisee_name: str
    advisor_name: str
    field: str
    start_year: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "advisee_name", normalize_name(self.advisee_name))
        object.__setattr__(self, "advisor_name", normalize_name(self.advisor_name))
        if name_key(self.advisee_name) == name_key(self.advisor_name):
            raise SelfPairError(f"advisee and advisor are the same person: {self.advisee_name!r}")

    @property
    def key(self):
        return (name_key(self.advisee_name), name_key(self.advisor_name), self.field)


def _parse_year(value, line):
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ParseError(f"year {value!r} is not an integer", line) from None


def _record_from_json(obj, line) -> PublicationRecord:
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", line)
    try:
        authors = tuple(AuthorMention(a["name"], a.get("affiliation")) for a in obj["authors"])
        return PublicationRecord(
            paper_id=str(obj["paper_id"]),
            title=str(obj.get("title", "")),
            year=_parse_year(obj["year"], line),
            field=str(obj["field"]),
            authors=authors,
            references=tuple(str(r) for r in obj.get("references") or ()),
        )
    except KeyError as exc:
        raise ParseError(f"missing key {exc.args[0]!r}", line) from None
    except (TypeError, AttributeError) as exc:
        raise ParseError(str(exc), line) from None
    except ParseError as exc:
        if exc.line is None:
            raise ParseError(str(exc), line) from None
        raise


def _split_list(value: str) -> list:
    return [] if value == "" else value.split(";")


def _record_from_csv(row, line) -> PublicationRecord:
    try:
        names = _split_list(row["authors"])
        affs = _split_list(row.get("affiliations") or "")
    except KeyError as exc:
        raise ParseError(f"missing column {exc.args[0]!r}", line) from None
    if affs and len(affs) != len(names):
        raise ParseError("affiliations not aligned with authors", line)
    affs = affs or [""] * len(names)
    try:
        return PublicationRecord(
            paper_id=row["paper_id"],
            title=row.get("title") or "",
            year=_parse_year(row["year"], line),
            field=row["field"],
            authors=tuple(AuthorMention(n, a or None) for n, a in zip(names, affs)),
            references=tuple(_split_list(row.get("references") or "")),
        )
    except ParseError as exc:
        if exc.line is None:
            raise ParseError(str(exc), line) from None
        raise


def _infer_format(path: Path, fmt: Optional[str]) -> str:
    if fmt:
        return fmt
    return "csv" if path.suffix.lower() == ".csv" else "jsonl"


def load_publications(path, format: Optional[str] = None) -> list:
    """Read publication records in file order.

    Raises ``ParseError`` (with the offending line number), ``DuplicateId``
    and ``YearOutOfRange``.
    """
    path = Path(path)
    fmt = _infer_format(path, format)
    records = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        if fmt == "jsonl":
            rows = []
            for lineno, text in enumerate(fh, start=1):
                if not text.strip():
                    continue
                try:
                    obj = json.loads(text)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
                rows.append((lineno, _record_from_json(obj, lineno)))
        elif fmt == "csv":
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                return []
            missing = {"paper_id", "year", "field", "authors"} - set(reader.fieldnames)
            if missing:
                raise ParseError(f"missing columns {sorted(missing)}", 1)
            rows = [(reader.line_num, _record_from_csv(row, reader.line_num)) for row in reader]
        else:
            raise ValueError(f"unknown publication format {fmt!r}")
    for lineno, rec in rows:
        if rec.paper_id in seen:
            raise DuplicateId(f"line {lineno}: duplicate paper_id {rec.paper_id!r}")
        seen.add(rec.paper_id)
        records.append(rec)
    return records


def dumps_publications(records: Iterable[PublicationRecord], format: str = "jsonl") -> str:
    buf = io.StringIO(newline="")
    if format == "jsonl":
        for rec in records:
            buf.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True))
            buf.write("\n")
    elif format == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PUBLICATION_CSV_HEADER)
        for rec in records:
            writer.writerow([
                rec.paper_id,
                rec.title,
                rec.year,
                rec.field,
                ";".join(a.name for a in rec.authors),
                ";".join(a.affiliation or "" for a in rec.authors),
                ";".join(rec.references),
            ])
    else:
        raise ValueError(f"unknown publication format {format!r}")
    return buf.getvalue()


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the same directory, then rename into place."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_publications(records, path, format: Optional[str] = None) -> None:
    path = Path(path)
    atomic_write_text(path, dumps_publications(records, _infer_format(path, format)))


def load_ground_truth(path) -> list:
    """Read advisor-advisee pairs, dropping exact duplicates (first one wins)."""
    pairs = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = {"advisee_name", "advisor_name", "field"} - set(reader.fieldnames)
        if missing:
            raise ParseError(f"missing columns {sorted(missing)}", 1)
        for row in reader:
            line = reader.line_num
            start = (row.get("start_year") or "").strip()
            try:
                pair = GroundTruthPair(
                    advisee_name=row["advisee_name"] or "",
                    advisor_name=row["advisor_name"] or "",
                    field=(row["field"] or "").strip(),
                    start_year=_parse_year(start, line) if start else None,
                )
            except SelfPairError as exc:
                raise SelfPairError(f"line {line}: {exc}") from None
            if not pair.advisee_name or not pair.advisor_name:
                raise ParseError("empty name", line)
            if pair.key in seen:
                continue
            seen.add(pair.key)
            pairs.append(pair)
    return pairs


def write_ground_truth(pairs, path) -> None:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GROUND_TRUTH_HEADER)
    for p in pairs:
        writer.writerow([p.advisee_name, p.advisor_name, p.field, "" if p.start_year is None else p.start_year])
    atomic_write_text(path, buf.getvalue())
