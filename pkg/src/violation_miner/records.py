"""Compliance-report ingestion: parsing, filtering, descriptive statistics.

The raw input is a delimited export (one violation per row) with a header
row. A ColumnMap names the source columns for the six record fields and
translates the export's violation-type strings onto the three-way enum.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

from .errors import ConfigError, DataError


class ViolationType(Enum):
    NONE = "None"
    ADMINISTRATIVE = "Administrative"
    ENVIRONMENTAL_HEALTH_SAFETY = "Environmental Health & Safety"


@dataclass(frozen=True)
class ComplianceRecord:
    record_id: str
    inspection_date: date | None
    violation_type: ViolationType
    violation_code: str
    violation_description: str
    inspection_comment: str

    def has_comment(self) -> bool:
        return bool(self.inspection_comment.strip())


@dataclass(frozen=True)
class ColumnMap:
    """Source column names for the record fields, plus the violation-type
    alias table (source string -> enum)."""

    record_id: str
    inspection_date: str
    violation_type: str
    violation_code: str
    violation_description: str
    inspection_comment: str
    type_aliases: dict[str, ViolationType] = field(
        default_factory=lambda: dict(DEFAULT_TYPE_ALIASES)
    )

    def source_columns(self) -> tuple[str, ...]:
        return (
            self.record_id,
            self.inspection_date,
            self.violation_type,
            self.violation_code,
            self.violation_description,
            self.inspection_comment,
        )

    def __post_init__(self) -> None:
        columns = self.source_columns()
        if len(set(columns)) != len(columns):
            raise ConfigError(f"column map fields must name distinct source columns, got {columns}")


DEFAULT_TYPE_ALIASES: dict[str, ViolationType] = {
    "None": ViolationType.NONE,
    "Administrative": ViolationType.ADMINISTRATIVE,
    "Environmental Health & Safety": ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
    "Environmental Health and Safety": ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
    "EHS": ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
}


@dataclass(frozen=True)
class RowError:
    row_number: int  # 1-based data-row index, header excluded
    message: str


@dataclass
class ParsedReport:
    records: list[ComplianceRecord]
    errors: list[RowError]


@dataclass(frozen=True)
class ViolationStats:
    count_by_type: dict[ViolationType, int]
    count_by_year: dict[int, int]  # violation rows (non-None) per year
    top_codes: list[tuple[str, int]]
    total_records: int
    selected_records: int  # violation rows with a non-empty comment


def _open_text(source: str | Path | IO[bytes] | IO[str]) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, encoding="utf-8-sig", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8-sig", newline=""), False


def parse_report(
    source: str | Path | IO[bytes] | IO[str],
    column_map: ColumnMap,
    *,
    delimiter: str = ",",
    date_format: str = "%Y-%m-%d",
) -> ParsedReport:
    """Parse a delimited export into records.

    A missing header column is fatal. Rows with an unknown violation-type
    string or an unparseable (non-empty) date are skipped and reported with
    their row number; an empty date field yields a dateless record.
    """
    stream, own = _open_text(source)
    try:
        reader = csv.DictReader(stream, delimiter=delimiter)
        header = reader.fieldnames
        if header is None:
            raise DataError("input report is empty: no header row")
        missing = [c for c in column_map.source_columns() if c not in header]
        if missing:
            raise DataError(f"input report is missing mapped column(s): {', '.join(missing)}")

        records: list[ComplianceRecord] = []
        errors: list[RowError] = []
        for row_number, row in enumerate(reader, 1):
            type_string = (row.get(column_map.violation_type) or "").strip()
            violation_type = column_map.type_aliases.get(type_string)
            if violation_type is None:
                errors.append(RowError(row_number, f"unknown violation type string {type_string!r}"))
                continue
            date_string = (row.get(column_map.inspection_date) or "").strip()
            inspection_date: date | None = None
            if date_string:
                try:
                    inspection_date = datetime.strptime(date_string, date_format).date()
                except ValueError:
                    errors.append(RowError(row_number, f"unparseable date {date_string!r}"))
                    continue
            records.append(
                ComplianceRecord(
                    record_id=row.get(column_map.record_id) or "",
                    inspection_date=inspection_date,
                    violation_type=violation_type,
                    violation_code=row.get(column_map.violation_code) or "",
                    violation_description=row.get(column_map.violation_description) or "",
                    inspection_comment=row.get(column_map.inspection_comment) or "",
                )
            )
        return ParsedReport(records, errors)
    finally:
        if own:
            stream.close()


def write_records(
    records: Iterable[ComplianceRecord],
    sink: str | Path | IO[str],
    column_map: ColumnMap,
    *,
    delimiter: str = ",",
    date_format: str = "%Y-%m-%d",
) -> None:
    """Serialize records back to the delimited layout named by the column
    map; `parse_report` on the output reproduces the records exactly."""
    enum_to_source: dict[ViolationType, str] = {}
    for source_string, vtype in column_map.type_aliases.items():
        enum_to_source.setdefault(vtype, source_string)
    missing = [t for t in ViolationType if t not in enum_to_source]
    if missing:
        raise ConfigError(f"alias table has no source string for: {[t.value for t in missing]}")

    own = isinstance(sink, (str, Path))
    stream = open(sink, "w", encoding="utf-8", newline="") if own else sink
    try:
        writer = csv.writer(stream, delimiter=delimiter)
        writer.writerow(column_map.source_columns())
        for r in records:
            writer.writerow(
                [
                    r.record_id,
                    r.inspection_date.strftime(date_format) if r.inspection_date else "",
                    enum_to_source[r.violation_type],
                    r.violation_code,
                    r.violation_description,
                    r.inspection_comment,
                ]
            )
    finally:
        if own:
            stream.close()


def filter_records(
    records: Iterable[ComplianceRecord],
    violation_type: ViolationType,
    require_comment: bool = False,
) -> list[ComplianceRecord]:
    """Order-preserving selection by type and (optionally) non-empty comment."""
    return [
        r
        for r in records
        if r.violation_type is violation_type and (not require_comment or r.has_comment())
    ]


def _top_codes(records: Iterable[ComplianceRecord], n: int) -> list[tuple[str, int]]:
    counts = Counter(
        r.violation_description
        for r in records
        if r.violation_type is not ViolationType.NONE and r.violation_description
    )
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def top_violation_codes(records: Iterable[ComplianceRecord], n: int) -> list[tuple[str, int]]:
    """The n most frequent violation descriptions among violation rows,
    ties broken lexicographically."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _top_codes(records, n)


def compute_stats(records: Iterable[ComplianceRecord], top_n: int = 5) -> ViolationStats:
    records = list(records)
    count_by_type = {t: 0 for t in ViolationType}
    count_by_year: Counter[int] = Counter()
    selected = 0
    for r in records:
        count_by_type[r.violation_type] += 1
        if r.violation_type is not ViolationType.NONE:
            if r.inspection_date is not None:
                count_by_year[r.inspection_date.year] += 1
            if r.has_comment():
                selected += 1
    return ViolationStats(
        count_by_type=count_by_type,
        count_by_year=dict(sorted(count_by_year.items())),
        top_codes=_top_codes(records, top_n),
        total_records=len(records),
        selected_records=selected,
    )


def stats_to_delimited(stats: ViolationStats, *, delimiter: str = ",") -> str:
    """Sectioned delimited report: one block per statistic."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["section", "key", "value"])
    writer.writerow(["totals", "total_records", stats.total_records])
    writer.writerow(["totals", "selected_records", stats.selected_records])
    for vtype, count in stats.count_by_type.items():
        writer.writerow(["count_by_type", vtype.value, count])
    for year, count in stats.count_by_year.items():
        writer.writerow(["count_by_year", year, count])
    for rank, (description, count) in enumerate(stats.top_codes, 1):
        writer.writerow(["top_codes", f"{rank}. {description}", count])
    return out.getvalue()


def stats_to_json(stats: ViolationStats) -> str:
    payload = {
        "total_records": stats.total_records,
        "selected_records": stats.selected_records,
        "count_by_type": {t.value: c for t, c in stats.count_by_type.items()},
        "count_by_year": {str(y): c for y, c in stats.count_by_year.items()},
        "top_codes": [{"description": d, "count": c} for d, c in stats.top_codes],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
