import io
import json
from datetime import date

import pytest
from hypothesis import given, strategies as st

from violation_miner.errors import DataError
from violation_miner.records import (
    DEFAULT_TYPE_ALIASES,
    ColumnMap,
    ComplianceRecord,
    ViolationType,
    compute_stats,
    filter_records,
    parse_report,
    stats_to_delimited,
    stats_to_json,
    top_violation_codes,
    write_records,
)
from violation_miner.errors import ConfigError

MAP = ColumnMap(
    record_id="id",
    inspection_date="date",
    violation_type="type",
    violation_code="code",
    violation_description="description",
    inspection_comment="comment",
)

HEADER = "id,date,type,code,description,comment\n"


def parse(text: str, **kwargs):
    return parse_report(io.StringIO(text), MAP, **kwargs)


def rec(
    vtype=ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
    comment="spill",
    on=date(2015, 6, 1),
    description="",
    record_id="r",
    code="",
):
    return ComplianceRecord(record_id, on, vtype, code, description, comment)


class TestParseReport:
    def test_three_row_fixture(self):
        text = HEADER + (
            "r1,2015-01-02,Environmental Health & Safety,78.56,desc,a comment\n"
            "r2,2016-02-03,Administrative,OGA,other,\n"
            "r3,2017-03-04,None,,,\n"
        )
        parsed = parse(text)
        assert not parsed.errors
        assert [r.violation_type for r in parsed.records] == [
            ViolationType.ENVIRONMENTAL_HEALTH_SAFETY,
            ViolationType.ADMINISTRATIVE,
            ViolationType.NONE,
        ]
        assert parsed.records[0].inspection_date == date(2015, 1, 2)
        assert parsed.records[0].inspection_comment == "a comment"

    def test_header_only(self):
        parsed = parse(HEADER)
        assert parsed.records == [] and parsed.errors == []

    def test_unknown_type_string_skips_row(self):
        parsed = parse(HEADER + "r1,2015-01-02,Misc,,,\n")
        assert parsed.records == []
        assert len(parsed.errors) == 1
        assert parsed.errors[0].row_number == 1
        assert "Misc" in parsed.errors[0].message

    def test_unparseable_date_skips_row(self):
        parsed = parse(HEADER + "r1,01/02/2015,None,,,\nr2,2015-01-02,None,,,\n")
        assert len(parsed.records) == 1 and len(parsed.errors) == 1
        assert parsed.errors[0].row_number == 1

    def test_empty_date_allowed(self):
        parsed = parse(HEADER + "r1,,None,,,\n")
        assert parsed.records[0].inspection_date is None and not parsed.errors

    def test_missing_header_column_fatal(self):
        with pytest.raises(DataError, match="comment"):
            parse("id,date,type,code,description\nr1,2015-01-02,None,,\n")

    def test_empty_input_fatal(self):
        with pytest.raises(DataError, match="header"):
            parse("")

    def test_custom_date_format_and_tab_delimiter(self):
        text = "id\tdate\ttype\tcode\tdescription\tcomment\nr1\t02/28/2015\tNone\t\t\t\n"
        parsed = parse(text, delimiter="\t", date_format="%m/%d/%Y")
        assert parsed.records[0].inspection_date == date(2015, 2, 28)

    def test_quoted_fields_with_delimiters(self):
        text = HEADER + 'r1,2015-01-02,None,,"a, ""quoted"" description","x, y"\n'
        parsed = parse(text)
        assert parsed.records[0].violation_description == 'a, "quoted" description'
        assert parsed.records[0].inspection_comment == "x, y"

    def test_distinct_columns_required(self):
        with pytest.raises(ConfigError):
            ColumnMap("id", "id", "type", "code", "description", "comment")

    def test_accepts_byte_stream_with_bom(self):
        payload = ("﻿" + HEADER + "r1,2015-01-02,None,,,ok\n").encode("utf-8")
        parsed = parse_report(io.BytesIO(payload), MAP)
        assert not parsed.errors
        assert parsed.records[0].inspection_comment == "ok"

    def test_unmapped_columns_ignored(self):
        text = (
            "extra,id,date,type,code,description,comment,trailing\n"
            "x,r1,2015-01-02,None,,,fine,y\n"
        )
        parsed = parse_report(io.StringIO(text), MAP)
        assert not parsed.errors
        assert parsed.records[0].record_id == "r1"
        assert parsed.records[0].inspection_comment == "fine"


FILTER_FIXTURE = [
    rec(record_id="e1", comment="brine spill"),
    rec(record_id="e2", comment="gas leak"),
    rec(record_id="e3", comment="   "),
    rec(record_id="a1", vtype=ViolationType.ADMINISTRATIVE, comment="late"),
    rec(record_id="a2", vtype=ViolationType.ADMINISTRATIVE, comment=""),
]


class TestFilterRecords:
    def test_type_and_comment(self):
        out = filter_records(
            FILTER_FIXTURE, ViolationType.ENVIRONMENTAL_HEALTH_SAFETY, require_comment=True
        )
        assert [r.record_id for r in out] == ["e1", "e2"]

    def test_without_comment_flag(self):
        out = filter_records(FILTER_FIXTURE, ViolationType.ENVIRONMENTAL_HEALTH_SAFETY)
        assert [r.record_id for r in out] == ["e1", "e2", "e3"]

    def test_empty_input(self):
        assert filter_records([], ViolationType.NONE) == []

    def test_partition_reconstitutes_input(self):
        pieces = [filter_records(FILTER_FIXTURE, t) for t in ViolationType]
        merged = [r for piece in pieces for r in piece]
        assert sorted(r.record_id for r in merged) == sorted(r.record_id for r in FILTER_FIXTURE)


class TestComputeStats:
    def test_empty(self):
        stats = compute_stats([])
        assert stats.total_records == 0
        assert stats.selected_records == 0
        assert all(v == 0 for v in stats.count_by_type.values())
        assert stats.count_by_year == {}
        assert stats.top_codes == []

    def test_years_fixture(self):
        records = [
            rec(on=date(2010, m, 1)) for m in range(1, 5)
        ] + [rec(on=date(2018, 1, 1)), rec(on=date(2018, 2, 1))]
        stats = compute_stats(records)
        assert stats.count_by_year == {2010: 4, 2018: 2}

    def test_none_rows_do_not_count_as_violations(self):
        records = [rec(vtype=ViolationType.NONE, on=date(2010, 1, 1), comment="fine")]
        stats = compute_stats(records)
        assert stats.count_by_year == {}
        assert stats.selected_records == 0
        assert stats.count_by_type[ViolationType.NONE] == 1

    def test_type_counts_sum_to_total(self):
        stats = compute_stats(FILTER_FIXTURE)
        assert sum(stats.count_by_type.values()) == stats.total_records == 5
        assert stats.selected_records == 3

    @given(st.permutations(range(len(FILTER_FIXTURE))))
    def test_permutation_invariant(self, order):
        shuffled = [FILTER_FIXTURE[i] for i in order]
        assert compute_stats(shuffled) == compute_stats(FILTER_FIXTURE)


class TestTopViolationCodes:
    def test_basic_counts(self):
        records = [rec(description="A")] * 3 + [rec(description="B")]
        assert top_violation_codes(records, 1) == [("A", 3)]

    def test_n_larger_than_distinct(self):
        records = [rec(description="A"), rec(description="B")]
        assert top_violation_codes(records, 10) == [("A", 1), ("B", 1)]

    def test_ties_break_lexicographically(self):
        records = [rec(description="b"), rec(description="a")]
        assert top_violation_codes(records, 2) == [("a", 1), ("b", 1)]

    def test_none_rows_excluded(self):
        records = [rec(description="A"), rec(vtype=ViolationType.NONE, description="X")]
        assert top_violation_codes(records, 5) == [("A", 1)]

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            top_violation_codes([], 0)


_text = st.text(
    alphabet=st.characters(codec="utf-8", exclude_characters="\r\x00", categories=["L", "N", "P", "Zs"]),
    max_size=30,
)


@st.composite
def records_strategy(draw):
    n = draw(st.integers(0, 8))
    out = []
    for i in range(n):
        has_date = draw(st.booleans())
        out.append(
            ComplianceRecord(
                record_id=draw(_text),
                inspection_date=draw(st.dates(date(1990, 1, 1), date(2030, 12, 31))) if has_date else None,
                violation_type=draw(st.sampled_from(list(ViolationType))),
                violation_code=draw(_text),
                violation_description=draw(_text),
                inspection_comment=draw(_text),
            )
        )
    return out


@given(records_strategy())
def test_write_parse_round_trip(records):
    buffer = io.StringIO()
    write_records(records, buffer, MAP)
    parsed = parse_report(io.StringIO(buffer.getvalue()), MAP)
    assert not parsed.errors
    assert parsed.records == records


def test_round_trip_on_disk(tmp_path, fixture_records):
    out = tmp_path / "roundtrip.csv"
    from tests.conftest import FIXTURE_COLUMNS

    write_records(fixture_records, out, FIXTURE_COLUMNS)
    parsed = parse_report(out, FIXTURE_COLUMNS)
    assert not parsed.errors
    assert parsed.records == fixture_records


class TestStatsOutputs:
    def test_delimited_sections(self):
        text = stats_to_delimited(compute_stats(FILTER_FIXTURE))
        assert text.startswith("section,key,value\n")
        assert "count_by_type,Environmental Health & Safety,3" in text
        assert "totals,selected_records,3" in text

    def test_json_parses(self):
        payload = json.loads(stats_to_json(compute_stats(FILTER_FIXTURE)))
        assert payload["total_records"] == 5
        assert payload["count_by_type"]["Administrative"] == 2


def test_default_aliases_cover_all_types():
    assert set(DEFAULT_TYPE_ALIASES.values()) == set(ViolationType)
