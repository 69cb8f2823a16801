import io
import logging
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kotlinscope.errors import DegenerateInput
from kotlinscope.linguist import (
    LinguistRecord,
    abs_error,
    compare,
    histogram,
    kot_java_ratio,
    load_linguist_csv,
    write_histogram_csv,
    write_rows_csv,
)

from linguist_rows import ROWS


def report(app_id, ratio, present):
    return {"app_id": app_id, "kot_proj_bytes_ratio": ratio, "has_kotlin_stdlib": present}


@pytest.mark.parametrize("k,j,want", [(0.3, 0.3, 0.5), (0.0, 0.9, 0.0), (0.6, 0.2, 0.75), (0.0, 0.0, 0.0)])
def test_kot_java_ratio_examples(k, j, want):
    assert kot_java_ratio(LinguistRecord("a", k, j)) == want


def test_compare_examples():
    reps = [report("a", 1.0, True), report("b", 0.0, False), report("c", 0.8, True)]
    recs = [LinguistRecord("a", 1.0, 0.0), LinguistRecord("b", 0.0, 0.0), LinguistRecord("c", 0.5, 0.5)]
    rows, summary = compare(reps, recs)
    a, b, c = rows
    assert a.error == 0 and b.error == 0 and c.error == 0.3
    assert not b.has_kot_github and not b.has_kotlin_stdlib
    assert summary["github_yes_detector_no"] == 0


def test_twenty_rows_match_closed_form():
    reps = [report(a, float(d), p) for a, d, p, *_ in ROWS]
    recs = [LinguistRecord(a, float(k), float(j)) for a, _, _, k, j, _, _ in ROWS]
    rows, summary = compare(reps, recs)
    assert len(rows) == 20
    for row, (a, _, p, _, _, ratio, err) in zip(rows, ROWS):
        assert row.app_id == a
        assert row.ling_kot_java_ratio == float(Fraction(ratio)), a
        assert row.error == float(Fraction(err)), a
        assert row.has_kot_github == (Fraction(ratio) > 0)
    # r11: detector saw the stdlib while linguist found no Kotlin; nothing the other way round
    assert summary["agreement"] == {"github_yes_detector_yes": 16, "github_yes_detector_no": 0,
                                    "github_no_detector_yes": 1, "github_no_detector_no": 3}
    assert summary["github_yes_detector_no"] == 0
    errs = sorted(Fraction(r[6]) for r in ROWS)
    assert summary["median_error"] == float((errs[9] + errs[10]) / 2)


def test_github_yes_detector_no_cell_is_counted():
    rows, summary = compare([report("x", 0.0, False)], [LinguistRecord("x", 0.4, 0.6)])
    assert summary["github_yes_detector_no"] == 1
    assert rows[0].error == 0.4


unit = st.floats(0, 1, allow_nan=False)


@given(unit, unit)
def test_error_symmetric_and_bounded(a, b):
    e = abs_error(a, b)
    assert e == abs_error(b, a)
    assert 0 <= e <= 1


@given(unit, unit)
def test_ratio_in_unit_interval(k, j):
    if k + j > 1:
        k, j = k / 2, j / 2
    assert 0 <= kot_java_ratio(LinguistRecord("a", k, j)) <= 1


def test_record_validation():
    with pytest.raises(ValueError):
        LinguistRecord("a", 0.7, 0.6)
    with pytest.raises(ValueError):
        LinguistRecord("a", -0.1, 0.2)
    LinguistRecord("a", 0.5, 0.5 + 1e-12)


def test_unmatched_ids_listed_and_skipped(caplog):
    with caplog.at_level(logging.WARNING):
        rows, summary = compare([report("a", 0.5, True), report("only_report", 0.1, True)],
                                [LinguistRecord("a", 0.5, 0.5), LinguistRecord("only_ling", 0.1, 0.1)])
    assert [r.app_id for r in rows] == ["a"]
    assert set(summary["unmatched"]) == {"only_report", "only_ling"}
    assert "only_ling" in caplog.text


def test_percent_csv_normalised(tmp_path, caplog):
    p = tmp_path / "ling.csv"
    p.write_text("app_id,ling_kot_ratio,ling_java_ratio\na,60,20\nb,0,100\n")
    with caplog.at_level(logging.WARNING):
        recs = load_linguist_csv(p)
    assert recs == [LinguistRecord("a", 0.6, 0.2), LinguistRecord("b", 0.0, 1.0)]
    assert "percentages" in caplog.text
    assert kot_java_ratio(recs[0]) == 0.75


def test_histogram_bins():
    h = histogram([0.0, 0.05, 0.1, 0.95, 1.0], 0.1)
    assert len(h) == 10
    assert h[0] == (0.0, 2) and h[1] == (0.1, 1) and h[9] == (0.9, 2)
    assert sum(c for _, c in histogram([0.3] * 7, 0.25)) == 7
    with pytest.raises(DegenerateInput):
        histogram([0.1], 0)


def test_csv_writers():
    rows, summary = compare([report("a", 0.8, True)], [LinguistRecord("a", 0.5, 0.5)])
    buf = io.StringIO()
    write_rows_csv(rows, buf)
    assert buf.getvalue().splitlines() == [
        "app_id,kot_proj_bytes_ratio,ling_kot_java_ratio,error,has_kot_github,has_kotlin_stdlib",
        "a,0.8,0.5,0.3,1,1"]
    buf = io.StringIO()
    write_histogram_csv(summary, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "bin,detector,linguist" and len(lines) == 11
