"""Document model, normalization, and span semantics."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from counterpoint.core import (
    Document,
    EmptyDocument,
    Lean,
    Span,
    SpanOutOfRange,
    StanceRating,
    check_span,
    compute_doc_id,
    ingest_document,
    normalize_body,
    span_text,
)


class TestNormalizeBody:
    def test_crlf_becomes_lf(self):
        assert normalize_body("a\r\nb\rc\nd") == "a\nb\nc\nd"

    def test_tab_becomes_space(self):
        assert normalize_body("a\tb") == "a b"

    def test_other_control_chars_removed(self):
        assert normalize_body("a\x00b\x07c\x1fd\x7fe") == "abcde"

    def test_plain_whitespace_preserved(self):
        body = "a  b   c\n\nd"
        assert normalize_body(body) == body

    @given(st.text(max_size=200))
    def test_idempotent(self, text):
        once = normalize_body(text)
        assert normalize_body(once) == once

    @given(st.text(max_size=200))
    def test_no_control_chars_survive(self, text):
        out = normalize_body(text)
        assert "\r" not in out and "\t" not in out
        assert not any(ord(ch) < 0x20 and ch != "\n" for ch in out)


class TestIngest:
    def test_body_length_in_code_points(self):
        doc = ingest_document("Taxes are too high.", "Tax op-ed", lean=Lean.RIGHT)
        assert len(doc.body) == 19
        assert doc.lean is Lean.RIGHT

    def test_empty_raises(self):
        with pytest.raises(EmptyDocument):
            ingest_document("", "x", lean=Lean.NEUTRAL)

    def test_whitespace_only_raises(self):
        with pytest.raises(EmptyDocument):
            ingest_document("   \n\t  ", "x")

    def test_reingest_is_fixed_point(self):
        doc = ingest_document("line one\r\nline two\rthree", "t")
        again = ingest_document(doc.body, "t")
        assert again.body == doc.body
        assert again.doc_id == doc.doc_id

    def test_doc_id_is_content_digest(self):
        a = ingest_document("same text", "same title")
        b = ingest_document("same text", "same title")
        c = ingest_document("same text", "other title")
        d = ingest_document("other text", "same title")
        assert a.doc_id == b.doc_id
        assert len({a.doc_id, c.doc_id, d.doc_id}) == 3
        assert len(a.doc_id) == 16

    def test_doc_id_matches_compute(self):
        doc = ingest_document("body here", "title here")
        assert doc.doc_id == compute_doc_id(doc.body, doc.title)


class TestSpan:
    def test_prefix_slice(self):
        doc = ingest_document("Taxes are too high.", "t")
        assert span_text(doc, Span(0, 5)) == "Taxes"

    def test_full_body(self):
        doc = ingest_document("Taxes are too high.", "t")
        assert span_text(doc, Span(0, 19)) == doc.body

    def test_out_of_range(self):
        doc = ingest_document("Taxes are too high.", "t")
        with pytest.raises(SpanOutOfRange):
            check_span(doc, Span(5, 30))

    def test_invalid_construction(self):
        with pytest.raises(ValueError):
            Span(3, 3)
        with pytest.raises(ValueError):
            Span(-1, 2)
        with pytest.raises(ValueError):
            Span(5, 2)

    def test_overlaps(self):
        assert Span(0, 5).overlaps(Span(4, 9))
        assert not Span(0, 5).overlaps(Span(5, 9))
        assert Span(2, 8).overlaps(Span(0, 10))

    @given(st.data())
    def test_round_trip_locates_at_start(self, data):
        body = data.draw(
            st.text(min_size=1, max_size=80).filter(lambda s: normalize_body(s).strip())
        )
        doc = ingest_document(body, "t")
        start = data.draw(st.integers(0, len(doc.body) - 1))
        end = data.draw(st.integers(start + 1, len(doc.body)))
        text = span_text(doc, Span(start, end))
        assert doc.body[start : start + len(text)] == text


class TestStanceRating:
    def test_bounds(self):
        assert StanceRating("topic", 1).value == 1
        assert StanceRating("topic", 5).value == 5
        for bad in (0, 6, -1):
            with pytest.raises(ValueError):
                StanceRating("topic", bad)


def test_document_is_immutable():
    doc = Document(doc_id="d", title="t", body="b", lean=Lean.UNKNOWN, source_url=None)
    with pytest.raises(AttributeError):
        doc.body = "changed"
