from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from crop.corpus_io import (
    Corpus,
    EmptyToken,
    EntitySpan,
    InvalidBio,
    MalformedLine,
    OrphanInsideTag,
    OverlappingSpans,
    SpanOutOfRange,
    TaggedSentence,
    TagScheme,
    UnknownTag,
    parse_conll,
    parse_conll_details,
    parse_raw,
    repair_bio2,
    spans_from_tags,
    tags_from_spans,
    write_conll,
)

CONLL4 = TagScheme(["LOC", "PER", "ORG", "MISC"])
XTREME3 = TagScheme(["LOC", "PER", "ORG"])

EU_TEXT = "EU\tB-ORG\nrejects\tO\nGerman\tB-MISC\ncall\tO\n"


class TestTagScheme:
    def test_tag_counts(self):
        assert XTREME3.tag_count == 7
        assert CONLL4.tag_count == 9

    def test_tags_enumeration(self):
        assert XTREME3.tags() == ("O", "B-LOC", "I-LOC", "B-PER", "I-PER", "B-ORG", "I-ORG")

    def test_valid_tags(self):
        assert CONLL4.is_valid_tag("B-MISC")
        assert CONLL4.is_valid_tag("O")
        assert not CONLL4.is_valid_tag("B-GPE")
        assert not CONLL4.is_valid_tag("I")
        assert not CONLL4.is_valid_tag("")

    def test_rejects_empty_and_duplicates(self):
        with pytest.raises(ValueError):
            TagScheme([])
        with pytest.raises(ValueError):
            TagScheme(["LOC", "LOC"])


class TestParseConll:
    def test_basic_sentence(self):
        corpus = parse_conll(EU_TEXT, CONLL4)
        assert len(corpus) == 1
        sent = corpus.sentences[0]
        assert sent.tokens == ("EU", "rejects", "German", "call")
        assert sent.spans() == [EntitySpan(0, 1, "ORG"), EntitySpan(2, 3, "MISC")]

    def test_empty_input(self):
        assert len(parse_conll("", CONLL4)) == 0

    def test_space_separator(self):
        corpus = parse_conll("EU B-ORG\nrejects  O\n", CONLL4)
        assert corpus.sentences[0].tags == ("B-ORG", "O")

    def test_multiple_sentences(self):
        text = "a\tO\n\nb\tB-LOC\n\n"
        corpus = parse_conll(text, CONLL4)
        assert len(corpus) == 2

    def test_orphan_inside_strict(self):
        with pytest.raises(OrphanInsideTag):
            parse_conll("X\tI-LOC\n", CONLL4, mode="strict")

    def test_orphan_inside_repair(self):
        details = parse_conll_details("X\tI-LOC\n", CONLL4, mode="repair")
        assert details.corpus.sentences[0].tags == ("B-LOC",)
        assert details.repaired == [0]

    def test_repair_type_switch(self):
        corpus = parse_conll("a\tB-LOC\nb\tI-PER\n", CONLL4, mode="repair")
        assert corpus.sentences[0].tags == ("B-LOC", "B-PER")

    def test_malformed_line(self):
        with pytest.raises(MalformedLine):
            parse_conll("one\ttwo\tthree\n", CONLL4)
        with pytest.raises(MalformedLine):
            parse_conll("loneword\n", CONLL4)

    def test_empty_token(self):
        with pytest.raises(EmptyToken):
            parse_conll("\tO\n", CONLL4)

    def test_unknown_tag(self):
        with pytest.raises(UnknownTag):
            parse_conll("X\tB-GPE\n", CONLL4)

    def test_parse_raw(self):
        corpus = parse_raw("a b c\n\nd e\n", language="xx")
        assert len(corpus) == 2
        assert not corpus.labeled
        assert corpus.sentences[0].is_all_o


class TestWriteConll:
    def test_empty(self):
        assert write_conll(Corpus([], "und")) == ""

    def test_roundtrip_fixture(self):
        corpus = parse_conll(EU_TEXT, CONLL4)
        assert write_conll(corpus) == EU_TEXT + "\n"
        assert parse_conll(write_conll(corpus), CONLL4) == corpus


class TestSpanCodec:
    def test_all_o(self):
        assert spans_from_tags(["O", "O", "O"]) == []

    def test_two_entities(self):
        assert spans_from_tags(["B-LOC", "I-LOC", "O", "B-PER"]) == [
            EntitySpan(0, 2, "LOC"),
            EntitySpan(3, 4, "PER"),
        ]

    def test_adjacent_b_starts_new_entity(self):
        assert spans_from_tags(["B-LOC", "B-LOC"]) == [
            EntitySpan(0, 1, "LOC"),
            EntitySpan(1, 2, "LOC"),
        ]

    def test_orphan_raises(self):
        with pytest.raises(InvalidBio):
            spans_from_tags(["O", "I-LOC"])
        with pytest.raises(InvalidBio):
            spans_from_tags(["B-PER", "I-LOC"])

    def test_tags_from_spans_empty(self):
        assert tags_from_spans([], 3) == ("O", "O", "O")

    def test_tags_from_spans_inverse(self):
        spans = [EntitySpan(0, 2, "LOC"), EntitySpan(3, 4, "PER")]
        assert spans_from_tags(tags_from_spans(spans, 4)) == spans

    def test_overlap_rejected(self):
        with pytest.raises(OverlappingSpans):
            tags_from_spans([EntitySpan(0, 2, "LOC"), EntitySpan(1, 3, "PER")], 4)

    def test_out_of_range(self):
        with pytest.raises(SpanOutOfRange):
            tags_from_spans([EntitySpan(0, 5, "LOC")], 3)

    def test_repair_bio2(self):
        assert repair_bio2(["I-LOC", "I-LOC", "O", "I-PER"]) == (
            "B-LOC", "I-LOC", "O", "B-PER",
        )


# -- property tests -----------------------------------------------------------

_types = st.sampled_from(["LOC", "PER", "ORG", "MISC"])
_token = st.text(
    alphabet=st.characters(whitelist_categories=["Ll", "Lu"], max_codepoint=0x24F),
    min_size=1,
    max_size=8,
)


@st.composite
def tagged_sentences(draw, max_len=20, max_entities=10):
    n = draw(st.integers(min_value=1, max_value=max_len))
    tokens = [draw(_token) for _ in range(n)]
    spans = []
    pos = 0
    while pos < n and len(spans) < max_entities:
        if draw(st.booleans()):
            end = draw(st.integers(min_value=pos + 1, max_value=min(pos + 3, n)))
            spans.append(EntitySpan(pos, end, draw(_types)))
            pos = end
        else:
            pos += 1
    return TaggedSentence(tokens, tags_from_spans(spans, n), "und")


@given(tagged_sentences())
def test_span_tag_bijection(sent):
    assert tags_from_spans(sent.spans(), len(sent)) == sent.tags


@given(st.lists(tagged_sentences(), max_size=8))
def test_conll_roundtrip_property(sents):
    corpus = Corpus(sents, "und")
    assert parse_conll(write_conll(corpus), CONLL4) == corpus


def test_validate_catches_reserved_token():
    sent = TaggedSentence(["__SLOT0__", "x"], ["O", "O"])
    with pytest.raises(InvalidBio):
        sent.validate()


def test_corpus_language_consistency():
    with pytest.raises(ValueError):
        Corpus([TaggedSentence(["a"], ["O"], "xx")], "yy")
