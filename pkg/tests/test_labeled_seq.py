from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from crop.corpus_io import TaggedSentence
from crop.labeled_seq import (
    BoundarySymbolTable,
    DecodeError,
    EmptySlot,
    LabeledSequence,
    MissingSlot,
    NestedSlots,
    SymbolCollision,
    TooManySlots,
    UnknownSlot,
    UnpairedSymbol,
    decode,
    encode,
    parse_labeled,
    strip_symbols,
    symbol_counts,
    write_labeled,
)

from test_corpus_io import tagged_sentences

TABLE = BoundarySymbolTable()


class TestTable:
    def test_render(self):
        assert TABLE.render(0) == "__SLOT0__"
        assert TABLE.render(9) == "__SLOT9__"

    def test_render_out_of_range(self):
        with pytest.raises(ValueError):
            TABLE.render(10)

    def test_slot_of(self):
        assert TABLE.slot_of("__SLOT3__") == 3
        assert TABLE.slot_of("__SLOT12__") == 12
        assert TABLE.slot_of("word") is None
        assert TABLE.slot_of("__SLOT__") is None


class TestEncode:
    def test_single_entity(self):
        sent = TaggedSentence(
            ["Gothenburg", "is", "in", "Sweden"], ["B-LOC", "O", "O", "O"], "en"
        )
        seq = encode(sent, TABLE)
        assert seq.tokens == ("__SLOT0__", "Gothenburg", "__SLOT0__", "is", "in", "Sweden")
        assert seq.slot_types == {0: "LOC"}

    def test_all_o_unchanged(self):
        sent = TaggedSentence(["just", "words"], ["O", "O"])
        seq = encode(sent, TABLE)
        assert seq.tokens == sent.tokens
        assert seq.slot_types == {}

    def test_too_many_slots(self):
        tokens = [f"w{i}" for i in range(22)]
        tags = []
        for _ in range(11):
            tags += ["B-LOC", "O"]
        with pytest.raises(TooManySlots):
            encode(TaggedSentence(tokens, tags), TABLE)

    def test_symbol_collision(self):
        sent = TaggedSentence(["__SLOT0__"], ["O"])
        with pytest.raises(SymbolCollision):
            encode(sent, TABLE)

    def test_left_to_right_numbering(self):
        sent = TaggedSentence(
            ["a", "X", "b", "Y"], ["O", "B-PER", "O", "B-LOC"]
        )
        seq = encode(sent, TABLE)
        assert seq.slot_types == {0: "PER", 1: "LOC"}
        assert seq.tokens.index("__SLOT0__") < seq.tokens.index("__SLOT1__")


class TestDecode:
    def test_translated_entity(self):
        result = decode(
            ["__SLOT0__", "哥德堡", "__SLOT0__", "是", "城市"], {0: "LOC"}, TABLE, "zh"
        )
        assert isinstance(result, TaggedSentence)
        assert result.tokens == ("哥德堡", "是", "城市")
        assert result.tags == ("B-LOC", "O", "O")

    def test_unpaired_symbol(self):
        result = decode(["__SLOT0__", "x"], {0: "LOC"}, TABLE)
        assert isinstance(result, UnpairedSymbol)
        assert result.slot == 0

    def test_three_occurrences(self):
        result = decode(
            ["__SLOT0__", "x", "__SLOT0__", "__SLOT0__"], {0: "LOC"}, TABLE
        )
        assert isinstance(result, UnpairedSymbol)

    def test_unknown_slot(self):
        result = decode(["__SLOT5__", "x", "__SLOT5__"], {0: "LOC"}, TABLE)
        assert isinstance(result, UnknownSlot)
        assert result.slot == 5

    def test_empty_slot(self):
        result = decode(["__SLOT0__", "__SLOT0__", "x"], {0: "LOC"}, TABLE)
        assert isinstance(result, EmptySlot)

    def test_nested(self):
        result = decode(
            ["__SLOT0__", "a", "__SLOT1__", "b", "__SLOT1__", "c", "__SLOT0__"],
            {0: "LOC", 1: "PER"},
            TABLE,
        )
        assert isinstance(result, NestedSlots)

    def test_interleaved(self):
        result = decode(
            ["__SLOT0__", "a", "__SLOT1__", "b", "__SLOT0__", "c", "__SLOT1__"],
            {0: "LOC", 1: "PER"},
            TABLE,
        )
        assert isinstance(result, NestedSlots)

    def test_missing_slot(self):
        result = decode(["plain", "words"], {0: "LOC"}, TABLE)
        assert isinstance(result, MissingSlot)
        assert result.slot == 0

    def test_adjacent_slots_ok(self):
        result = decode(
            ["__SLOT0__", "a", "__SLOT0__", "__SLOT1__", "b", "__SLOT1__"],
            {0: "LOC", 1: "PER"},
            TABLE,
        )
        assert isinstance(result, TaggedSentence)
        assert result.tags == ("B-LOC", "B-PER")


class TestStrip:
    def test_no_symbols(self):
        assert strip_symbols(["a", "b"], TABLE) == ("a", "b")

    def test_symbols_only(self):
        assert strip_symbols(["__SLOT0__", "__SLOT0__"], TABLE) == ()

    def test_symbol_counts(self):
        counts = symbol_counts(["__SLOT0__", "a", "__SLOT0__", "__SLOT1__"], TABLE)
        assert counts == {"__SLOT0__": 2, "__SLOT1__": 1}


@given(tagged_sentences())
def test_encode_decode_roundtrip(sent):
    seq = encode(sent, TABLE)
    assert decode(seq.tokens, seq.slot_types, TABLE, sent.language) == sent


_fuzz_token = st.one_of(
    st.sampled_from(["a", "b", "__SLOT0__", "__SLOT1__", "__SLOT2__", "__SLOT7__"]),
    st.text(min_size=1, max_size=4),
)


@given(
    st.lists(_fuzz_token, max_size=12),
    st.dictionaries(st.integers(0, 3), st.sampled_from(["LOC", "PER"]), max_size=3),
)
def test_decode_totality(tokens, slot_types):
    """Arbitrary bracketing either decodes or yields one classified error."""
    result = decode(tokens, slot_types, TABLE)
    assert isinstance(result, (TaggedSentence, DecodeError))
    if isinstance(result, TaggedSentence):
        # success implies the invariants actually held
        assert strip_symbols(tokens, TABLE) == result.tokens
        assert set(slot_types) == {
            TABLE.slot_of(t) for t in tokens if TABLE.is_symbol(t)
        }


@given(tagged_sentences())
def test_strip_consistency(sent):
    assert strip_symbols(encode(sent, TABLE).tokens, TABLE) == sent.tokens


class TestSerialization:
    def test_roundtrip(self):
        seqs = [
            LabeledSequence(["__SLOT0__", "a", "__SLOT0__", "b"], {0: "LOC"}, "xx"),
            LabeledSequence(["plain"], {}, "xx"),
        ]
        text = write_labeled(seqs)
        assert parse_labeled(text, "xx") == seqs

    def test_odd_line_count(self):
        with pytest.raises(ValueError):
            parse_labeled("one line\n")

    def test_slot_line_format(self):
        seq = LabeledSequence(["__SLOT1__", "x", "__SLOT1__"], {1: "PER"})
        assert write_labeled([seq]).split("\n")[1] == "1:PER"
