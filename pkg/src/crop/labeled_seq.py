"""Bracketing entity spans with paired boundary symbols so they survive translation.

``encode`` turns a tagged sentence into a token stream where every entity is
wrapped in a pair of ``__SLOT{i}__`` markers; ``decode`` recovers a tagged
sentence from such a stream after it has been through a translator. Decoding
is total: malformed bracketing always yields exactly one classified error
value instead of a guess, so callers can discard the sentence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus_io import EntitySpan, TaggedSentence, tags_from_spans

_SYMBOL_RE = re.compile(r"^__SLOT(\d+)__$")


class EncodeError(Exception):
    pass


class TooManySlots(EncodeError):
    def __init__(self, count: int, max_slots: int):
        super().__init__(f"{count} entity spans exceed the {max_slots} available slots")
        self.count = count
        self.max_slots = max_slots


class SymbolCollision(EncodeError):
    def __init__(self, token: str):
        super().__init__(f"input token {token!r} collides with a boundary symbol")
        self.token = token


@dataclass(frozen=True)
class DecodeError:
    """Why a bracketed token stream could not be decoded. ``slot`` is the
    offending slot index (-1 when no specific slot can be blamed)."""

    slot: int

    def __str__(self):
        return f"{type(self).__name__}(slot={self.slot})"


class UnpairedSymbol(DecodeError):
    """A slot symbol occurs a number of times other than exactly twice."""


class UnknownSlot(DecodeError):
    """A slot symbol appears that the encoder never assigned."""


class EmptySlot(DecodeError):
    """Nothing between a symbol pair."""


class NestedSlots(DecodeError):
    """A second symbol opens before the current pair closes."""


class MissingSlot(DecodeError):
    """An assigned slot never appears in the stream."""


@dataclass(frozen=True)
class BoundarySymbolTable:
    """The reserved ``__SLOT0__..__SLOT{n-1}__`` marker inventory."""

    max_slots: int = 10

    def render(self, i: int) -> str:
        if not 0 <= i < self.max_slots:
            raise ValueError(f"slot {i} outside 0..{self.max_slots - 1}")
        return f"__SLOT{i}__"

    def slot_of(self, token: str) -> int | None:
        """Slot index for any ``__SLOT<d>__`` token, valid range or not."""
        m = _SYMBOL_RE.match(token)
        return int(m.group(1)) if m else None

    def is_symbol(self, token: str) -> bool:
        return _SYMBOL_RE.match(token) is not None


@dataclass(frozen=True)
class LabeledSequence:
    """Token stream with paired slot markers plus the slot -> entity-type map.

    Invariants (enforced by encode, checked by decode): every marker present
    occurs exactly twice with at least one plain token in between; pairs are
    flat (no nesting or interleaving); markers and ``slot_types`` keys agree.
    """

    tokens: tuple[str, ...]
    slot_types: Mapping[int, str]
    language: str = "und"

    def __init__(self, tokens: Sequence[str], slot_types: Mapping[int, str], language: str = "und"):
        object.__setattr__(self, "tokens", tuple(tokens))
        object.__setattr__(self, "slot_types", dict(slot_types))
        object.__setattr__(self, "language", language)

    def __len__(self) -> int:
        return len(self.tokens)


def encode(sentence: TaggedSentence, table: BoundarySymbolTable = BoundarySymbolTable()) -> LabeledSequence:
    """Wrap each entity span in a fresh marker pair, numbered left to right from 0."""
    spans = sentence.spans()
    if len(spans) > table.max_slots:
        raise TooManySlots(len(spans), table.max_slots)
    for tok in sentence.tokens:
        if table.is_symbol(tok):
            raise SymbolCollision(tok)
    opens = {s.start: i for i, s in enumerate(spans)}
    closes = {s.end: i for i, s in enumerate(spans)}
    out: list[str] = []
    for pos, tok in enumerate(sentence.tokens):
        if pos in opens:
            out.append(table.render(opens[pos]))
        out.append(tok)
        if pos + 1 in closes:
            out.append(table.render(closes[pos + 1]))
    slot_types = {i: s.etype for i, s in enumerate(spans)}
    return LabeledSequence(out, slot_types, sentence.language)


def slot_contents(
    tokens: Sequence[str],
    slot_types: Mapping[int, str],
    table: BoundarySymbolTable = BoundarySymbolTable(),
) -> "dict[int, tuple[int, int]] | DecodeError":
    """Locate every slot's bracketed region in the symbol-stripped token stream.

    Returns ``{slot: (start, end)}`` where positions index the plain tokens
    only, or the first DecodeError encountered left to right.
    """
    seen: dict[int, int] = {}
    regions: dict[int, tuple[int, int]] = {}
    open_slot: int | None = None
    open_start = 0
    plain = 0
    for tok in tokens:
        slot = table.slot_of(tok)
        if slot is None:
            plain += 1
            continue
        if slot not in slot_types:
            return UnknownSlot(slot)
        seen[slot] = seen.get(slot, 0) + 1
        if seen[slot] > 2:
            return UnpairedSymbol(slot)
        if open_slot is None:
            open_slot, open_start = slot, plain
        elif open_slot == slot:
            if plain == open_start:
                return EmptySlot(slot)
            regions[slot] = (open_start, plain)
            open_slot = None
        else:
            return NestedSlots(slot)
    if open_slot is not None:
        return UnpairedSymbol(open_slot)
    for slot in slot_types:
        if slot not in regions:
            return MissingSlot(slot)
    return regions


def decode(
    tokens: Sequence[str],
    slot_types: Mapping[int, str],
    table: BoundarySymbolTable = BoundarySymbolTable(),
    language: str = "und",
) -> TaggedSentence | DecodeError:
    """Rebuild a tagged sentence from a bracketed stream produced by a translator."""
    regions = slot_contents(tokens, slot_types, table)
    if isinstance(regions, DecodeError):
        return regions
    plain = strip_symbols(tokens, table)
    spans = [EntitySpan(start, end, slot_types[slot]) for slot, (start, end) in regions.items()]
    tags = tags_from_spans(spans, len(plain))
    return TaggedSentence(plain, tags, language)


def strip_symbols(tokens: Sequence[str], table: BoundarySymbolTable = BoundarySymbolTable()) -> tuple[str, ...]:
    return tuple(t for t in tokens if not table.is_symbol(t))


def symbol_counts(tokens: Sequence[str], table: BoundarySymbolTable = BoundarySymbolTable()) -> dict[str, int]:
    """Multiset of boundary symbols, used to check translators conserve them."""
    counts: dict[str, int] = {}
    for t in tokens:
        if table.is_symbol(t):
            counts[t] = counts.get(t, 0) + 1
    return counts


def write_labeled(seqs: Sequence[LabeledSequence]) -> str:
    """Two lines per sequence: space-joined tokens, then ``0:LOC 1:PER`` slot types."""
    lines: list[str] = []
    for seq in seqs:
        lines.append(" ".join(seq.tokens))
        lines.append(" ".join(f"{i}:{t}" for i, t in sorted(seq.slot_types.items())))
    return "".join(line + "\n" for line in lines)


def parse_labeled(text: str, language: str = "und") -> list[LabeledSequence]:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) % 2 != 0:
        raise ValueError(f"labeled-sequence file has odd line count {len(lines)}")
    out = []
    for i in range(0, len(lines), 2):
        tokens = lines[i].split()
        slot_types: dict[int, str] = {}
        for item in lines[i + 1].split():
            slot_str, _, etype = item.partition(":")
            if not etype:
                raise ValueError(f"line {i + 2}: bad slot entry {item!r}")
            slot_types[int(slot_str)] = etype
        out.append(LabeledSequence(tokens, slot_types, language))
    return out
