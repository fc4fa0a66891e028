"""Build bracketed translation-training data from bitext and word alignments.

Aligned phrase pairs are extracted from Pharaoh-format alignments with the
standard consistency rule (at least one link inside the rectangle, no link
crossing its border). A random subset of mutually non-overlapping pairs is
bracketed with slot markers on both sides, and plain and bracketed sentence
pairs are interleaved into one training stream.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .labeled_seq import BoundarySymbolTable, LabeledSequence, TooManySlots

# Pseudo entity type carried by slots that bracket aligned spans rather than
# typed entities.
SPAN_TYPE = "SPAN"


class AlignmentError(Exception):
    pass


class MalformedLink(AlignmentError):
    def __init__(self, lineno: int, item: str):
        super().__init__(f"line {lineno}: expected 'i-j', got {item!r}")
        self.lineno = lineno
        self.item = item


class IndexOutOfRange(AlignmentError):
    pass


class LengthMismatch(AlignmentError):
    pass


@dataclass(frozen=True)
class WordAlignment:
    """Set of (source index, target index) links for one sentence pair."""

    links: frozenset[tuple[int, int]]

    def __init__(self, links: Iterable[tuple[int, int]]):
        object.__setattr__(self, "links", frozenset(links))

    def check_bounds(self, src_len: int, tgt_len: int) -> None:
        for s, t in self.links:
            if not (0 <= s < src_len and 0 <= t < tgt_len):
                raise IndexOutOfRange(
                    f"link {s}-{t} outside {src_len}x{tgt_len} sentence pair"
                )


@dataclass(frozen=True)
class PhrasePair:
    """Aligned half-open token ranges: src [u1, u2) translates to tgt [v1, v2)."""

    src_start: int
    src_end: int
    tgt_start: int
    tgt_end: int

    @property
    def src_len(self) -> int:
        return self.src_end - self.src_start

    @property
    def tgt_len(self) -> int:
        return self.tgt_end - self.tgt_start

    def overlaps(self, other: "PhrasePair") -> bool:
        """True when the pairs collide on either side."""
        src = self.src_start < other.src_end and other.src_start < self.src_end
        tgt = self.tgt_start < other.tgt_end and other.tgt_start < self.tgt_end
        return src or tgt


@dataclass(frozen=True)
class MixedPair:
    """One training example: a sentence pair, plain or span-bracketed.

    ``kind`` records which objective the pair belongs to; a bracketed pair may
    still carry zero spans when the sampler drew none.
    """

    kind: str  # plain | labeled
    src: LabeledSequence
    tgt: LabeledSequence


@dataclass(frozen=True)
class MixConfig:
    alpha: float = 0.5  # fraction of bracketed examples in the stream
    k_max: int = 10
    seed: int = 0
    mode: str = "alternate"  # alternate | bernoulli
    max_phrase_len: int = 7

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")
        if self.mode not in ("alternate", "bernoulli"):
            raise ValueError(f"mode must be 'alternate' or 'bernoulli', got {self.mode!r}")


def parse_pharaoh(text: str) -> list[WordAlignment]:
    """Parse one ``i-j i-j ...`` line per sentence pair; blank lines mean no links."""
    out = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        links = set()
        for item in line.split():
            s, sep, t = item.partition("-")
            if not sep or not s.isdigit() or not t.isdigit():
                raise MalformedLink(lineno, item)
            links.add((int(s), int(t)))
        out.append(WordAlignment(links))
    # split("\n") yields one trailing empty line for newline-terminated text
    if text.endswith("\n") or text == "":
        out.pop()
    return out


def extract_phrase_pairs(
    src_len: int,
    tgt_len: int,
    alignment: WordAlignment,
    max_phrase_len: int = 7,
) -> list[PhrasePair]:
    """All consistent phrase pairs with both sides at most ``max_phrase_len``.

    A pair is consistent when at least one link lies inside the src x tgt
    rectangle and no link joins a token inside the rectangle to one outside
    it on the other side. Unaligned tokens may sit anywhere inside.
    """
    alignment.check_bounds(src_len, tgt_len)
    links = sorted(alignment.links)
    aligned_tgt = {t for _, t in links}
    pairs: list[PhrasePair] = []
    for u1 in range(src_len):
        for u2 in range(u1 + 1, min(u1 + max_phrase_len, src_len) + 1):
            inside = [(s, t) for s, t in links if u1 <= s < u2]
            if not inside:
                continue
            lo = min(t for _, t in inside)
            hi = max(t for _, t in inside) + 1
            # Every link landing in the target hull must come from inside the
            # source span, otherwise no consistent rectangle exists here.
            if any(not (u1 <= s < u2) for s, t in links if lo <= t < hi):
                continue
            # Grow [v1, v2) over unaligned target tokens around the hull.
            v1 = lo
            while True:
                v2 = hi
                while True:
                    if v2 - v1 <= max_phrase_len:
                        pairs.append(PhrasePair(u1, u2, v1, v2))
                    if v2 >= tgt_len or v2 in aligned_tgt:
                        break
                    v2 += 1
                if v1 == 0 or (v1 - 1) in aligned_tgt:
                    break
                v1 -= 1
    pairs.sort(key=lambda p: (p.src_start, p.src_end, p.tgt_start, p.tgt_end))
    return pairs


def sample_spans(
    pairs: Sequence[PhrasePair],
    k_max: int = 10,
    rng: random.Random | None = None,
) -> list[PhrasePair]:
    """Pick up to ``k_max`` mutually non-overlapping pairs, uniformly at random.

    Draws a target count in [0, k_max], then repeatedly selects among the
    pairs still compatible with everything selected so far; stops early when
    none remain. Deterministic for a seeded ``rng``.
    """
    rng = rng or random.Random(0)
    if not pairs:
        return []
    target = rng.randint(0, k_max)
    chosen: list[PhrasePair] = []
    remaining = list(pairs)
    while remaining and len(chosen) < target:
        pick = remaining.pop(rng.randrange(len(remaining)))
        chosen.append(pick)
        remaining = [p for p in remaining if not p.overlaps(pick)]
    return chosen


def build_labeled_pair(
    src_tokens: Sequence[str],
    tgt_tokens: Sequence[str],
    spans: Sequence[PhrasePair],
    table: BoundarySymbolTable = BoundarySymbolTable(),
    src_lang: str = "und",
    tgt_lang: str = "und",
) -> tuple[LabeledSequence, LabeledSequence]:
    """Bracket each aligned span with the same slot marker on both sides.

    Slots are numbered by source start order; stripping the markers from
    either output recovers the corresponding input sentence.
    """
    if len(spans) > table.max_slots:
        raise TooManySlots(len(spans), table.max_slots)
    ordered = sorted(spans, key=lambda p: p.src_start)

    def bracket(tokens: Sequence[str], bounds: list[tuple[int, int, int]]) -> list[str]:
        opens = {start: i for i, start, _ in bounds}
        closes = {end: i for i, _, end in bounds}
        out = []
        for pos, tok in enumerate(tokens):
            if pos in opens:
                out.append(table.render(opens[pos]))
            out.append(tok)
            if pos + 1 in closes:
                out.append(table.render(closes[pos + 1]))
        return out

    src_bounds = [(i, p.src_start, p.src_end) for i, p in enumerate(ordered)]
    tgt_bounds = [(i, p.tgt_start, p.tgt_end) for i, p in enumerate(ordered)]
    slot_types = {i: SPAN_TYPE for i in range(len(ordered))}
    return (
        LabeledSequence(bracket(src_tokens, src_bounds), slot_types, src_lang),
        LabeledSequence(bracket(tgt_tokens, tgt_bounds), slot_types, tgt_lang),
    )


def _labeled_position(index: int, cfg: MixConfig, rng: random.Random) -> bool:
    if cfg.mode == "bernoulli":
        return rng.random() < cfg.alpha
    # Deterministic alternation emitting a bracketed pair whenever the
    # cumulative labeled quota crosses an integer; alpha=0.5 gives
    # plain, labeled, plain, labeled, ...
    return math.floor((index + 1) * cfg.alpha) > math.floor(index * cfg.alpha)


def emit_mixed_corpus(
    bitext: Sequence[tuple[Sequence[str], Sequence[str]]],
    alignments: Sequence[WordAlignment],
    cfg: MixConfig = MixConfig(),
    table: BoundarySymbolTable = BoundarySymbolTable(),
    src_lang: str = "und",
    tgt_lang: str = "und",
) -> Iterator[MixedPair]:
    """Interleave plain and bracketed sentence pairs per the mix config.

    Output order equals input order and is byte-reproducible for a fixed
    seed; every bracketed pair uses spans sampled via ``sample_spans``.
    """
    if len(bitext) != len(alignments):
        raise LengthMismatch(
            f"{len(bitext)} sentence pairs vs {len(alignments)} alignments"
        )
    mode_rng = random.Random(f"{cfg.seed}:mode")
    for i, ((src, tgt), alignment) in enumerate(zip(bitext, alignments)):
        if _labeled_position(i, cfg, mode_rng):
            pairs = extract_phrase_pairs(len(src), len(tgt), alignment, cfg.max_phrase_len)
            spans = sample_spans(pairs, cfg.k_max, random.Random(f"{cfg.seed}:{i}"))
            sp, tp = build_labeled_pair(src, tgt, spans, table, src_lang, tgt_lang)
            yield MixedPair("labeled", sp, tp)
        else:
            empty: dict[int, str] = {}
            yield MixedPair(
                "plain",
                LabeledSequence(src, empty, src_lang),
                LabeledSequence(tgt, empty, tgt_lang),
            )
