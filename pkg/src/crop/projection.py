"""Cross-lingual entity projection by round-trip translation.

Each raw target sentence is translated into the source language, tagged
there, translated back with its entities bracketed by slot markers, and the
bracketed entity strings are matched word-for-word against the original raw
tokens. Labels always attach to the raw tokens; any step that cannot be
completed cleanly discards the sentence with a classified reason instead of
guessing.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .backends.base import TaggerBackend, TranslatorBackend
from .corpus_io import (
    Corpus,
    EntitySpan,
    InvalidBio,
    TaggedSentence,
    repair_bio2,
    spans_from_tags,
    tags_from_spans,
)
from .labeled_seq import (
    BoundarySymbolTable,
    DecodeError,
    SymbolCollision,
    TooManySlots,
    UnpairedSymbol,
    decode,
    encode,
    symbol_counts,
)
from .postprocess import DEFAULT_MAX_WORDS, LanguageVerifier

# Discard reason kinds, in the order checks run.
TOO_LONG = "TooLong"
TOO_MANY_SLOTS = "TooManySlots"
SYMBOL_COLLISION = "SymbolCollision"
DECODE_FAILURE = "DecodeFailure"
LANGUAGE_MISMATCH = "LanguageMismatch"
UNMATCHED_ENTITY = "UnmatchedEntity"
OVERLAP_CONFLICT = "OverlapConflict"
ALL_O = "AllO"

DISCARD_KINDS = (
    TOO_LONG,
    TOO_MANY_SLOTS,
    SYMBOL_COLLISION,
    DECODE_FAILURE,
    LANGUAGE_MISMATCH,
    UNMATCHED_ENTITY,
    OVERLAP_CONFLICT,
    ALL_O,
)


@dataclass(frozen=True)
class DiscardReason:
    kind: str
    detail: str = ""

    def __post_init__(self):
        if self.kind not in DISCARD_KINDS:
            raise ValueError(f"unknown discard kind {self.kind!r}")

    def __str__(self):
        return f"{self.kind}({self.detail})" if self.detail else self.kind


@dataclass(frozen=True)
class MatchPolicy:
    """How entity strings are compared with raw tokens."""

    case_sensitive: bool = True

    def key(self, token: str) -> str:
        return token if self.case_sensitive else token.casefold()


@dataclass
class ProjectionConfig:
    source_lang: str
    table: BoundarySymbolTable = field(default_factory=BoundarySymbolTable)
    match: MatchPolicy = field(default_factory=MatchPolicy)
    max_words: int = DEFAULT_MAX_WORDS
    drop_all_o: bool = True
    verifier: LanguageVerifier | None = None  # None switches the language check off
    batch_size: int = 64
    jobs: int = 1


@dataclass
class ProjectionRecord:
    """Everything that happened to one raw sentence on its round trip."""

    index: int
    raw: TaggedSentence
    fwd: tuple[str, ...] | None = None
    fwd_tagged: TaggedSentence | None = None
    bt: TaggedSentence | None = None
    projected: TaggedSentence | None = None
    discard: DiscardReason | None = None
    provenance: tuple[str, ...] = ()

    @property
    def kept(self) -> bool:
        return self.projected is not None and self.discard is None


@dataclass
class PseudoLabeledCorpus:
    """Projection output for one language: kept sentences plus the full record log."""

    language: str
    records: list[ProjectionRecord]

    def kept_corpus(self) -> Corpus:
        return Corpus(
            [r.projected for r in self.records if r.kept], self.language
        )

    def kept_indices(self) -> list[int]:
        return [r.index for r in self.records if r.kept]

    def discarded_raw(self) -> Corpus:
        return Corpus(
            [r.raw for r in self.records if not r.kept],
            self.language,
            labeled=False,
        )

    def stats(self) -> dict[str, object]:
        kept = sum(1 for r in self.records if r.kept)
        total = len(self.records)
        out: dict[str, object] = {
            "language": self.language,
            "total": total,
            "kept": kept,
            "kept_ratio": (kept / total) if total else 0.0,
        }
        for kind in DISCARD_KINDS:
            out[f"discard.{kind}"] = sum(
                1 for r in self.records if r.discard is not None and r.discard.kind == kind
            )
        return out


def forward_translate(
    raw_corpus: Corpus, translator: TranslatorBackend, source_lang: str
) -> list[list[str]]:
    """Translate every raw sentence into the source language, order preserved."""
    if len(raw_corpus) == 0:
        return []
    return translator.translate(
        [s.tokens for s in raw_corpus], raw_corpus.language, source_lang
    )


def back_translate_labeled(
    tagged_source: TaggedSentence,
    translator: TranslatorBackend,
    table: BoundarySymbolTable,
    target_lang: str,
) -> TaggedSentence | DecodeError:
    """Encode, translate, check symbol conservation, decode.

    Encode failures (too many entities, marker collision) raise; everything
    downstream of the translator comes back as a DecodeError value so callers
    can discard per sentence.
    """
    seq = encode(tagged_source, table)
    [out_tokens] = translator.translate([seq.tokens], tagged_source.language, target_lang)
    if symbol_counts(out_tokens, table) != symbol_counts(seq.tokens, table):
        return _conservation_error(out_tokens, seq.slot_types, table)
    return decode(out_tokens, seq.slot_types, table, target_lang)


def _conservation_error(out_tokens, slot_types, table) -> DecodeError:
    # Let decode classify the damage; it reports the first offending slot.
    result = decode(out_tokens, slot_types, table)
    if isinstance(result, DecodeError):
        return result
    # Unreachable with per-slot pairing; defensive fallback.
    return UnpairedSymbol(-1)


def match_entity(
    entity_tokens: Sequence[str],
    raw_tokens: Sequence[str],
    policy: MatchPolicy = MatchPolicy(),
) -> list[tuple[int, int]]:
    """All non-overlapping occurrences of the entity in the raw sentence,
    leftmost first, exact token-for-token comparison."""
    if not entity_tokens:
        raise ValueError("entity_tokens must be non-empty")
    ent = [policy.key(t) for t in entity_tokens]
    raw = [policy.key(t) for t in raw_tokens]
    out: list[tuple[int, int]] = []
    i = 0
    k = len(ent)
    while i + k <= len(raw):
        if raw[i : i + k] == ent:
            out.append((i, i + k))
            i += k
        else:
            i += 1
    return out


def project(
    raw: TaggedSentence,
    bt: TaggedSentence,
    policy: MatchPolicy = MatchPolicy(),
) -> TaggedSentence | DiscardReason:
    """Attach the back-translated entities' types to the raw tokens.

    Longer entities match first; every occurrence of a matched entity is
    labeled. A sentence is discarded when an entity has no occurrence or two
    entities claim overlapping token ranges with different extents or types.
    """
    entities = [(span, bt.tokens[span.start : span.end]) for span in bt.spans()]
    entities.sort(key=lambda e: (-(e[0].end - e[0].start), e[0].start, e[0].etype))
    claims: dict[tuple[int, int], str] = {}
    owner = [None] * len(raw.tokens)
    for span, tokens in entities:
        ranges = match_entity(tokens, raw.tokens, policy)
        if not ranges:
            return DiscardReason(UNMATCHED_ENTITY, " ".join(tokens))
        for rng in ranges:
            if rng in claims:
                if claims[rng] != span.etype:
                    return DiscardReason(
                        OVERLAP_CONFLICT, f"[{rng[0]},{rng[1]}) claimed twice"
                    )
                continue
            if any(owner[i] is not None for i in range(rng[0], rng[1])):
                return DiscardReason(
                    OVERLAP_CONFLICT, f"[{rng[0]},{rng[1]}) overlaps another entity"
                )
            claims[rng] = span.etype
            for i in range(rng[0], rng[1]):
                owner[i] = rng
    spans = [EntitySpan(s, e, t) for (s, e), t in claims.items()]
    spans.sort(key=lambda s: s.start)
    return TaggedSentence(raw.tokens, tags_from_spans(spans, len(raw.tokens)), raw.language)


def _project_batch(
    batch: list[ProjectionRecord],
    translator: TranslatorBackend,
    source_tagger: TaggerBackend,
    cfg: ProjectionConfig,
    language: str,
) -> list[ProjectionRecord]:
    live = [r for r in batch if r.discard is None]
    if not live:
        return batch

    fwd = translator.translate([r.raw.tokens for r in live], language, cfg.source_lang)
    tag_seqs = source_tagger.tag(fwd)
    for rec, tokens, tags in zip(live, fwd, tag_seqs):
        rec.fwd = tuple(tokens)
        try:
            spans_from_tags(tags)
        except InvalidBio:
            tags = repair_bio2(tags)
            rec.provenance += ("repaired-tagger-output",)
        rec.fwd_tagged = TaggedSentence(tokens, tags, cfg.source_lang)

    for rec in live:
        rec.provenance += ("forward-translated", "tagged")
        try:
            result = back_translate_labeled(rec.fwd_tagged, translator, cfg.table, language)
        except TooManySlots as e:
            rec.discard = DiscardReason(TOO_MANY_SLOTS, str(e))
            continue
        except SymbolCollision as e:
            rec.discard = DiscardReason(SYMBOL_COLLISION, str(e))
            continue
        if isinstance(result, DecodeError):
            rec.discard = DiscardReason(DECODE_FAILURE, str(result))
            continue
        rec.bt = result
        rec.provenance += ("back-translated",)
        if cfg.verifier is not None and not cfg.verifier(result.tokens, language):
            rec.discard = DiscardReason(LANGUAGE_MISMATCH, "back-translation script mismatch")
            continue
        outcome = project(rec.raw, result, cfg.match)
        if isinstance(outcome, DiscardReason):
            rec.discard = outcome
            continue
        if cfg.drop_all_o and outcome.is_all_o:
            rec.discard = DiscardReason(ALL_O)
            continue
        rec.projected = outcome
        rec.provenance += ("projected",)
    return batch


def iter_projection(
    raw_corpus: Corpus,
    translator: TranslatorBackend,
    source_tagger: TaggerBackend,
    cfg: ProjectionConfig,
) -> Iterator[ProjectionRecord]:
    """Project one corpus, yielding records in input order.

    ``cfg.jobs`` > 1 processes batches on a thread pool; output order is
    independent of the worker count.
    """
    records = [ProjectionRecord(i, s) for i, s in enumerate(raw_corpus)]
    for rec in records:
        if len(rec.raw) > cfg.max_words:
            rec.discard = DiscardReason(TOO_LONG, f"{len(rec.raw)} tokens")
    batches = [
        records[i : i + cfg.batch_size] for i in range(0, len(records), cfg.batch_size)
    ]
    language = raw_corpus.language

    def work(batch):
        return _project_batch(batch, translator, source_tagger, cfg, language)

    if cfg.jobs > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            for batch in pool.map(work, batches):
                yield from batch
    else:
        for batch in batches:
            yield from work(batch)


def project_corpus(
    raw_corpus: Corpus,
    translator: TranslatorBackend,
    source_tagger: TaggerBackend,
    cfg: ProjectionConfig,
) -> PseudoLabeledCorpus:
    return PseudoLabeledCorpus(
        raw_corpus.language,
        list(iter_projection(raw_corpus, translator, source_tagger, cfg)),
    )


def run_projection(
    raw_corpora: Mapping[str, Corpus],
    translator: TranslatorBackend,
    source_tagger: TaggerBackend,
    cfg: ProjectionConfig,
) -> dict[str, PseudoLabeledCorpus]:
    """Project every target language; per-sentence failures are recorded in
    the result, only backend failures abort."""
    return {
        lang: project_corpus(corpus, translator, source_tagger, cfg)
        for lang, corpus in raw_corpora.items()
    }
