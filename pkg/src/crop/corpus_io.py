"""Reading, writing, and validating BIO-2 tagged corpora in CoNLL column format.

A corpus is a list of tagged sentences; each sentence is a token sequence with
one BIO-2 tag per token. Raw (unannotated) text is represented as all-O
sentences with ``labeled=False`` so the whole pipeline moves a single payload
type around.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

# Tokens of this shape are reserved for bracketing entity spans inside
# sequences handed to a translator; corpus text must never contain them.
RESERVED_TOKEN_RE = re.compile(r"^__SLOT\d+__$")

_WHITESPACE_RE = re.compile(r"\s")


class CorpusError(Exception):
    """Base class for corpus parsing/validation failures."""


class MalformedLine(CorpusError):
    def __init__(self, lineno: int, line: str):
        super().__init__(f"line {lineno}: expected 'token<TAB or space>tag', got {line!r}")
        self.lineno = lineno
        self.line = line


class EmptyToken(CorpusError):
    def __init__(self, lineno: int):
        super().__init__(f"line {lineno}: empty token")
        self.lineno = lineno


class UnknownTag(CorpusError):
    def __init__(self, lineno: int, tag: str):
        super().__init__(f"line {lineno}: tag {tag!r} is not in the tag scheme")
        self.lineno = lineno
        self.tag = tag


class OrphanInsideTag(CorpusError):
    def __init__(self, lineno: int, tag: str):
        super().__init__(f"line {lineno}: {tag!r} does not continue an open entity")
        self.lineno = lineno
        self.tag = tag


class InvalidBio(CorpusError):
    pass


class OverlappingSpans(CorpusError):
    pass


class SpanOutOfRange(CorpusError):
    pass


@dataclass(frozen=True)
class TagScheme:
    """An ordered set of entity types defining the valid BIO-2 tag inventory."""

    entity_types: tuple[str, ...]

    def __init__(self, entity_types: Iterable[str]):
        types = tuple(entity_types)
        if not types:
            raise ValueError("a tag scheme needs at least one entity type")
        if len(set(types)) != len(types):
            raise ValueError(f"duplicate entity types in {types}")
        for t in types:
            if not t or any(ch.isspace() for ch in t):
                raise ValueError(f"bad entity type {t!r}")
        object.__setattr__(self, "entity_types", types)
        object.__setattr__(self, "_tag_set", frozenset(self.tags()))

    @property
    def tag_count(self) -> int:
        return 2 * len(self.entity_types) + 1

    def tags(self) -> tuple[str, ...]:
        """All valid tags: O first, then B-X/I-X in entity-type order."""
        out = ["O"]
        for t in self.entity_types:
            out.append(f"B-{t}")
            out.append(f"I-{t}")
        return tuple(out)

    def is_valid_tag(self, tag: str) -> bool:
        return tag in self._tag_set


@dataclass(frozen=True)
class EntitySpan:
    """Half-open token range [start, end) carrying one entity type."""

    start: int
    end: int
    etype: str

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise SpanOutOfRange(f"bad span [{self.start}, {self.end})")

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    language: str = "und"

    def __init__(self, tokens: Sequence[str], tags: Sequence[str], language: str = "und"):
        object.__setattr__(self, "tokens", tuple(tokens))
        object.__setattr__(self, "tags", tuple(tags))
        object.__setattr__(self, "language", language)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def is_all_o(self) -> bool:
        return all(t == "O" for t in self.tags)

    def spans(self) -> list[EntitySpan]:
        return spans_from_tags(self.tags)

    def validate(self, scheme: TagScheme | None = None) -> None:
        """Raise a CorpusError describing the first violated invariant, if any."""
        if len(self.tokens) != len(self.tags):
            raise InvalidBio(
                f"{len(self.tokens)} tokens vs {len(self.tags)} tags"
            )
        for tok in self.tokens:
            if not tok:
                raise EmptyToken(0)
            if any(ch.isspace() for ch in tok):
                raise InvalidBio(f"token {tok!r} contains whitespace")
            if RESERVED_TOKEN_RE.match(tok):
                raise InvalidBio(f"token {tok!r} collides with a reserved boundary symbol")
        if scheme is not None:
            for tag in self.tags:
                if not scheme.is_valid_tag(tag):
                    raise UnknownTag(0, tag)
        spans_from_tags(self.tags)  # raises InvalidBio on orphan I- tags


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[TaggedSentence, ...]
    language: str = "und"
    labeled: bool = True

    def __init__(
        self,
        sentences: Iterable[TaggedSentence],
        language: str = "und",
        labeled: bool = True,
    ):
        sents = tuple(sentences)
        for s in sents:
            if s.language != language:
                raise ValueError(
                    f"sentence language {s.language!r} != corpus language {language!r}"
                )
        object.__setattr__(self, "sentences", sents)
        object.__setattr__(self, "language", language)
        object.__setattr__(self, "labeled", labeled)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def spans_from_tags(tags: Sequence[str]) -> list[EntitySpan]:
    """Compile a BIO-2 tag sequence into disjoint entity spans, sorted by start.

    Raises InvalidBio when an I- tag does not continue an open entity of the
    same type.
    """
    spans: list[EntitySpan] = []
    start = None
    etype = None
    for i, tag in enumerate(tags):
        if tag == "O":
            if start is not None:
                spans.append(EntitySpan(start, i, etype))
                start = etype = None
        elif tag.startswith("B-"):
            if start is not None:
                spans.append(EntitySpan(start, i, etype))
            start, etype = i, tag[2:]
        elif tag.startswith("I-"):
            if start is None or tag[2:] != etype:
                raise InvalidBio(f"position {i}: {tag!r} does not continue an open entity")
        else:
            raise InvalidBio(f"position {i}: unrecognized tag {tag!r}")
    if start is not None:
        spans.append(EntitySpan(start, len(tags), etype))
    return spans


def tags_from_spans(spans: Iterable[EntitySpan], length: int) -> tuple[str, ...]:
    """Render disjoint spans as a BIO-2 tag sequence of the given length."""
    tags = ["O"] * length
    claimed = [False] * length
    for span in spans:
        if span.end > length:
            raise SpanOutOfRange(f"span [{span.start}, {span.end}) exceeds length {length}")
        if any(claimed[i] for i in range(span.start, span.end)):
            raise OverlappingSpans(f"span [{span.start}, {span.end}) overlaps another span")
        for i in range(span.start, span.end):
            claimed[i] = True
        tags[span.start] = f"B-{span.etype}"
        for i in range(span.start + 1, span.end):
            tags[i] = f"I-{span.etype}"
    return tuple(tags)


def repair_bio2(tags: Sequence[str]) -> tuple[str, ...]:
    """Rewrite orphan I- tags as B- so the sequence becomes valid BIO-2."""
    out: list[str] = []
    prev = "O"
    for tag in tags:
        if tag.startswith("I-"):
            cont = prev.startswith(("B-", "I-")) and prev[2:] == tag[2:]
            out.append(tag if cont else "B-" + tag[2:])
        else:
            out.append(tag)
        prev = out[-1]
    return tuple(out)


@dataclass
class ParseDetails:
    corpus: Corpus
    repaired: list[int] = field(default_factory=list)  # sentence indices fixed in repair mode


def parse_conll(
    text: str,
    scheme: TagScheme,
    mode: str = "strict",
    language: str = "und",
) -> Corpus:
    """Parse CoNLL column text (``token<TAB or space>tag``, blank-line separated).

    ``mode="repair"`` rewrites orphan I- tags to B- instead of failing.
    """
    return parse_conll_details(text, scheme, mode=mode, language=language).corpus


def parse_conll_details(
    text: str,
    scheme: TagScheme,
    mode: str = "strict",
    language: str = "und",
) -> ParseDetails:
    if mode not in ("strict", "repair"):
        raise ValueError(f"mode must be 'strict' or 'repair', got {mode!r}")
    sentences: list[TaggedSentence] = []
    repaired: list[int] = []
    tokens: list[str] = []
    tags: list[str] = []
    ws = _WHITESPACE_RE.search

    def flush(lineno: int):
        nonlocal tokens, tags
        if not tokens:
            return
        fixed = tags
        prev = "O"
        for j, tag in enumerate(tags):
            if tag[0] == "I":
                if not (prev != "O" and prev[2:] == tag[2:]):
                    if mode == "strict":
                        raise OrphanInsideTag(lineno - len(tags) + j, tag)
                    if fixed is tags:
                        fixed = list(tags)
                    fixed[j] = "B-" + tag[2:]
            prev = fixed[j]
        if fixed is not tags:
            repaired.append(len(sentences))
        sentences.append(TaggedSentence(tokens, fixed, language))
        tokens, tags = [], []

    lines = text.split("\n")
    for lineno, line in enumerate(lines, start=1):
        if not line or line.isspace():
            flush(lineno)
            continue
        if "\t" in line:
            fields = line.split("\t")
            if len(fields) != 2:
                raise MalformedLine(lineno, line)
            token, tag = fields[0], fields[1].strip()
        else:
            fields = line.split()
            if len(fields) != 2:
                raise MalformedLine(lineno, line)
            token, tag = fields
        if not token:
            raise EmptyToken(lineno)
        if ws(token):
            raise MalformedLine(lineno, line)
        if tag not in scheme._tag_set:
            raise UnknownTag(lineno, tag)
        tokens.append(token)
        tags.append(tag)
    flush(len(lines) + 1)
    return ParseDetails(Corpus(sentences, language=language), repaired)


def parse_raw(text: str, language: str = "und") -> Corpus:
    """Read one space-tokenized sentence per line into an all-O unlabeled corpus."""
    sentences = []
    for line in text.split("\n"):
        toks = line.split()
        if toks:
            sentences.append(TaggedSentence(toks, ["O"] * len(toks), language))
    return Corpus(sentences, language=language, labeled=False)


def write_conll(corpus: Corpus, sep: str = "\t") -> str:
    """Serialize a corpus to CoNLL column text; inverse of strict parse_conll."""
    blocks = []
    for sent in corpus:
        lines = [f"{tok}{sep}{tag}" for tok, tag in zip(sent.tokens, sent.tags)]
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def write_raw(corpus: Corpus) -> str:
    return "".join(" ".join(s.tokens) + "\n" for s in corpus)
