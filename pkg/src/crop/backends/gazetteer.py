"""Phrase-list tagger: greedy longest match against a fixed gazetteer.

Deterministic and training-free; used as an oracle in synthetic experiments
and mirrored by the reference external adapter's trivial tagger.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from ..corpus_io import TagScheme
from .base import TokenBatch


def load_gazetteer(text: str) -> dict[tuple[str, ...], str]:
    """Parse ``entity phrase<TAB>TYPE`` lines into a phrase map."""
    entries: dict[tuple[str, ...], str] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[1]:
            raise ValueError(f"line {lineno}: expected 'phrase<TAB>TYPE', got {line!r}")
        phrase = tuple(fields[0].split())
        if not phrase:
            raise ValueError(f"line {lineno}: empty phrase")
        if phrase in entries and entries[phrase] != fields[1]:
            raise ValueError(f"line {lineno}: phrase {fields[0]!r} listed with two types")
        entries[phrase] = fields[1]
    return entries


class GazetteerTagger:
    """TaggerBackend that tags exact phrase matches, longest first."""

    def __init__(self, entries: Mapping[Sequence[str], str], scheme: TagScheme):
        self.entries = {tuple(p): t for p, t in entries.items()}
        self.scheme = scheme
        for etype in set(self.entries.values()):
            if etype not in scheme.entity_types:
                raise ValueError(f"gazetteer type {etype!r} not in scheme {scheme.entity_types}")
        self.max_len = max((len(p) for p in self.entries), default=0)

    def tag_sentence(self, tokens: Sequence[str]) -> list[str]:
        tags = ["O"] * len(tokens)
        i = 0
        n = len(tokens)
        while i < n:
            matched = 0
            for length in range(min(self.max_len, n - i), 0, -1):
                etype = self.entries.get(tuple(tokens[i : i + length]))
                if etype is not None:
                    tags[i] = f"B-{etype}"
                    for j in range(i + 1, i + length):
                        tags[j] = f"I-{etype}"
                    matched = length
                    break
            i += matched or 1
        return tags

    def tag(self, batch: TokenBatch) -> list[list[str]]:
        return [self.tag_sentence(tokens) for tokens in batch]
