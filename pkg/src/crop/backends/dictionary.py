"""Word-map translator for deterministic desk-scale runs and tests.

Each language pair carries a plain word lexicon. With ``reorder="reverse_groups"``
the underlying plain-token sequence is reversed while every slot-marker pair
stays wrapped around its (reversed) span, simulating translation-induced word
order change without breaking the bracketing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..labeled_seq import BoundarySymbolTable
from .base import TokenBatch, UnknownLanguagePair

Lexicon = Mapping[str, str]


def load_lexicon(text: str) -> dict[str, str]:
    """Parse ``src_word<TAB>tgt_word`` lines; blank lines are skipped."""
    lex: dict[str, str] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2 or not fields[0] or not fields[1]:
            raise ValueError(f"line {lineno}: expected 'src<TAB>tgt', got {line!r}")
        lex[fields[0]] = fields[1]
    return lex


def invert_lexicon(lex: Lexicon) -> dict[str, str]:
    inv: dict[str, str] = {}
    for k, v in lex.items():
        if v in inv:
            raise ValueError(f"lexicon is not invertible: {inv[v]!r} and {k!r} both map to {v!r}")
        inv[v] = k
    return inv


@dataclass
class DictionaryTranslator:
    """TranslatorBackend backed by per-pair word maps."""

    lexicons: dict[tuple[str, str], dict[str, str]] = field(default_factory=dict)
    reorder: str = "none"  # none | reverse_groups
    unknown: str = "copy"  # copy | drop
    table: BoundarySymbolTable = field(default_factory=BoundarySymbolTable)

    def __post_init__(self):
        if self.reorder not in ("none", "reverse_groups"):
            raise ValueError(f"reorder must be 'none' or 'reverse_groups', got {self.reorder!r}")
        if self.unknown not in ("copy", "drop"):
            raise ValueError(f"unknown must be 'copy' or 'drop', got {self.unknown!r}")

    def add_pair(self, src: str, tgt: str, lexicon: Lexicon, bidirectional: bool = False) -> None:
        self.lexicons[(src, tgt)] = dict(lexicon)
        if bidirectional:
            self.lexicons[(tgt, src)] = invert_lexicon(lexicon)

    def translate(self, batch: TokenBatch, src_lang: str, tgt_lang: str) -> list[list[str]]:
        try:
            lex = self.lexicons[(src_lang, tgt_lang)]
        except KeyError:
            raise UnknownLanguagePair(src_lang, tgt_lang) from None
        return [self._translate_one(tokens, lex) for tokens in batch]

    def _translate_one(self, tokens: Sequence[str], lex: Lexicon) -> list[str]:
        units = self._units(tokens)
        if self.reorder == "reverse_groups":
            units = [self._regroup(u) if self._is_group(u) else u for u in reversed(units)]
        out: list[str] = []
        for unit in units:
            for tok in unit:
                if self.table.is_symbol(tok):
                    out.append(tok)
                elif tok in lex:
                    out.append(lex[tok])
                elif self.unknown == "copy":
                    out.append(tok)
                # drop: skip the token
        return out

    def _units(self, tokens: Sequence[str]) -> list[list[str]]:
        """Split into atomic units: marker-bracketed groups and single tokens.

        An unpaired marker becomes a single-token unit so malformed input
        passes through without crashing (downstream decode classifies it).
        """
        units: list[list[str]] = []
        i = 0
        n = len(tokens)
        while i < n:
            tok = tokens[i]
            if self.table.is_symbol(tok):
                try:
                    j = tokens.index(tok, i + 1)
                except ValueError:
                    units.append([tok])
                    i += 1
                    continue
                units.append(list(tokens[i : j + 1]))
                i = j + 1
            else:
                units.append([tok])
                i += 1
        return units

    def _is_group(self, unit: list[str]) -> bool:
        return len(unit) >= 2 and self.table.is_symbol(unit[0]) and unit[-1] == unit[0]

    @staticmethod
    def _regroup(unit: list[str]) -> list[str]:
        # Keep the marker pair in place, reverse the bracketed content.
        return [unit[0], *unit[-2:0:-1], unit[-1]]
