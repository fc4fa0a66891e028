"""Translator and tagger backend contracts shared by built-in and external models."""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

from ..corpus_io import Corpus

TokenBatch = Sequence[Sequence[str]]


class BackendError(Exception):
    pass


class BackendUnavailable(BackendError):
    pass


class BackendTimeout(BackendUnavailable):
    pass


class ProtocolError(BackendError):
    pass


class BackendContractViolation(BackendError):
    pass


class UnknownLanguagePair(BackendError):
    def __init__(self, src: str, tgt: str):
        super().__init__(f"no lexicon for language pair {src}->{tgt}")
        self.src = src
        self.tgt = tgt


class SchemeMismatch(BackendError):
    pass


class EmptyTrainingSet(BackendError):
    pass


@runtime_checkable
class TranslatorBackend(Protocol):
    """Batch token-sequence translator.

    Implementations must return one output sequence per input sequence and
    treat ``__SLOT{i}__`` boundary symbols as opaque tokens, preserving each
    symbol's occurrence count.
    """

    def translate(self, batch: TokenBatch, src_lang: str, tgt_lang: str) -> list[list[str]]: ...


@runtime_checkable
class TaggerBackend(Protocol):
    """Batch sequence tagger emitting one valid BIO-2 tag per token."""

    def tag(self, batch: TokenBatch) -> list[list[str]]: ...


@runtime_checkable
class TaggerTrainer(Protocol):
    """Builds a TaggerBackend from weighted corpora.

    The weight of a corpus is the per-sentence sampling multiplicity; weight 0
    excludes it.
    """

    def train(
        self, corpora: Sequence[tuple[Corpus, float]], *, epochs: int = 10, seed: int = 0
    ) -> TaggerBackend: ...
