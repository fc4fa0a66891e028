"""Filters and refinements applied to pseudo-labeled corpora before training.

All filters are per-sentence predicates, hence idempotent and mutually
commutative on the kept set.
"""

from __future__ import annotations

import threading
import unicodedata
from collections import Counter
from typing import Callable, Mapping, Sequence

from .corpus_io import Corpus, TaggedSentence, spans_from_tags, tags_from_spans
from .backends.base import TaggerBackend

# verifier(tokens, expected_language) -> keep?
LanguageVerifier = Callable[[Sequence[str], str], bool]

DEFAULT_MAX_WORDS = 128

# Scripts resolved from the first word of unicodedata character names;
# enough to separate Latin/Cyrillic/Greek/CJK and the other major scripts.
_NAME_TO_SCRIPT = {
    "LATIN": "Latin",
    "CYRILLIC": "Cyrillic",
    "GREEK": "Greek",
    "CJK": "Han",
    "HIRAGANA": "Japanese",
    "KATAKANA": "Japanese",
    "HANGUL": "Hangul",
    "ARABIC": "Arabic",
    "HEBREW": "Hebrew",
    "DEVANAGARI": "Devanagari",
    "THAI": "Thai",
    "BENGALI": "Bengali",
    "TAMIL": "Tamil",
    "TELUGU": "Telugu",
    "MALAYALAM": "Malayalam",
    "GEORGIAN": "Georgian",
    "ARMENIAN": "Armenian",
    "MYANMAR": "Myanmar",
}

DEFAULT_LANGUAGE_SCRIPTS = {
    "en": "Latin", "de": "Latin", "es": "Latin", "fr": "Latin", "nl": "Latin",
    "no": "Latin", "it": "Latin", "pt": "Latin", "sv": "Latin", "da": "Latin",
    "ru": "Cyrillic", "bg": "Cyrillic", "uk": "Cyrillic", "sr": "Cyrillic",
    "el": "Greek",
    "zh": "Han",
    "ja": "Japanese",
    "ko": "Hangul",
    "ar": "Arabic", "fa": "Arabic", "ur": "Arabic",
    "he": "Hebrew",
    "hi": "Devanagari", "mr": "Devanagari",
    "th": "Thai",
    "bn": "Bengali", "ta": "Tamil", "te": "Telugu", "ml": "Malayalam",
    "ka": "Georgian", "hy": "Armenian", "my": "Myanmar",
}


def char_script(ch: str) -> str | None:
    if not ch.isalpha():
        return None
    try:
        head = unicodedata.name(ch).split()[0]
    except ValueError:
        return None
    return _NAME_TO_SCRIPT.get(head, head.capitalize())


def dominant_script(tokens: Sequence[str]) -> str | None:
    counts = Counter(
        s for tok in tokens for s in (char_script(ch) for ch in tok) if s is not None
    )
    if not counts:
        return None
    return counts.most_common(1)[0][0]


class ScriptVerifier:
    """Accepts a sentence when its majority script matches the expected language.

    Languages without a registered script are always accepted; sentences with
    no alphabetic characters are accepted too.
    """

    def __init__(self, language_scripts: Mapping[str, str] | None = None):
        self.language_scripts = dict(DEFAULT_LANGUAGE_SCRIPTS)
        if language_scripts:
            self.language_scripts.update(language_scripts)

    def __call__(self, tokens: Sequence[str], expected_lang: str) -> bool:
        want = self.language_scripts.get(expected_lang)
        if want is None:
            return True
        got = dominant_script(tokens)
        return got is None or got == want


class ExternalVerifier:
    """Language verifier backed by a line-oriented child process.

    One query per line on the child's stdin: ``expected_lang<TAB>space-joined
    tokens``. The child answers one line per query: ``yes``/``no`` (``1``/``0``
    and ``true``/``false`` are accepted too). The process stays alive across
    queries and calls are serialized, so one verifier may be shared by
    pipeline workers.
    """

    def __init__(self, command: Sequence[str], timeout: float = 30.0):
        from .backends.external import StdioTransport

        self._transport = StdioTransport(command, timeout)
        self._lock = threading.Lock()

    def __call__(self, tokens: Sequence[str], expected_lang: str) -> bool:
        query = f"{expected_lang}\t{' '.join(tokens)}"
        with self._lock:
            [answer] = self._transport.roundtrip([query])
        answer = answer.strip().lower()
        if answer in ("yes", "1", "true"):
            return True
        if answer in ("no", "0", "false"):
            return False
        raise ValueError(f"language verifier answered {answer!r}, expected yes/no")

    def close(self):
        self._transport.close()


def filter_length(corpus: Corpus, max_words: int = DEFAULT_MAX_WORDS) -> Corpus:
    """Drop sentences with more than ``max_words`` tokens."""
    return Corpus(
        [s for s in corpus if len(s) <= max_words], corpus.language, corpus.labeled
    )


def filter_all_o(corpus: Corpus) -> Corpus:
    """Drop sentences carrying no entity at all."""
    return Corpus([s for s in corpus if not s.is_all_o], corpus.language, corpus.labeled)


def filter_language(
    corpus: Corpus,
    verifier: LanguageVerifier,
    expected_lang: str | None = None,
) -> Corpus:
    """Keep sentences the verifier accepts for the corpus language."""
    lang = expected_lang if expected_lang is not None else corpus.language
    return Corpus(
        [s for s in corpus if verifier(s.tokens, lang)], corpus.language, corpus.labeled
    )


def relabel(
    discarded: Corpus,
    tagger_all: TaggerBackend,
    max_words: int = DEFAULT_MAX_WORDS,
    verifier: LanguageVerifier | None = None,
) -> Corpus:
    """Second chance for discarded raw sentences: tag them with the
    self-trained multilingual model and re-admit whatever passes the filters
    again (length, language, and not all-O)."""
    if len(discarded) == 0:
        return Corpus([], discarded.language)
    tag_batches = tagger_all.tag([s.tokens for s in discarded])
    relabeled = Corpus(
        [
            TaggedSentence(s.tokens, tags, discarded.language)
            for s, tags in zip(discarded, tag_batches)
        ],
        discarded.language,
    )
    relabeled = filter_length(relabeled, max_words)
    if verifier is not None:
        relabeled = filter_language(relabeled, verifier)
    return filter_all_o(relabeled)


def combine_labels(
    tags_src_model: Sequence[str],
    tags_all_model: Sequence[str],
    mode: str = "prefer-multi",
) -> tuple[str, ...]:
    """Merge two predictions for the same sentence at the entity level.

    Entities both models agree on are kept. An entity only one model found
    (the other predicting O throughout its span) is adopted when it does not
    overlap anything already kept. Genuinely conflicting spans go to the
    multilingual model (``prefer-multi``, default), to the source model
    (``prefer-src``), or are dropped (``agree``).
    """
    if len(tags_src_model) != len(tags_all_model):
        raise ValueError(
            f"length mismatch: {len(tags_src_model)} vs {len(tags_all_model)}"
        )
    if mode not in ("agree", "prefer-multi", "prefer-src"):
        raise ValueError(f"unknown combine mode {mode!r}")
    src_spans = spans_from_tags(tags_src_model)
    all_spans = spans_from_tags(tags_all_model)
    if mode == "agree":
        kept = [s for s in all_spans if s in src_spans]
    else:
        preferred, other = (
            (all_spans, src_spans) if mode == "prefer-multi" else (src_spans, all_spans)
        )
        kept = list(preferred)
        kept += [s for s in other if not any(s.overlaps(k) for k in preferred)]
    kept.sort(key=lambda s: s.start)
    return tags_from_spans(kept, len(tags_src_model))
