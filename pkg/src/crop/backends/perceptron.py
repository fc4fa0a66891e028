"""Averaged perceptron sequence tagger with greedy constrained BIO-2 decoding.

The built-in trainable tagger. Features are sparse string keys over a small
window (word identity at -2..+2, prefixes/suffixes up to length 3, word
shape, previous tag); decoding is greedy left to right and never emits an
I- tag that does not continue an entity of the same type, so every output
is valid BIO-2 by construction.
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from typing import Iterable, Sequence

from ..corpus_io import Corpus, TagScheme
from .base import EmptyTrainingSet, SchemeMismatch, TokenBatch


def word_shape(word: str) -> str:
    """Collapse characters to X/x/d/other classes, squeezing repeats."""
    shape = []
    for ch in word:
        if ch.isdigit():
            c = "d"
        elif ch.isalpha():
            c = "X" if ch.isupper() else "x"
        else:
            c = ch
        if not shape or shape[-1] != c:
            shape.append(c)
    return "".join(shape)


def _features(tokens: Sequence[str], i: int, prev_tag: str) -> list[str]:
    w = tokens[i]
    n = len(tokens)
    feats = [
        "bias",
        f"w0={w}",
        f"w-1={tokens[i - 1] if i >= 1 else '<s>'}",
        f"w-2={tokens[i - 2] if i >= 2 else '<s>'}",
        f"w+1={tokens[i + 1] if i + 1 < n else '</s>'}",
        f"w+2={tokens[i + 2] if i + 2 < n else '</s>'}",
        f"shape={word_shape(w)}",
        f"prev={prev_tag}",
    ]
    for k in (1, 2, 3):
        if len(w) >= k:
            feats.append(f"pre{k}={w[:k]}")
            feats.append(f"suf{k}={w[-k:]}")
    return feats


class PerceptronTagger:
    """A trained averaged-perceptron model; immutable after training."""

    def __init__(self, scheme: TagScheme, weights: dict[str, dict[str, float]]):
        self.scheme = scheme
        self.weights = weights
        self._tags = scheme.tags()

    # -- decoding ----------------------------------------------------------

    def _allowed(self, prev_tag: str) -> tuple[str, ...]:
        if prev_tag != "O" and prev_tag[0] in "BI":
            etype = prev_tag[2:]
            return tuple(t for t in self._tags if not t.startswith("I-") or t[2:] == etype)
        return tuple(t for t in self._tags if not t.startswith("I-"))

    def _score(self, feats: Iterable[str], tag: str) -> float:
        total = 0.0
        for f in feats:
            col = self.weights.get(f)
            if col:
                total += col.get(tag, 0.0)
        return total

    def tag_sentence(self, tokens: Sequence[str]) -> list[str]:
        tags: list[str] = []
        prev = "O"
        for i in range(len(tokens)):
            feats = _features(tokens, i, prev)
            best, best_score = None, 0.0
            for t in self._allowed(prev):
                s = self._score(feats, t)
                if best is None or s > best_score:
                    best, best_score = t, s
            tags.append(best)
            prev = best
        return tags

    def tag(self, batch: TokenBatch) -> list[list[str]]:
        return [self.tag_sentence(tokens) for tokens in batch]

    # -- persistence -------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(
            {"entity_types": list(self.scheme.entity_types), "weights": self.weights},
            sort_keys=True,
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, text: str) -> "PerceptronTagger":
        obj = json.loads(text)
        return cls(TagScheme(obj["entity_types"]), obj["weights"])

    # -- training ----------------------------------------------------------

    @classmethod
    def train(
        cls,
        corpora: Sequence[tuple[Corpus, float]],
        scheme: TagScheme,
        epochs: int = 10,
        seed: int = 0,
    ) -> "PerceptronTagger":
        """Train on weighted corpora; weight is the per-sentence multiplicity.

        Deterministic for fixed inputs, epochs, and seed.
        """
        examples: list[tuple[tuple[str, ...], tuple[str, ...]]] = []
        for corpus, weight in corpora:
            mult = int(round(weight))
            if mult < 0:
                raise ValueError(f"negative corpus weight {weight}")
            for sent in corpus:
                for tag in sent.tags:
                    if not scheme.is_valid_tag(tag):
                        raise SchemeMismatch(f"tag {tag!r} not in scheme {scheme.entity_types}")
                for _ in range(mult):
                    examples.append((sent.tokens, sent.tags))
        if not examples:
            raise EmptyTrainingSet("no sentences to train on")

        weights: dict[str, dict[str, float]] = defaultdict(dict)
        totals: dict[str, dict[str, float]] = defaultdict(dict)
        stamps: dict[str, dict[str, int]] = defaultdict(dict)
        model = cls(scheme, weights)
        step = 0

        def bump(feat: str, tag: str, delta: float):
            col = weights[feat]
            tot = totals[feat]
            stp = stamps[feat]
            tot[tag] = tot.get(tag, 0.0) + (step - stp.get(tag, 0)) * col.get(tag, 0.0)
            stp[tag] = step
            col[tag] = col.get(tag, 0.0) + delta

        rng = random.Random(seed)
        order = list(range(len(examples)))
        for _ in range(epochs):
            rng.shuffle(order)
            for idx in order:
                tokens, gold = examples[idx]
                prev = "O"
                for i in range(len(tokens)):
                    feats = _features(tokens, i, prev)
                    pred, pred_score = None, 0.0
                    for t in model._allowed(prev):
                        s = model._score(feats, t)
                        if pred is None or s > pred_score:
                            pred, pred_score = t, s
                    step += 1
                    if pred != gold[i]:
                        for f in feats:
                            bump(f, gold[i], 1.0)
                            bump(f, pred, -1.0)
                    prev = pred

        averaged: dict[str, dict[str, float]] = {}
        for feat, col in weights.items():
            out: dict[str, float] = {}
            for tag, w in col.items():
                total = totals[feat].get(tag, 0.0) + (step - stamps[feat].get(tag, 0)) * w
                if total != 0.0:
                    out[tag] = total / step
            if out:
                averaged[feat] = out
        return cls(scheme, averaged)


class PerceptronTrainer:
    """TaggerTrainer adapter around ``PerceptronTagger.train`` for one scheme."""

    def __init__(self, scheme: TagScheme):
        self.scheme = scheme

    def train(
        self, corpora: Sequence[tuple[Corpus, float]], *, epochs: int = 10, seed: int = 0
    ) -> PerceptronTagger:
        return PerceptronTagger.train(corpora, self.scheme, epochs=epochs, seed=seed)
