"""Entity-level precision/recall/F1 plus translation-bracketing quality metrics.

An entity counts as correct only when its token span and type both match the
gold annotation exactly. F1 with neither gold nor predicted entities is
undefined and excluded from macro averages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .corpus_io import Corpus
from .labeled_seq import BoundarySymbolTable, DecodeError, LabeledSequence, slot_contents
from .projection import PseudoLabeledCorpus

# oracle(source_span_tokens, target_span_tokens) -> equivalent?
EquivalenceOracle = Callable[[Sequence[str], Sequence[str]], bool]


class CorpusMismatch(Exception):
    pass


@dataclass
class TypeCounts:
    gold: int = 0
    predicted: int = 0
    correct: int = 0

    def add(self, other: "TypeCounts") -> None:
        self.gold += other.gold
        self.predicted += other.predicted
        self.correct += other.correct

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float | None:
        """Harmonic mean; None when the score is undefined (nothing gold, nothing predicted)."""
        if self.gold == 0 and self.predicted == 0:
            return None
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class EvalReport:
    overall: TypeCounts = field(default_factory=TypeCounts)
    per_type: dict[str, TypeCounts] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return self.overall.precision

    @property
    def recall(self) -> float:
        return self.overall.recall

    @property
    def f1(self) -> float | None:
        return self.overall.f1

    def kv(self, prefix: str = "") -> dict[str, object]:
        out: dict[str, object] = {
            f"{prefix}precision": self.overall.precision,
            f"{prefix}recall": self.overall.recall,
            f"{prefix}f1": "NA" if self.overall.f1 is None else self.overall.f1,
            f"{prefix}gold": self.overall.gold,
            f"{prefix}predicted": self.overall.predicted,
            f"{prefix}correct": self.overall.correct,
        }
        for etype in sorted(self.per_type):
            c = self.per_type[etype]
            out[f"{prefix}type.{etype}.precision"] = c.precision
            out[f"{prefix}type.{etype}.recall"] = c.recall
            out[f"{prefix}type.{etype}.f1"] = "NA" if c.f1 is None else c.f1
        return out

    def table(self) -> str:
        rows = [("type", "precision", "recall", "f1", "gold", "pred", "correct")]

        def fmt(c: TypeCounts, name: str):
            f1 = "N/A" if c.f1 is None else f"{c.f1:.4f}"
            rows.append(
                (name, f"{c.precision:.4f}", f"{c.recall:.4f}", f1,
                 str(c.gold), str(c.predicted), str(c.correct))
            )

        for etype in sorted(self.per_type):
            fmt(self.per_type[etype], etype)
        fmt(self.overall, "ALL")
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join(
            "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
            for row in rows
        )


def evaluate(pred: Corpus, gold: Corpus) -> EvalReport:
    """Exact-match entity-level scores of a predicted corpus against gold."""
    if len(pred) != len(gold):
        raise CorpusMismatch(f"{len(pred)} predicted sentences vs {len(gold)} gold")
    report = EvalReport()
    for i, (p, g) in enumerate(zip(pred, gold)):
        if len(p) != len(g):
            raise CorpusMismatch(f"sentence {i}: {len(p)} tokens vs {len(g)} gold tokens")
        p_spans = set(p.spans())
        g_spans = set(g.spans())
        types = {s.etype for s in p_spans | g_spans}
        for etype in types:
            c = report.per_type.setdefault(etype, TypeCounts())
            pt = {s for s in p_spans if s.etype == etype}
            gt = {s for s in g_spans if s.etype == etype}
            hit = TypeCounts(len(gt), len(pt), len(pt & gt))
            c.add(hit)
            report.overall.add(hit)
    return report


def write_confusion(pred: Corpus, gold: Corpus) -> str:
    """CoNLL dump with two tag columns (gold then predicted) for inspection."""
    if len(pred) != len(gold):
        raise CorpusMismatch(f"{len(pred)} predicted sentences vs {len(gold)} gold")
    blocks = []
    for p, g in zip(pred, gold):
        lines = [
            f"{tok}\t{gt}\t{pt}" for tok, gt, pt in zip(g.tokens, g.tags, p.tags)
        ]
        blocks.append("\n".join(lines) + "\n\n")
    return "".join(blocks)


def average_report(reports: Mapping[str, EvalReport] | Iterable[EvalReport]) -> float:
    """Unweighted mean of per-language F1, skipping undefined scores."""
    if isinstance(reports, Mapping):
        reports = reports.values()
    scores = [r.f1 for r in reports if r.f1 is not None]
    if not scores:
        raise ValueError("no defined F1 scores to average")
    return sum(scores) / len(scores)


def micro_average(reports: Mapping[str, EvalReport] | Iterable[EvalReport]) -> EvalReport:
    """Pool raw counts across languages instead of averaging scores."""
    if isinstance(reports, Mapping):
        reports = reports.values()
    merged = EvalReport()
    n = 0
    for r in reports:
        n += 1
        merged.overall.add(r.overall)
        for etype, c in r.per_type.items():
            merged.per_type.setdefault(etype, TypeCounts()).add(c)
    if n == 0:
        raise ValueError("no reports to merge")
    return merged


def boundary_precision(
    pairs: Sequence[tuple[LabeledSequence, LabeledSequence]],
    oracle: EquivalenceOracle,
    table: BoundarySymbolTable = BoundarySymbolTable(),
) -> float:
    """Fraction of sentence pairs whose every bracketed span decodes on both
    sides and brackets oracle-equivalent content."""
    if not pairs:
        raise ValueError("boundary_precision needs at least one pair")
    good = 0
    for src, tgt in pairs:
        src_regions = slot_contents(src.tokens, src.slot_types, table)
        tgt_regions = slot_contents(tgt.tokens, tgt.slot_types, table)
        if isinstance(src_regions, DecodeError) or isinstance(tgt_regions, DecodeError):
            continue
        src_plain = [t for t in src.tokens if not table.is_symbol(t)]
        tgt_plain = [t for t in tgt.tokens if not table.is_symbol(t)]
        ok = src_regions.keys() == tgt_regions.keys()
        for slot in src_regions:
            if not ok:
                break
            s0, s1 = src_regions[slot]
            t0, t1 = tgt_regions[slot]
            ok = oracle(src_plain[s0:s1], tgt_plain[t0:t1])
        if ok:
            good += 1
    return good / len(pairs)


def lexicon_oracle(lexicon: Mapping[str, str], unknown_copy: bool = True) -> EquivalenceOracle:
    """Equivalence judge for dictionary-translated pairs: the translated source
    span and the target span must contain the same words (order-insensitive,
    so reordering translators still score clean pairs as 1.0)."""

    def judge(src_tokens: Sequence[str], tgt_tokens: Sequence[str]) -> bool:
        mapped = [
            lexicon.get(t, t if unknown_copy else None) for t in src_tokens
        ]
        mapped = [m for m in mapped if m is not None]
        return sorted(mapped) == sorted(tgt_tokens)

    return judge


def judgment_file_oracle(text: str) -> EquivalenceOracle:
    """Equivalence judge backed by ``src phrase<TAB>tgt phrase<TAB>yes|no``
    lines; unlisted pairs judge as not equivalent."""
    table: dict[tuple[str, str], bool] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3 or fields[2] not in ("yes", "no"):
            raise ValueError(f"line {lineno}: expected 'src<TAB>tgt<TAB>yes|no'")
        table[(fields[0], fields[1])] = fields[2] == "yes"

    def judge(src_tokens: Sequence[str], tgt_tokens: Sequence[str]) -> bool:
        return table.get((" ".join(src_tokens), " ".join(tgt_tokens)), False)

    return judge


@dataclass
class ProjectionQuality:
    report: EvalReport | None  # None when nothing was kept
    kept: int
    total: int

    @property
    def kept_ratio(self) -> float:
        return self.kept / self.total if self.total else 0.0

    @property
    def f1(self) -> float | None:
        return None if self.report is None else self.report.f1


def projection_quality(pseudo: PseudoLabeledCorpus, gold: Corpus) -> ProjectionQuality:
    """Score projected labels against gold on the kept sentences only."""
    if len(pseudo.records) != len(gold):
        raise CorpusMismatch(
            f"{len(pseudo.records)} projection records vs {len(gold)} gold sentences"
        )
    kept = [(r.projected, gold.sentences[r.index]) for r in pseudo.records if r.kept]
    if not kept:
        return ProjectionQuality(None, 0, len(pseudo.records))
    pred_corpus = Corpus([p for p, _ in kept], pseudo.language)
    gold_corpus = Corpus([g for _, g in kept], gold.language)
    return ProjectionQuality(
        evaluate(pred_corpus, gold_corpus), len(kept), len(pseudo.records)
    )
