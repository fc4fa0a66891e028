"""Self-training loop: train on gold source data, project labels onto raw
target corpora, then train one multilingual model on the weighted union.

Each round also runs the refinement pass: a provisional multilingual model
re-labels the discarded raw sentences, projected labels are merged with that
model's own predictions entity by entity, and the final model of the round is
retrained on the refined corpora.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping

from .backends.base import EmptyTrainingSet, TaggerBackend, TaggerTrainer, TranslatorBackend
from .corpus_io import Corpus, TaggedSentence
from .evaluation import EvalReport, evaluate
from .postprocess import combine_labels, relabel
from .projection import ProjectionConfig, PseudoLabeledCorpus, run_projection


@dataclass
class SelfTrainConfig:
    projection: ProjectionConfig
    rounds: int = 1
    src_weight: float = 1.0
    tgt_weight: float = 1.0
    epochs: int = 10
    seed: int = 0
    keep_cap: int | None = None  # max pseudo sentences per language
    relabel_discards: bool = True
    combine: str = "prefer-multi"  # agree | prefer-multi | prefer-src | off
    retag_with: str = "all"  # which model tags round n+1: "all" or frozen "source"

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.retag_with not in ("all", "source"):
            raise ValueError(f"retag_with must be 'all' or 'source', got {self.retag_with!r}")


@dataclass
class LanguageRoundStats:
    raw: int
    projected: int  # survived the round trip and matching
    kept: int       # after filters and cap
    relabeled: int = 0
    final: int = 0  # training corpus size after refinement
    dev_f1: float | None = None
    discards: dict[str, int] = field(default_factory=dict)


@dataclass
class RoundReport:
    number: int
    languages: dict[str, LanguageRoundStats] = field(default_factory=dict)

    def kv(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for lang in sorted(self.languages):
            st = self.languages[lang]
            p = f"round.{self.number}.lang.{lang}."
            out[p + "raw"] = st.raw
            out[p + "projected"] = st.projected
            out[p + "kept"] = st.kept
            out[p + "relabeled"] = st.relabeled
            out[p + "final"] = st.final
            if st.dev_f1 is not None:
                out[p + "dev_f1"] = st.dev_f1
            for kind, n in sorted(st.discards.items()):
                if n:
                    out[p + f"discard.{kind}"] = n
        return out


@dataclass
class SelfTrainResult:
    model: TaggerBackend
    rounds: list[RoundReport]
    pseudo: dict[str, Corpus]  # final refined corpora per language
    warnings: list[str] = field(default_factory=list)

    def kv(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for r in self.rounds:
            out.update(r.kv())
        return out


def train_source(
    trainer: TaggerTrainer, src_corpus: Corpus, epochs: int = 10, seed: int = 0
) -> TaggerBackend:
    """Train the source-language model on gold data only."""
    if len(src_corpus) == 0:
        raise EmptyTrainingSet("source corpus is empty")
    return trainer.train([(src_corpus, 1.0)], epochs=epochs, seed=seed)


def _cap(corpus: Corpus, cap: int | None, seed: str) -> Corpus:
    if cap is None or len(corpus) <= cap:
        return corpus
    rng = random.Random(seed)
    idx = sorted(rng.sample(range(len(corpus)), cap))
    return Corpus([corpus.sentences[i] for i in idx], corpus.language, corpus.labeled)


def self_train(
    trainer: TaggerTrainer,
    translator: TranslatorBackend,
    src_corpus: Corpus,
    raw_corpora: Mapping[str, Corpus],
    cfg: SelfTrainConfig,
    dev_corpora: Mapping[str, Corpus] | None = None,
) -> SelfTrainResult:
    """Run the full loop and return the final multilingual model plus a report.

    With empty raw corpora the result model is the source model itself. Fully
    deterministic given deterministic backends and fixed seeds.
    """
    source_model = train_source(trainer, src_corpus, epochs=cfg.epochs, seed=cfg.seed)
    model = source_model
    reports: list[RoundReport] = []
    warnings: list[str] = []
    pseudo_final: dict[str, Corpus] = {}

    for rnd in range(1, cfg.rounds + 1):
        report = RoundReport(rnd)
        tagging_model = source_model if cfg.retag_with == "source" else model
        projections = run_projection(raw_corpora, translator, tagging_model, cfg.projection)
        kept: dict[str, Corpus] = {}
        for lang, proj in projections.items():
            capped = _cap(proj.kept_corpus(), cfg.keep_cap, f"{cfg.seed}:cap:{lang}:{rnd}")
            kept[lang] = capped
            stats = proj.stats()
            report.languages[lang] = LanguageRoundStats(
                raw=len(raw_corpora[lang]),
                projected=sum(1 for r in proj.records if r.projected is not None),
                kept=len(capped),
                discards={k.split(".", 1)[1]: v for k, v in stats.items() if k.startswith("discard.")},
            )

        if sum(len(c) for c in kept.values()) == 0:
            warnings.append(f"round {rnd}: projection produced no pseudo sentences; model unchanged")
            reports.append(report)
            _eval_dev(report, model, dev_corpora)
            continue

        weighted = [(src_corpus, cfg.src_weight)] + [
            (c, cfg.tgt_weight) for _, c in sorted(kept.items()) if len(c) > 0
        ]
        provisional = trainer.train(weighted, epochs=cfg.epochs, seed=_seed(cfg.seed, rnd, 0))

        refined = _refine(provisional, projections, kept, cfg, report)
        if refined != kept:
            weighted = [(src_corpus, cfg.src_weight)] + [
                (c, cfg.tgt_weight) for _, c in sorted(refined.items()) if len(c) > 0
            ]
            model = trainer.train(weighted, epochs=cfg.epochs, seed=_seed(cfg.seed, rnd, 1))
        else:
            model = provisional
        pseudo_final = refined
        for lang, corpus in refined.items():
            report.languages[lang].final = len(corpus)
        _eval_dev(report, model, dev_corpora)
        reports.append(report)

    return SelfTrainResult(model, reports, pseudo_final, warnings)


def _seed(base: int, rnd: int, stage: int) -> int:
    return base + 1000 * rnd + stage


def _refine(
    provisional: TaggerBackend,
    projections: Mapping[str, PseudoLabeledCorpus],
    kept: Mapping[str, Corpus],
    cfg: SelfTrainConfig,
    report: RoundReport,
) -> dict[str, Corpus]:
    """Re-admit discards via the provisional model and merge its labels with
    the projected ones."""
    refined: dict[str, Corpus] = {}
    for lang, corpus in kept.items():
        sentences = list(corpus.sentences)
        if cfg.combine != "off" and sentences:
            own = provisional.tag([s.tokens for s in sentences])
            sentences = [
                TaggedSentence(s.tokens, combine_labels(s.tags, tags, cfg.combine), lang)
                for s, tags in zip(sentences, own)
            ]
            # agree mode can strip every entity from a sentence
            sentences = [s for s in sentences if not s.is_all_o]
        if cfg.relabel_discards:
            readmitted = relabel(
                projections[lang].discarded_raw(),
                provisional,
                max_words=cfg.projection.max_words,
                verifier=cfg.projection.verifier,
            )
            readmitted = _cap(
                readmitted,
                None if cfg.keep_cap is None else max(cfg.keep_cap - len(sentences), 0),
                f"{cfg.seed}:relabel:{lang}",
            )
            report.languages[lang].relabeled = len(readmitted)
            sentences += list(readmitted.sentences)
        refined[lang] = Corpus(sentences, lang)
    return refined


def _eval_dev(
    report: RoundReport, model: TaggerBackend, dev_corpora: Mapping[str, Corpus] | None
) -> None:
    if not dev_corpora:
        return
    for lang, dev in dev_corpora.items():
        tags = model.tag([s.tokens for s in dev])
        pred = Corpus(
            [TaggedSentence(s.tokens, t, lang) for s, t in zip(dev, tags)], lang
        )
        rep: EvalReport = evaluate(pred, dev)
        if lang in report.languages:
            report.languages[lang].dev_f1 = rep.f1
        else:
            report.languages.setdefault(
                lang,
                LanguageRoundStats(raw=0, projected=0, kept=0, dev_f1=rep.f1),
            )
