"""Command-line entry point wiring the pipeline stages into reproducible runs.

Every command that writes files also writes a ``*.manifest.json`` recording the
config hash, seeds, and input digests; with built-in backends, identical
manifests reproduce outputs byte for byte. Exit codes: 0 ok, 1 usage/config
error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

from . import __version__
from .align_builder import AlignmentError, MixConfig, emit_mixed_corpus, parse_pharaoh
from .backends import (
    BackendError,
    DictionaryTranslator,
    ExternalBackend,
    GazetteerTagger,
    PerceptronTagger,
    PerceptronTrainer,
    load_gazetteer,
    load_lexicon,
)
from .corpus_io import Corpus, CorpusError, TagScheme, parse_conll, parse_raw, write_conll
from .evaluation import (
    CorpusMismatch,
    EvalReport,
    average_report,
    boundary_precision,
    evaluate,
    judgment_file_oracle,
    lexicon_oracle,
    micro_average,
    write_confusion,
)
from .labeled_seq import (
    BoundarySymbolTable,
    DecodeError,
    EncodeError,
    decode,
    encode,
    parse_labeled,
    write_labeled,
)
from .manifest import build_manifest, write_manifest
from .postprocess import ExternalVerifier, ScriptVerifier
from .projection import MatchPolicy, ProjectionConfig
from .report import kv_lines
from .selftrain import SelfTrainConfig, self_train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class ConfigError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"config field {field!r}: {message}")
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _scheme(types_arg: str) -> TagScheme:
    return TagScheme([t for t in types_arg.split(",") if t])


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(path, f"cannot read: {e}") from e


def _load_config(path: str) -> dict:
    try:
        obj = json.loads(_read(path))
    except json.JSONDecodeError as e:
        raise ConfigError(path, f"invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise ConfigError(path, "top level must be an object")
    return obj


def _require(cfg: dict, field: str):
    if field not in cfg:
        raise ConfigError(field, "missing")
    return cfg[field]


# -- backend construction ----------------------------------------------------


def _build_translator(spec, base_dir: Path, table: BoundarySymbolTable):
    spec = os.environ.get("CROP_TRANSLATOR", None) or spec
    if isinstance(spec, str):
        if spec.startswith("external:"):
            return _external(spec[len("external:"):])
        if spec.startswith("builtin:dict:"):
            spec = _load_config(str(base_dir / spec[len("builtin:dict:"):]))
        else:
            raise ConfigError("translator", f"unknown translator spec {spec!r}")
    if not isinstance(spec, dict):
        raise ConfigError("translator", "expected a spec string or object")
    translator = DictionaryTranslator(
        reorder=spec.get("reorder", "none"),
        unknown=spec.get("unknown", "copy"),
        table=table,
    )
    pairs = spec.get("pairs")
    if not isinstance(pairs, dict) or not pairs:
        raise ConfigError("translator.pairs", "expected a {'src-tgt': lexicon path} object")
    for pair, lex_path in pairs.items():
        src, sep, tgt = pair.partition("-")
        if not sep:
            raise ConfigError("translator.pairs", f"bad language pair {pair!r}")
        lexicon = load_lexicon(_read(str(base_dir / lex_path)))
        translator.add_pair(src, tgt, lexicon, bidirectional=spec.get("bidirectional", False))
    return translator


def _build_tagger(spec, base_dir: Path, scheme: TagScheme):
    spec = os.environ.get("CROP_TAGGER", None) or spec
    if not isinstance(spec, str):
        raise ConfigError("tagger", "expected a spec string")
    if spec.startswith("external:"):
        return _external(spec[len("external:"):])
    if spec.startswith("builtin:gazetteer:"):
        path = base_dir / spec[len("builtin:gazetteer:"):]
        return GazetteerTagger(load_gazetteer(_read(str(path))), scheme)
    if spec.startswith("builtin:perceptron:"):
        path = base_dir / spec[len("builtin:perceptron:"):]
        return PerceptronTagger.from_json(_read(str(path)))
    raise ConfigError("tagger", f"unknown tagger spec {spec!r}")


def _external(target: str) -> ExternalBackend:
    if target.startswith(("http://", "https://")):
        return ExternalBackend.connect(target)
    return ExternalBackend.spawn(shlex.split(target))


def _verifier_from_spec(spec: str, cfg: dict):
    if spec == "script":
        return ScriptVerifier(cfg.get("language_scripts"))
    if spec == "off":
        return None
    if spec.startswith("external:"):
        return ExternalVerifier(shlex.split(spec[len("external:"):]))
    raise ConfigError(
        "language_filter", f"expected 'script', 'off', or 'external:<cmd>', got {spec!r}"
    )


def _projection_config(cfg: dict, args=None) -> ProjectionConfig:
    table = BoundarySymbolTable(cfg.get("max_slots", 10))
    lang_filter = cfg.get("language_filter", "script")
    if args is not None and getattr(args, "lang_verifier", None):
        lang_filter = args.lang_verifier
    max_words = cfg.get("max_words", 128)
    if args is not None and getattr(args, "max_words", None) is not None:
        max_words = args.max_words
    return ProjectionConfig(
        source_lang=_require(cfg, "source_lang"),
        table=table,
        match=MatchPolicy(case_sensitive=cfg.get("case_sensitive", True)),
        max_words=max_words,
        drop_all_o=cfg.get("drop_all_o", True),
        verifier=_verifier_from_spec(lang_filter, cfg),
        batch_size=cfg.get("batch_size", 64),
        jobs=cfg.get("jobs") or os.cpu_count() or 1,
    )


# -- subcommands ---------------------------------------------------------------


def cmd_validate(args) -> int:
    scheme = _scheme(args.types)
    corpus = parse_conll(_read(args.input), scheme, mode=args.mode, language=args.language)
    entities = sum(len(s.spans()) for s in corpus)
    print(f"ok: {len(corpus)} sentences, {entities} entities, tagset size {scheme.tag_count}")
    return EXIT_OK


def cmd_encode(args) -> int:
    scheme = _scheme(args.types)
    corpus = parse_conll(_read(args.input), scheme, language=args.language)
    table = BoundarySymbolTable(args.max_slots)
    seqs = [encode(s, table) for s in corpus]
    _write_output(args.output, write_labeled(seqs), args)
    return EXIT_OK


def cmd_decode(args) -> int:
    seqs = parse_labeled(_read(args.input), language=args.language)
    table = BoundarySymbolTable(args.max_slots)
    sentences = []
    for i, seq in enumerate(seqs):
        result = decode(seq.tokens, seq.slot_types, table, args.language)
        if isinstance(result, DecodeError):
            print(f"sequence {i}: {result}", file=sys.stderr)
            return EXIT_DATA
        sentences.append(result)
    _write_output(args.output, write_conll(Corpus(sentences, args.language)), args)
    return EXIT_OK


def cmd_build_corpus(args) -> int:
    def sentences(path):
        # keep line numbering 1:1 with the alignment file, blanks included
        lines = _read(path).split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return [line.split() for line in lines]

    src_lines = sentences(args.src)
    tgt_lines = sentences(args.tgt)
    if len(src_lines) != len(tgt_lines):
        raise AlignmentError(
            f"{len(src_lines)} source lines vs {len(tgt_lines)} target lines"
        )
    alignments = parse_pharaoh(_read(args.alignments))
    cfg = MixConfig(
        alpha=args.alpha,
        k_max=args.k_max,
        seed=args.seed,
        mode=args.mode,
        max_phrase_len=args.max_phrase_len,
    )
    pairs = list(
        emit_mixed_corpus(
            list(zip(src_lines, tgt_lines)),
            alignments,
            cfg,
            src_lang=args.src_lang,
            tgt_lang=args.tgt_lang,
        )
    )
    Path(args.out_src).write_text(write_labeled([p.src for p in pairs]), encoding="utf-8")
    Path(args.out_tgt).write_text(write_labeled([p.tgt for p in pairs]), encoding="utf-8")
    _manifest(
        args,
        inputs=[args.src, args.tgt, args.alignments],
        outputs=[args.out_src, args.out_tgt],
        seeds={"mix": args.seed},
    )
    labeled = sum(1 for p in pairs if p.kind == "labeled")
    print(f"wrote {len(pairs)} pairs ({labeled} labeled, {len(pairs) - labeled} plain)")
    return EXIT_OK


def cmd_train(args) -> int:
    scheme = _scheme(args.types)
    corpus = parse_conll(_read(args.input), scheme, language=args.language)
    model = PerceptronTagger.train([(corpus, 1.0)], scheme, epochs=args.epochs, seed=args.seed)
    Path(args.output).write_text(model.to_json() + "\n", encoding="utf-8")
    _manifest(args, inputs=[args.input], outputs=[args.output], seeds={"train": args.seed})
    print(f"trained on {len(corpus)} sentences -> {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    scheme = _scheme(args.types)
    mode = "repair" if args.repair else "strict"
    if len(args.pred) != len(args.gold):
        raise CorpusMismatch(f"{len(args.pred)} --pred files vs {len(args.gold)} --gold files")
    reports: dict[str, EvalReport] = {}
    kv: dict[str, object] = {}
    for pred_path, gold_path in zip(args.pred, args.gold):
        pred = parse_conll(_read(pred_path), scheme, mode=mode)
        gold = parse_conll(_read(gold_path), scheme)
        report = evaluate(pred, gold)
        reports[pred_path] = report
        if len(args.pred) > 1:
            print(f"# {pred_path} vs {gold_path}")
        print(report.table())
        prefix = f"{pred_path}." if len(args.pred) > 1 else ""
        kv.update(report.kv(prefix))
        if args.confusion and len(args.pred) == 1:
            Path(args.confusion).write_text(write_confusion(pred, gold), encoding="utf-8")
    if len(reports) > 1:
        if args.micro:
            merged = micro_average(reports)
            print(f"micro_f1={'NA' if merged.f1 is None else repr(merged.f1)}")
            kv["micro_f1"] = "NA" if merged.f1 is None else merged.f1
        else:
            avg = average_report(reports)
            print(f"macro_f1={avg!r}")
            kv["macro_f1"] = avg
    if args.kv:
        Path(args.kv).write_text(kv_lines(kv), encoding="utf-8")
    return EXIT_OK


def cmd_project(args) -> int:
    cfg = _load_config(args.config)
    base = Path(args.config).resolve().parent
    scheme = TagScheme(_require(cfg, "types"))
    pcfg = _projection_config(cfg, args)
    if args.jobs:
        pcfg.jobs = args.jobs
    translator = _build_translator(_require(cfg, "translator"), base, pcfg.table)
    tagger = _build_tagger(_require(cfg, "tagger"), base, scheme)
    languages = _require(cfg, "languages")
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    summaries = []
    for lang in sorted(languages):
        raw = parse_raw(_read(str(base / languages[lang]["raw"])), lang)
        outputs += _stream_projection(outdir, lang, raw, translator, tagger, pcfg, summaries)
    _manifest(
        args,
        inputs=[args.config] + [str(base / spec["raw"]) for spec in languages.values()],
        outputs=outputs,
        seeds={"seed": cfg.get("seed", 0)},
        config=cfg,
        manifest_path=outdir / "manifest.json",
    )
    for line in summaries:
        print(line)
    return EXIT_OK


def _stream_projection(
    outdir: Path, lang: str, raw: Corpus, translator, tagger, pcfg, summaries: list[str]
) -> list[str]:
    """Write kept sentences and indices as records complete, so the corpus
    never has to sit in memory."""
    from .projection import DISCARD_KINDS, iter_projection

    kept_path = outdir / f"{lang}.kept.conll"
    idx_path = outdir / f"{lang}.kept_idx.txt"
    stats_path = outdir / f"{lang}.stats.txt"
    total = kept = 0
    discards = {kind: 0 for kind in DISCARD_KINDS}
    with open(kept_path, "w", encoding="utf-8") as kept_f, \
         open(idx_path, "w", encoding="utf-8") as idx_f:
        for rec in iter_projection(raw, translator, tagger, pcfg):
            total += 1
            if rec.kept:
                kept += 1
                kept_f.write(write_conll(Corpus([rec.projected], lang)))
                idx_f.write(f"{rec.index}\n")
            else:
                discards[rec.discard.kind] += 1
    stats: dict[str, object] = {
        "language": lang,
        "total": total,
        "kept": kept,
        "kept_ratio": (kept / total) if total else 0.0,
    }
    for kind in DISCARD_KINDS:
        stats[f"discard.{kind}"] = discards[kind]
    stats_path.write_text(kv_lines(stats), encoding="utf-8")
    ratio = stats["kept_ratio"]
    summaries.append(f"{lang}: kept {kept}/{total} ({ratio:.1%})")
    return [str(kept_path), str(idx_path), str(stats_path)]


def cmd_self_train(args) -> int:
    cfg = _load_config(args.config)
    base = Path(args.config).resolve().parent
    scheme = TagScheme(_require(cfg, "types"))
    pcfg = _projection_config(cfg, args)
    if args.jobs:
        pcfg.jobs = args.jobs
    translator = _build_translator(_require(cfg, "translator"), base, pcfg.table)
    src_corpus = parse_conll(
        _read(str(base / _require(cfg, "source_train"))), scheme, language=pcfg.source_lang
    )
    languages = _require(cfg, "languages")
    raws = {
        lang: parse_raw(_read(str(base / spec["raw"])), lang)
        for lang, spec in languages.items()
    }
    dev = {
        lang: parse_conll(_read(str(base / spec["dev"])), scheme, language=lang)
        for lang, spec in languages.items()
        if "dev" in spec
    }
    stcfg = SelfTrainConfig(
        projection=pcfg,
        rounds=cfg.get("rounds", 1),
        src_weight=cfg.get("src_weight", 1.0),
        tgt_weight=cfg.get("tgt_weight", 1.0),
        epochs=cfg.get("epochs", 10),
        seed=cfg.get("seed", 0),
        keep_cap=cfg.get("keep_cap"),
        relabel_discards=cfg.get("relabel", True),
        combine=args.combine or cfg.get("combine", "prefer-multi"),
        retag_with=cfg.get("retag_with", "all"),
    )
    trainer = PerceptronTrainer(scheme)
    result = self_train(trainer, translator, src_corpus, raws, stcfg, dev or None)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    model_path = outdir / "model.json"
    model_path.write_text(result.model.to_json() + "\n", encoding="utf-8")
    report_path = outdir / "report.txt"
    report_path.write_text(kv_lines(result.kv()), encoding="utf-8")
    outputs = [str(model_path), str(report_path)]
    for lang, corpus in sorted(result.pseudo.items()):
        p = outdir / f"{lang}.pseudo.conll"
        p.write_text(write_conll(corpus), encoding="utf-8")
        outputs.append(str(p))
    _manifest(
        args,
        inputs=[args.config, str(base / cfg["source_train"])]
        + [str(base / spec["raw"]) for spec in languages.values()],
        outputs=outputs,
        seeds={"seed": stcfg.seed},
        config=cfg,
        manifest_path=outdir / "manifest.json",
    )
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for rnd in result.rounds:
        for lang, st in sorted(rnd.languages.items()):
            dev_part = f", dev F1 {st.dev_f1:.4f}" if st.dev_f1 is not None else ""
            print(
                f"round {rnd.number} {lang}: raw {st.raw}, projected {st.projected}, "
                f"kept {st.kept}, final {st.final}{dev_part}"
            )
    return EXIT_OK


def cmd_boundary_precision(args) -> int:
    src = parse_labeled(_read(args.src))
    tgt = parse_labeled(_read(args.tgt))
    if len(src) != len(tgt):
        raise CorpusMismatch(f"{len(src)} source sequences vs {len(tgt)} target")
    if args.oracle.startswith("lexicon:"):
        oracle = lexicon_oracle(load_lexicon(_read(args.oracle[len("lexicon:"):])))
    elif args.oracle.startswith("judgments:"):
        oracle = judgment_file_oracle(_read(args.oracle[len("judgments:"):]))
    else:
        raise ConfigError("oracle", f"expected 'lexicon:<file>' or 'judgments:<file>', got {args.oracle!r}")
    score = boundary_precision(list(zip(src, tgt)), oracle)
    print(f"boundary_precision={score!r}")
    return EXIT_OK


def cmd_projection_quality(args) -> int:
    scheme = _scheme(args.types)
    gold = parse_conll(_read(args.gold), scheme)
    kept = parse_conll(_read(args.pred), scheme, mode="repair")
    indices = [int(line) for line in _read(args.indices).split() if line.strip()]
    if len(indices) != len(kept):
        raise CorpusMismatch(f"{len(indices)} indices vs {len(kept)} kept sentences")
    gold_kept = Corpus([gold.sentences[i] for i in indices], gold.language)
    report = evaluate(kept, gold_kept)
    ratio = len(kept) / len(gold) if len(gold) else 0.0
    f1 = "NA" if report.f1 is None else repr(report.f1)
    print(f"f1={f1}")
    print(f"kept_ratio={ratio!r}")
    print(report.table())
    return EXIT_OK


# -- wiring --------------------------------------------------------------------


def _write_output(path: str | None, text: str, args) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
    _manifest(args, inputs=[args.input], outputs=[path])


def _manifest(args, inputs, outputs, seeds=None, config=None, manifest_path=None) -> None:
    cfg = config if config is not None else {
        k: v for k, v in vars(args).items() if k != "func" and v is not None
    }
    manifest = build_manifest(args.command, cfg, inputs, outputs, seeds)
    if manifest_path is None:
        manifest_path = Path(str(outputs[0]) + ".manifest.json")
    write_manifest(manifest_path, manifest)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crop", description=__doc__)
    parser.add_argument("--version", action="version", version=f"crop {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a CoNLL file against a tag scheme")
    p.add_argument("--input", required=True)
    p.add_argument("--types", required=True, help="comma-separated entity types")
    p.add_argument("--mode", choices=["strict", "repair"], default="strict")
    p.add_argument("--language", default="und")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("encode", help="bracket entities with slot markers")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--types", required=True)
    p.add_argument("--max-slots", type=int, default=10)
    p.add_argument("--language", default="und")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="recover a CoNLL corpus from bracketed sequences")
    p.add_argument("--input", required=True)
    p.add_argument("--output", default="-")
    p.add_argument("--max-slots", type=int, default=10)
    p.add_argument("--language", default="und")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("build-corpus", help="mix plain and bracketed pairs from bitext + alignments")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--alignments", required=True, help="Pharaoh i-j alignment file")
    p.add_argument("--out-src", required=True)
    p.add_argument("--out-tgt", required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--mode", choices=["alternate", "bernoulli"], default="alternate")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--max-phrase-len", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--src-lang", default="und")
    p.add_argument("--tgt-lang", default="und")
    p.set_defaults(func=cmd_build_corpus)

    p = sub.add_parser("train", help="train the built-in perceptron tagger")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--types", required=True)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--language", default="und")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="entity-level precision/recall/F1")
    p.add_argument("--pred", required=True, action="append",
                   help="predicted CoNLL file (repeat for per-language macro/micro averages)")
    p.add_argument("--gold", required=True, action="append")
    p.add_argument("--types", required=True)
    p.add_argument("--repair", action="store_true", help="repair orphan I- tags in predictions")
    p.add_argument("--micro", action="store_true", help="pool counts instead of macro-averaging F1")
    p.add_argument("--kv", help="write machine-readable report here")
    p.add_argument("--confusion", help="write token/gold/pred dump here")
    p.set_defaults(func=cmd_eval)

    def pipeline_flags(p):
        p.add_argument("--jobs", type=int, help="worker threads (default: config or cores)")
        p.add_argument("--max-words", type=int, help="override the length filter")
        p.add_argument(
            "--lang-verifier",
            metavar="{script|external:<cmd>|off}",
            help="override the language filter",
        )

    p = sub.add_parser("project", help="project labels onto raw target corpora")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", required=True)
    pipeline_flags(p)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("self-train", help="full loop: train, project, retrain")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", required=True)
    pipeline_flags(p)
    p.add_argument("--combine", choices=["agree", "prefer-multi", "prefer-src", "off"],
                   help="label combination mode (default: config or prefer-multi)")
    p.set_defaults(func=cmd_self_train)

    p = sub.add_parser("boundary-precision", help="bracketing quality of translated pairs")
    p.add_argument("--src", required=True, help="source labeled-sequence file")
    p.add_argument("--tgt", required=True, help="target labeled-sequence file")
    p.add_argument("--oracle", required=True, help="lexicon:<file> or judgments:<file>")
    p.set_defaults(func=cmd_boundary_precision)

    p = sub.add_parser("projection-quality", help="score projected labels against gold")
    p.add_argument("--pred", required=True, help="kept.conll from a project run")
    p.add_argument("--indices", required=True, help="kept_idx.txt from a project run")
    p.add_argument("--gold", required=True)
    p.add_argument("--types", required=True)
    p.set_defaults(func=cmd_projection_quality)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (CorpusError, AlignmentError, EncodeError, CorpusMismatch, ValueError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as e:
        print(f"backend error: {e}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
