"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

from __future__ import annotations

import json
import random
import shutil
import socket
import string
import subprocess
import time
import urllib.request
from pathlib import Path

import pytest

from crop.align_builder import MixConfig, WordAlignment, emit_mixed_corpus, extract_phrase_pairs
from crop.backends import PerceptronTrainer
from crop.corpus_io import (
    Corpus,
    EntitySpan,
    TaggedSentence,
    TagScheme,
    parse_conll,
    tags_from_spans,
    write_conll,
)
from crop.evaluation import (
    boundary_precision,
    evaluate,
    lexicon_oracle,
    projection_quality,
)
from crop.labeled_seq import BoundarySymbolTable, LabeledSequence, decode, encode
from crop.postprocess import (
    ScriptVerifier,
    filter_all_o,
    filter_language,
    filter_length,
)
from crop.projection import ProjectionConfig, project_corpus
from crop.report import kv_lines
from crop.selftrain import SelfTrainConfig, self_train, train_source

from synthlang import (
    SCHEME,
    SRC_LANG,
    TGT_LANG,
    make_corpus,
    make_oracle_tagger,
    make_translator,
    strip_labels,
)
from test_align_builder import brute_force_pairs

TABLE = BoundarySymbolTable()


def _passed(n: int, detail: str):
    print(f"ACCEPTANCE {n}: PASS ({detail})")


def random_sentence(rng: random.Random, max_len=40, max_entities=10) -> TaggedSentence:
    n = rng.randint(1, max_len)
    tokens = [
        "".join(rng.choice(string.ascii_letters) for _ in range(rng.randint(1, 6)))
        for _ in range(n)
    ]
    spans = []
    pos = 0
    budget = rng.randint(0, max_entities)
    while pos < n and len(spans) < budget:
        if rng.random() < 0.4:
            end = min(pos + rng.randint(1, 3), n)
            spans.append(EntitySpan(pos, end, rng.choice(["LOC", "PER", "ORG", "MISC"])))
            pos = end
        else:
            pos += 1
    return TaggedSentence(tokens, tags_from_spans(spans, n), "und")


def test_criterion_1_codec_roundtrips():
    """10,000 random sentences survive encode/decode and CoNLL write/parse.

    Timed on process CPU so a busy sandbox cannot fail a bound that is about
    the codec's own speed.
    """
    rng = random.Random(1001)
    scheme = TagScheme(["LOC", "PER", "ORG", "MISC"])
    start = time.process_time()
    sentences = [random_sentence(rng) for _ in range(10_000)]
    failures = 0
    for sent in sentences:
        seq = encode(sent, TABLE)
        if decode(seq.tokens, seq.slot_types, TABLE, sent.language) != sent:
            failures += 1
    corpus = Corpus(sentences, "und")
    if parse_conll(write_conll(corpus), scheme) != corpus:
        failures += 1
    elapsed = time.process_time() - start
    assert failures == 0
    assert elapsed < 5.0, f"took {elapsed:.2f}s CPU"
    _passed(1, f"10000 sentences, 0 failures, {elapsed:.2f}s CPU")


def test_criterion_2_phrase_extraction_oracle():
    """Extraction equals brute-force enumeration of consistent rectangles."""
    rng = random.Random(1002)
    start = time.process_time()
    checked = 0
    for _ in range(1_000):
        src_len = rng.randint(1, 8)
        tgt_len = rng.randint(1, 8)
        density = rng.random() * 0.4
        links = {
            (s, t)
            for s in range(src_len)
            for t in range(tgt_len)
            if rng.random() < density
        }
        alignment = WordAlignment(links)
        got = extract_phrase_pairs(src_len, tgt_len, alignment, max_phrase_len=8)
        want = brute_force_pairs(src_len, tgt_len, alignment, max_phrase_len=8)
        assert got == want, (src_len, tgt_len, sorted(links))
        checked += len(want)
    elapsed = time.process_time() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s CPU"
    _passed(2, f"1000 sentence pairs, {checked} pairs matched, {elapsed:.2f}s CPU")


@pytest.fixture(scope="module")
def oracle_run(world):
    """Criterion 3 artifacts, shared with the protocol-integration criterion."""
    gold = make_corpus(world, 2_000, seed=1003, language=TGT_LANG)
    raw = strip_labels(gold)
    cfg = ProjectionConfig(
        source_lang=SRC_LANG,
        verifier=ScriptVerifier({TGT_LANG: "Cyrillic", SRC_LANG: "Latin"}),
    )
    start = time.monotonic()
    pseudo = project_corpus(raw, make_translator(world), make_oracle_tagger(world), cfg)
    elapsed = time.monotonic() - start
    return gold, raw, cfg, pseudo, elapsed


def test_criterion_3_oracle_pipeline(world, oracle_run):
    """Lossless translation + oracle tagger projects gold labels perfectly."""
    gold, _, _, pseudo, elapsed = oracle_run
    stats = pseudo.stats()
    quality = projection_quality(pseudo, gold)
    assert stats["kept_ratio"] >= 0.99
    assert quality.f1 == 1.0
    assert elapsed < 60.0, f"took {elapsed:.2f}s"
    _passed(
        3,
        f"kept {stats['kept']}/{stats['total']} ({stats['kept_ratio']:.1%}), "
        f"F1 {quality.f1:.2f}, {elapsed:.2f}s",
    )


def test_criterion_4_self_training_gain(world):
    """Self-training on projected labels beats zero-shot transfer by >= 10 points."""
    start = time.monotonic()
    trainer = PerceptronTrainer(SCHEME)
    src_train = make_corpus(world, 1_000, seed=1004, min_entities=0, free_order=True)
    gold_eval = make_corpus(world, 500, seed=1005, language=TGT_LANG)
    raw = strip_labels(make_corpus(world, 2_000, seed=1006, language=TGT_LANG))

    def target_f1(model):
        tags = model.tag([s.tokens for s in gold_eval])
        pred = Corpus(
            [TaggedSentence(s.tokens, t, TGT_LANG) for s, t in zip(gold_eval, tags)],
            TGT_LANG,
        )
        return evaluate(pred, gold_eval).f1 or 0.0

    baseline_model = train_source(trainer, src_train, epochs=10, seed=0)
    baseline = target_f1(baseline_model)

    cfg = SelfTrainConfig(
        projection=ProjectionConfig(
            source_lang=SRC_LANG,
            verifier=ScriptVerifier({TGT_LANG: "Cyrillic", SRC_LANG: "Latin"}),
        ),
        epochs=10,
        seed=0,
    )
    result = self_train(trainer, make_translator(world), src_train, {TGT_LANG: raw}, cfg)
    after = target_f1(result.model)

    rerun = self_train(trainer, make_translator(world), src_train, {TGT_LANG: raw}, cfg)
    probe = [s.tokens for s in gold_eval.sentences[:50]]
    assert result.model.tag(probe) == rerun.model.tag(probe), "not deterministic"

    elapsed = time.monotonic() - start
    assert after >= baseline + 0.10, f"baseline {baseline:.4f}, after {after:.4f}"
    assert elapsed < 300.0, f"took {elapsed:.2f}s"
    _passed(
        4,
        f"baseline F1 {baseline:.4f} -> {after:.4f} (+{(after - baseline) * 100:.1f} points), "
        f"{elapsed:.1f}s",
    )


def test_criterion_5_conlleval_equivalence():
    """Hand-counted 10-sentence fixture reproduces at 1e-9 tolerance."""

    def build(spec):
        sentences = []
        for length, spans in spec:
            tokens = [f"w{i}" for i in range(length)]
            sentences.append(
                TaggedSentence(tokens, tags_from_spans([EntitySpan(*s) for s in spans], length), "xx")
            )
        return Corpus(sentences, "xx")

    gold = build(
        [
            (4, [(0, 2, "LOC")]),
            (4, [(0, 2, "LOC")]),
            (3, [(1, 2, "PER")]),
            (5, [(0, 1, "PER"), (2, 4, "ORG")]),
            (4, [(0, 1, "ORG")]),
            (3, []),
            (4, [(0, 3, "PER")]),
            (4, [(0, 1, "LOC"), (2, 3, "LOC")]),
            (3, [(0, 2, "ORG")]),
            (3, []),
        ]
    )
    pred = build(
        [
            (4, [(0, 2, "LOC")]),
            (4, [(0, 1, "LOC")]),
            (3, [(1, 2, "ORG")]),
            (5, [(0, 1, "PER")]),
            (4, [(0, 1, "ORG"), (2, 3, "LOC")]),
            (3, []),
            (4, [(1, 3, "PER")]),
            (4, [(0, 1, "LOC"), (2, 3, "LOC")]),
            (3, []),
            (3, [(0, 2, "PER")]),
        ]
    )
    report = evaluate(pred, gold)
    # hand counts: overall 10/10/5; LOC 4/5/3, PER 3/3/1, ORG 3/2/1
    assert abs(report.precision - 0.5) <= 1e-9
    assert abs(report.recall - 0.5) <= 1e-9
    assert abs(report.f1 - 0.5) <= 1e-9
    assert abs(report.per_type["LOC"].f1 - (2 * 0.6 * 0.75 / 1.35)) <= 1e-9
    assert abs(report.per_type["PER"].f1 - (1 / 3)) <= 1e-9
    assert abs(report.per_type["ORG"].f1 - 0.4) <= 1e-9
    _passed(5, "P=R=F1=0.5 overall; per-type scores match hand counts at 1e-9")


class CorruptingTranslator:
    """Drops or displaces one boundary symbol in a fixed fraction of sentences."""

    def __init__(self, inner, rate=0.15, seed=0):
        self.inner = inner
        self.rate = rate
        self.seed = seed
        self.count = 0
        self.corrupted = 0

    def translate(self, batch, src_lang, tgt_lang):
        out = self.inner.translate(batch, src_lang, tgt_lang)
        result = []
        for tokens in out:
            rng = random.Random(f"{self.seed}:{self.count}")
            self.count += 1
            if rng.random() < self.rate:
                tokens = self._corrupt(list(tokens), rng)
                self.corrupted += 1
            result.append(tokens)
        return result

    @staticmethod
    def _corrupt(tokens, rng):
        symbols = [i for i, t in enumerate(tokens) if TABLE.is_symbol(t)]
        i = rng.choice(symbols)
        if rng.random() < 0.5:
            del tokens[i]
        else:
            j = i + 1 if i + 1 < len(tokens) else i - 1
            tokens[i], tokens[j] = tokens[j], tokens[i]
        return tokens


def test_criterion_6_boundary_precision(world):
    """The metric is exact on a clean translator and tracks injected damage."""
    clean = make_translator(world)
    corpus = make_corpus(world, 10_000, seed=1007, language=SRC_LANG)
    seqs = [encode(s, TABLE) for s in corpus]
    oracle = lexicon_oracle(world.lexicon)

    out = clean.translate([s.tokens for s in seqs], SRC_LANG, TGT_LANG)
    clean_pairs = [
        (seq, LabeledSequence(tokens, seq.slot_types, TGT_LANG))
        for seq, tokens in zip(seqs, out)
    ]
    clean_score = boundary_precision(clean_pairs, oracle, TABLE)
    assert clean_score == 1.0

    corrupting = CorruptingTranslator(clean, rate=0.15, seed=1008)
    out = corrupting.translate([s.tokens for s in seqs], SRC_LANG, TGT_LANG)
    bad_pairs = [
        (seq, LabeledSequence(tokens, seq.slot_types, TGT_LANG))
        for seq, tokens in zip(seqs, out)
    ]
    bad_score = boundary_precision(bad_pairs, oracle, TABLE)
    assert abs(bad_score - 0.85) <= 0.01, f"score {bad_score}, corrupted {corrupting.corrupted}"
    _passed(6, f"clean 1.00, corrupted {bad_score:.4f} with {corrupting.corrupted} damaged pairs")


def test_criterion_7_filters(world):
    """Known mixture filters down to the exact survivor set; filters are
    idempotent and order-independent."""
    rng = random.Random(1009)
    normal = list(make_corpus(world, 700, seed=1010, language=TGT_LANG))
    too_long = []
    for _ in range(120):
        n = rng.randint(129, 150)
        tokens = [world.lexicon[rng.choice(world.context_words)] for _ in range(n)]
        tags = ["O"] * n
        tags[0] = "B-LOC"  # carries an entity so only the length filter removes it
        too_long.append(TaggedSentence(tokens, tags, TGT_LANG))
    all_o = []
    for _ in range(100):
        n = rng.randint(3, 10)
        tokens = [world.lexicon[rng.choice(world.context_words)] for _ in range(n)]
        all_o.append(TaggedSentence(tokens, ["O"] * n, TGT_LANG))
    wrong_script = [
        TaggedSentence(s.tokens, s.tags, TGT_LANG)
        for s in make_corpus(world, 80, seed=1011, language=SRC_LANG)
    ]

    mixed = normal + too_long + all_o + wrong_script
    rng.shuffle(mixed)
    corpus = Corpus(mixed, TGT_LANG)
    verifier = ScriptVerifier({TGT_LANG: "Cyrillic", SRC_LANG: "Latin"})

    # independent per-sentence predicate defines the expected survivors
    def survives(s):
        return (
            len(s) <= 128
            and not s.is_all_o
            and verifier(s.tokens, TGT_LANG)
        )

    expected = tuple(s for s in mixed if survives(s))
    assert len(expected) == 700

    filters = [
        lambda c: filter_length(c, 128),
        filter_all_o,
        lambda c: filter_language(c, verifier),
    ]
    import itertools

    results = set()
    for order in itertools.permutations(filters):
        c = corpus
        for f in order:
            c = f(c)
        results.add(c.sentences)
    assert results == {expected}
    for f in filters:
        once = f(corpus)
        assert f(once) == once
    _passed(
        7,
        f"1000 sentences -> {len(expected)} survivors exactly; "
        "idempotence and 6 filter orders agree",
    )


def test_criterion_8_alpha_mix(world):
    """Alternation at alpha=0.5 yields exactly 500/500; labeled pairs decode."""
    rng = random.Random(1012)
    bitext = []
    alignments = []
    for _ in range(1_000):
        src = make_corpus(world, 1, seed=rng.randint(0, 10**9), language=SRC_LANG).sentences[0]
        tgt_tokens = [world.lexicon[t] for t in src.tokens]
        bitext.append((list(src.tokens), tgt_tokens))
        alignments.append(WordAlignment({(i, i) for i in range(len(src))}))
    pairs = list(
        emit_mixed_corpus(bitext, alignments, MixConfig(alpha=0.5, seed=1013), TABLE)
    )
    plain = [p for p in pairs if p.kind == "plain"]
    labeled = [p for p in pairs if p.kind == "labeled"]
    assert len(plain) == 500 and len(labeled) == 500
    for p in plain:
        assert not p.src.slot_types
    decoded = 0
    for p in labeled:
        for seq in (p.src, p.tgt):
            result = decode(seq.tokens, seq.slot_types, TABLE, seq.language)
            assert isinstance(result, TaggedSentence), result
            decoded += 1
    _passed(8, f"500 plain + 500 labeled; {decoded} side decodes all clean")


# -- criterion 9: the reference adapter reproduces the built-in run ------------

ADAPTER_DIR = Path(__file__).resolve().parent.parent / "adapter"
ADAPTER_MAIN = ADAPTER_DIR / "dist" / "main.js"


@pytest.fixture(scope="module")
def adapter_spec(tmp_path_factory, world):
    if shutil.which("node") is None:
        pytest.skip("node is not available")
    if not ADAPTER_MAIN.exists():
        subprocess.run(
            ["npm", "run", "build"], cwd=ADAPTER_DIR, check=True, capture_output=True
        )
    base = tmp_path_factory.mktemp("adapter")
    (base / "lex.tsv").write_text(world.lexicon_text(), encoding="utf-8")
    (base / "gaz.tsv").write_text(world.gazetteer_text(), encoding="utf-8")
    spec = {
        "translator": {
            "kind": "dictionary",
            "pairs": {f"{SRC_LANG}-{TGT_LANG}": "lex.tsv"},
            "bidirectional": True,
            "reorder": "reverse_groups",
        },
        "tagger": {"kind": "gazetteer", "path": "gaz.tsv"},
    }
    (base / "model.json").write_text(json.dumps(spec), encoding="utf-8")
    return base / "model.json"


def _run_output(pseudo) -> bytes:
    text = write_conll(pseudo.kept_corpus())
    text += kv_lines(pseudo.stats())
    text += "".join(f"{i}\n" for i in pseudo.kept_indices())
    return text.encode("utf-8")


def test_criterion_9_protocol_integration(world, oracle_run, adapter_spec):
    """The stdio and HTTP adapters reproduce the built-in run byte for byte."""
    from crop.backends import ExternalBackend

    gold, raw, cfg, builtin_pseudo, _ = oracle_run
    want = _run_output(builtin_pseudo)

    start = time.monotonic()
    stdio = ExternalBackend.spawn(
        ["node", str(ADAPTER_MAIN), "--model", str(adapter_spec), "--transport", "stdio"]
    )
    try:
        pseudo = project_corpus(raw, stdio, stdio, cfg)
    finally:
        stdio.close()
    assert _run_output(pseudo) == want, "stdio run differs from built-in run"
    stdio_elapsed = time.monotonic() - start

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen(
        [
            "node", str(ADAPTER_MAIN), "--model", str(adapter_spec),
            "--transport", "http", "--port", str(port),
        ],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        url = f"http://127.0.0.1:{port}/"
        deadline = time.monotonic() + 15
        while True:
            try:
                urllib.request.urlopen(url, timeout=1).read()
                break
            except OSError:
                if time.monotonic() > deadline:
                    raise RuntimeError("adapter http server did not come up")
                time.sleep(0.05)
        http_backend = ExternalBackend.connect(url)
        pseudo = project_corpus(raw, http_backend, http_backend, cfg)
        assert _run_output(pseudo) == want, "http run differs from built-in run"
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    _passed(
        9,
        f"stdio ({stdio_elapsed:.1f}s) and http runs byte-identical to the "
        f"built-in run over {len(raw)} sentences",
    )
