"""Zero-shot cross-lingual NER label projection toolkit."""

__version__ = "0.1.0"

from .corpus_io import (  # noqa: F401
    Corpus,
    EntitySpan,
    TaggedSentence,
    TagScheme,
    parse_conll,
    parse_raw,
    spans_from_tags,
    tags_from_spans,
    write_conll,
)
from .labeled_seq import (  # noqa: F401
    BoundarySymbolTable,
    DecodeError,
    LabeledSequence,
    decode,
    encode,
    strip_symbols,
)
