from .base import (
    BackendContractViolation,
    BackendError,
    BackendUnavailable,
    EmptyTrainingSet,
    ProtocolError,
    SchemeMismatch,
    TaggerBackend,
    TaggerTrainer,
    TranslatorBackend,
    UnknownLanguagePair,
)
from .dictionary import DictionaryTranslator, invert_lexicon, load_lexicon
from .external import ExternalBackend, HttpTransport, StdioTransport
from .gazetteer import GazetteerTagger, load_gazetteer
from .perceptron import PerceptronTagger, PerceptronTrainer

__all__ = [
    "BackendContractViolation",
    "BackendError",
    "BackendUnavailable",
    "DictionaryTranslator",
    "EmptyTrainingSet",
    "ExternalBackend",
    "GazetteerTagger",
    "HttpTransport",
    "PerceptronTagger",
    "PerceptronTrainer",
    "ProtocolError",
    "SchemeMismatch",
    "StdioTransport",
    "TaggerBackend",
    "TaggerTrainer",
    "TranslatorBackend",
    "UnknownLanguagePair",
    "invert_lexicon",
    "load_gazetteer",
    "load_lexicon",
]
