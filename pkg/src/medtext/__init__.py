"""Medical textual-entailment pipeline toolkit.

Abbreviation expansion, UMLS-template augmentation, the premise-group
label prior, majority-vote ensembling, BM25/feature answer re-ranking and
evaluation. Neural entailment models plug in through :mod:`medtext.scorer`.
"""

from medtext.corpus import (
    AnswerCandidate,
    ConceptAnnotation,
    CorpusError,
    Gazetteer,
    LabeledSentencePair,
    PredictionRecord,
    Provenance,
    TaskKind,
)

__all__ = [
    "AnswerCandidate",
    "ConceptAnnotation",
    "CorpusError",
    "Gazetteer",
    "LabeledSentencePair",
    "PredictionRecord",
    "Provenance",
    "TaskKind",
]

__version__ = "0.1.0"
