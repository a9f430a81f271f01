"""Answer re-ranking: BM25 plus NLI/RQE/source features and a linear SVM.

BM25 follows the classic Okapi form with the raw IDF
``log((N - n + 0.5) / (n + 0.5))`` (natural log, no floor, so very common
terms get negative weight). Query tokens count once per occurrence.

Answer sentences are scored two ways: declarative sentences with the NLI
scorer (sentence as premise, question as hypothesis), sentences ending in
'?' with the RQE scorer (question as CHQ, sub-question as FAQ). External
scorers look those up by the ids from :func:`sentence_pair_id`.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from medtext._io import atomic_write_text
from medtext.corpus import AnswerCandidate, LabeledSentencePair, TaskKind
from medtext.preprocess import is_punct, split_sentences, tokenize
from medtext.scorer import Scorer

SCALAR_FEATURES = (
    "bm25",
    "nli_max_entail",
    "nli_mean_entail",
    "nli_frac_contradict",
    "rqe_max",
    "rqe_mean",
    "subq_count",
)

_CLOSERS = ")]}\"'»”’"


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class CorpusStats:
    n_docs: int
    avgdl: float
    df: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n_docs < 0:
            raise ValueError("n_docs must be >= 0")
        bad = [t for t, n in self.df.items() if not 0 <= n <= self.n_docs]
        if bad:
            raise ValueError(f"document frequency out of [0, {self.n_docs}] for {bad[0]!r}")
        if self.n_docs > 0 and not self.avgdl > 0:
            raise ValueError("avgdl must be > 0 for a non-empty corpus")

    @classmethod
    def from_documents(cls, docs: Iterable[Sequence[str]]) -> CorpusStats:
        docs = list(docs)
        df: Counter[str] = Counter()
        for d in docs:
            df.update(set(d))
        n = len(docs)
        avgdl = sum(len(d) for d in docs) / n if n else 0.0
        return cls(n, avgdl, dict(df))

    @classmethod
    def from_answers(cls, answers: Iterable[AnswerCandidate]) -> CorpusStats:
        return cls.from_documents(bm25_tokens(a.text) for a in answers)


def bm25_tokens(text: str) -> list[str]:
    """Lowercased word tokens (punctuation dropped) used for BM25 terms."""
    return [t.text.lower() for t in tokenize(text).tokens if not is_punct(t.text)]


def idf(term: str, stats: CorpusStats) -> float:
    n = stats.df.get(term, 0)
    return math.log((stats.n_docs - n + 0.5) / (n + 0.5))


def bm25(query: Sequence[str], doc: Sequence[str], params: Bm25Params | None,
         stats: CorpusStats) -> float:
    params = params or Bm25Params()
    tf = Counter(doc)
    score = 0.0
    norm = None
    for q in query:
        f = tf.get(q, 0)
        if f == 0:
            continue
        if norm is None:
            if params.b and not stats.avgdl > 0:
                raise ValueError("avgdl is 0; corpus stats do not describe this document")
            ratio = len(doc) / stats.avgdl if params.b else 0.0
            norm = params.k1 * (1.0 - params.b + params.b * ratio)
        score += idf(q, stats) * f * (params.k1 + 1.0) / (f + norm)
    return score


# ---------------------------------------------------------------------------
# features


@dataclass(frozen=True)
class FeatureVector:
    bm25: float
    nli_max_entail: float
    nli_mean_entail: float
    nli_frac_contradict: float
    rqe_max: float
    rqe_mean: float
    subq_count: int
    source_onehot: tuple[float, ...] = ()

    def as_list(self) -> list[float]:
        return [self.bm25, self.nli_max_entail, self.nli_mean_entail, self.nli_frac_contradict,
                self.rqe_max, self.rqe_mean, float(self.subq_count), *self.source_onehot]


def feature_names(source_vocab: Sequence[str]) -> list[str]:
    return [*SCALAR_FEATURES, *(f"source={s}" for s in source_vocab)]


def is_subquestion(sentence: str) -> bool:
    """True for sentences ending in '?', ignoring trailing brackets and quotes.

    "Facts About Uveitis (What Causes Uveitis?)" counts as a sub-question.
    """
    return sentence.rstrip().rstrip(_CLOSERS).rstrip().endswith("?")


def sentence_pair_id(question_id: str, answer_id: str, index: int) -> str:
    """Pair id under which external scorers store sentence ``index`` of an answer."""
    return f"{question_id}|{answer_id}|{index}"


def answer_sentence_pairs(question: str, answer: AnswerCandidate,
                          question_id: str | None = None,
                          ) -> tuple[list[LabeledSentencePair], list[LabeledSentencePair]]:
    """Split an answer into NLI pairs (declaratives) and RQE pairs (sub-questions)."""
    qid = question_id if question_id is not None else answer.question_id
    nli, rqe = [], []
    for k, sent in enumerate(split_sentences(answer.text)):
        pid = sentence_pair_id(qid, answer.answer_id, k)
        if is_subquestion(sent):
            rqe.append(LabeledSentencePair(pid, question, sent))
        else:
            nli.append(LabeledSentencePair(pid, sent, question))
    return nli, rqe


def _check_task(scorer: Scorer, task: TaskKind, role: str) -> None:
    if scorer.task is not task:
        raise ValueError(f"{role} scorer {scorer.name!r} is for {scorer.task.value}, need {task.value}")


def extract_features(question: str, answer: AnswerCandidate, nli: Scorer, rqe: Scorer,
                     stats: CorpusStats, params: Bm25Params | None = None,
                     source_vocab: Sequence[str] = (),
                     question_id: str | None = None) -> FeatureVector:
    _check_task(nli, TaskKind.NLI, "NLI")
    _check_task(rqe, TaskKind.RQE, "RQE")
    nli_pairs, rqe_pairs = answer_sentence_pairs(question, answer, question_id)

    entail, contradicts = [], 0
    for p in nli_pairs:
        probs = nli.score(p.text_a, p.text_b, p.id)
        entail.append(probs["entailment"])
        if max(TaskKind.NLI.labels, key=lambda lab: (probs[lab], -TaskKind.NLI.labels.index(lab))) \
                == "contradiction":
            contradicts += 1
    rqe_true = [rqe.score(p.text_a, p.text_b, p.id)["true"] for p in rqe_pairs]

    onehot = tuple(1.0 if answer.source == s else 0.0 for s in source_vocab)
    return FeatureVector(
        bm25=bm25(bm25_tokens(question), bm25_tokens(answer.text), params, stats),
        nli_max_entail=max(entail, default=0.0),
        nli_mean_entail=sum(entail) / len(entail) if entail else 0.0,
        nli_frac_contradict=contradicts / len(entail) if entail else 0.0,
        rqe_max=max(rqe_true, default=0.0),
        rqe_mean=sum(rqe_true) / len(rqe_true) if rqe_true else 0.0,
        subq_count=len(rqe_pairs),
        source_onehot=onehot,
    )


# ---------------------------------------------------------------------------
# linear model


@dataclass(frozen=True)
class LinearModel:
    """Linear decision function over standardized features."""

    weights: tuple[float, ...]
    bias: float
    mean: tuple[float, ...]
    scale: tuple[float, ...]
    feature_names: tuple[str, ...] = ()
    source_vocab: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        d = len(self.weights)
        if len(self.mean) != d or len(self.scale) != d:
            raise ValueError("weights, mean and scale must have the same length")
        if self.feature_names and len(self.feature_names) != d:
            raise ValueError("feature_names length does not match weights")

    @property
    def dim(self) -> int:
        return len(self.weights)

    def decision(self, x: FeatureVector | Sequence[float]) -> float:
        v = np.asarray(_as_list(x), dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"feature dimension {v.shape[0]} does not match model dimension {self.dim}")
        z = (v - np.asarray(self.mean)) / np.asarray(self.scale)
        return float(np.dot(np.asarray(self.weights), z) + self.bias)

    def predict(self, x: FeatureVector | Sequence[float]) -> bool:
        return self.decision(x) >= 0.0

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "weights": list(self.weights),
            "bias": self.bias,
            "mean": list(self.mean),
            "scale": list(self.scale),
            "variance": [s * s for s in self.scale],
            "source_vocab": list(self.source_vocab),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> LinearModel:
        return cls(
            weights=tuple(float(w) for w in d["weights"]),
            bias=float(d["bias"]),
            mean=tuple(float(m) for m in d["mean"]),
            scale=tuple(float(s) for s in d["scale"]),
            feature_names=tuple(d.get("feature_names", ())),
            source_vocab=tuple(d.get("source_vocab", ())),
        )

    def save(self, path: str | Path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> LinearModel:
        return cls.from_dict(json.loads(Path(path).read_text("utf-8")))


def _as_list(x: FeatureVector | Sequence[float]) -> list[float]:
    return x.as_list() if isinstance(x, FeatureVector) else [float(v) for v in x]


def train_linear(examples: Sequence[tuple[FeatureVector | Sequence[float], bool]],
                 epochs: int = 100, learning_rate: float = 0.01,
                 regularization: float = 1e-3, seed: int = 0,
                 source_vocab: Sequence[str] = ()) -> LinearModel:
    """Fit a linear SVM by stochastic subgradient descent on the L2-regularized hinge loss.

    Features are standardized with the training mean and standard
    deviation (constant features keep scale 1); both are stored on the
    model. Examples are visited in a fresh ``numpy`` permutation per epoch
    drawn from ``seed``.
    """
    if not examples:
        raise ValueError("no training examples")
    X = np.asarray([_as_list(x) for x, _ in examples], dtype=np.float64)
    y = np.asarray([1.0 if rel else -1.0 for _, rel in examples])
    if X.ndim != 2:
        raise ValueError("feature vectors have inconsistent dimensions")
    if np.all(y > 0) or np.all(y < 0):
        raise ValueError("degenerate training set: need both relevant and non-relevant examples")

    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale

    rng = np.random.default_rng(seed)
    w = np.zeros(X.shape[1])
    b = 0.0
    shrink = 1.0 - learning_rate * regularization
    for _ in range(epochs):
        for i in rng.permutation(len(y)):
            margin = y[i] * (Z[i] @ w + b)
            w *= shrink
            if margin < 1.0:
                w += learning_rate * y[i] * Z[i]
                b += learning_rate * y[i]

    names = feature_names(source_vocab) if isinstance(examples[0][0], FeatureVector) else ()
    if names and len(names) != X.shape[1]:
        raise ValueError("source_vocab does not match the feature vectors' one-hot width")
    return LinearModel(tuple(w.tolist()), float(b), tuple(mean.tolist()), tuple(scale.tolist()),
                       tuple(names), tuple(source_vocab))


def accuracy(model: LinearModel,
             examples: Iterable[tuple[FeatureVector | Sequence[float], bool]]) -> float:
    examples = list(examples)
    if not examples:
        raise ValueError("no examples")
    return sum(model.predict(x) == bool(rel) for x, rel in examples) / len(examples)


def rank_answers(question: str, answers: Sequence[AnswerCandidate], model: LinearModel,
                 nli: Scorer, rqe: Scorer, stats: CorpusStats,
                 params: Bm25Params | None = None,
                 question_id: str | None = None) -> list[tuple[str, float]]:
    """Answers by descending decision score; ties by rank_hint, then answer_id."""
    scored = []
    for a in answers:
        fv = extract_features(question, a, nli, rqe, stats, params, model.source_vocab, question_id)
        scored.append((a, model.decision(fv)))
    scored.sort(key=lambda t: (-t[1], t[0].rank_hint if t[0].rank_hint is not None else math.inf,
                               t[0].answer_id))
    return [(a.answer_id, s) for a, s in scored]


def source_vocabulary(answers: Iterable[AnswerCandidate]) -> tuple[str, ...]:
    return tuple(sorted({a.source for a in answers}))


def build_examples(questions: Mapping[str, str], answers: Sequence[AnswerCandidate],
                   nli: Scorer, rqe: Scorer, params: Bm25Params | None = None,
                   source_vocab: Sequence[str] | None = None,
                   ) -> tuple[list[tuple[FeatureVector, bool]], tuple[str, ...]]:
    """Feature vectors for every answer with a relevance label.

    Corpus statistics come from the whole answer pool passed in.
    """
    vocab = tuple(source_vocab) if source_vocab is not None else source_vocabulary(answers)
    stats = CorpusStats.from_answers(answers)
    out = []
    for a in answers:
        if a.relevance is None:
            continue
        if a.question_id not in questions:
            raise KeyError(f"no question text for {a.question_id!r}")
        fv = extract_features(questions[a.question_id], a, nli, rqe, stats, params, vocab)
        out.append((fv, a.relevance))
    return out, vocab
