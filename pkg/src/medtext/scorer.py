"""Entailment scorers.

A scorer maps a sentence pair to a probability vector over its task's
labels. Deep models (BERT, MT-DNN) run outside this package; their
dumps come in through :class:`ExternalScorer`, which answers by pair id.
:class:`OverlapScorer` is a lexical baseline that needs no model at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Protocol, runtime_checkable

from medtext.corpus import PredictionRecord, TaskKind
from medtext.preprocess import is_punct, tokenize


class MissingScoreError(LookupError):
    pass


@runtime_checkable
class Scorer(Protocol):
    name: str
    task: TaskKind

    def score(self, text_a: str, text_b: str, pair_id: str | None = None) -> dict[str, float]:
        ...


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """One token per line; blank lines and ``#`` comments ignored. Default: bundled list."""
    if path is None:
        text = resources.files("medtext").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines()
                     if w.strip() and not w.lstrip().startswith("#"))


@dataclass(frozen=True)
class OverlapScorerConfig:
    temperature: float = 1.0
    stopwords: frozenset[str] = field(default_factory=load_stopwords)

    def __post_init__(self) -> None:
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


def content_tokens(text: str, stopwords: Iterable[str] = ()) -> set[str]:
    stop = set(stopwords)
    return {t.text.lower() for t in tokenize(text).tokens
            if not is_punct(t.text) and t.text.lower() not in stop}


def jaccard(a: set[str], b: set[str]) -> float:
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def overlap_score(a: str, b: str, task: TaskKind | str,
                  config: OverlapScorerConfig | None = None) -> dict[str, float]:
    """Probabilities from the Jaccard overlap J of the two content-token sets.

    RQE: P(true) = J^(1/T) / (J^(1/T) + (1 - J)^(1/T)).
    NLI: entailment J, neutral and contradiction (1 - J)/2 each.
    """
    config = config or OverlapScorerConfig()
    task = TaskKind.parse(task)
    j = jaccard(content_tokens(a, config.stopwords), content_tokens(b, config.stopwords))
    if task is TaskKind.RQE:
        if j <= 0.0 or j >= 1.0:
            p_true = 1.0 if j >= 1.0 else 0.0
        else:
            # logistic form of the ratio; stays finite for tiny temperatures
            x = (math.log1p(-j) - math.log(j)) / config.temperature
            p_true = 1.0 / (1.0 + math.exp(min(x, 700.0)))
        return {"true": p_true, "false": 1.0 - p_true}
    rest = (1.0 - j) * 0.5
    total = j + 2 * rest
    return {"entailment": j / total, "neutral": rest / total, "contradiction": rest / total}


class OverlapScorer:
    def __init__(self, task: TaskKind | str, config: OverlapScorerConfig | None = None,
                 name: str = "overlap"):
        self.task = TaskKind.parse(task)
        self.config = config or OverlapScorerConfig()
        self.name = name

    def score(self, text_a: str, text_b: str, pair_id: str | None = None) -> dict[str, float]:
        return overlap_score(text_a, text_b, self.task, self.config)

    def __repr__(self) -> str:
        return f"OverlapScorer(task={self.task.value}, temperature={self.config.temperature})"


class ExternalScorer:
    """Serves stored probabilities by pair id; text arguments are ignored."""

    def __init__(self, preds: Iterable[PredictionRecord], model_name: str | None = None,
                 task: TaskKind | str | None = None):
        preds = list(preds)
        if model_name is None:
            names = sorted({p.model_name for p in preds})
            if len(names) != 1:
                raise ValueError(f"model_name required when predictions hold models {names}")
            model_name = names[0]
        self.name = model_name
        table: dict[str, dict[str, float]] = {}
        for rec in preds:
            if rec.model_name != model_name:
                continue
            if rec.pair_id in table:
                raise ValueError(f"duplicate prediction for pair {rec.pair_id!r}")
            table[rec.pair_id] = dict(rec.probs)
        if task is None:
            if not table:
                raise ValueError(f"no predictions for model {model_name!r}")
            labels = set(next(iter(table.values())))
            task = TaskKind.NLI if labels == set(TaskKind.NLI.labels) else TaskKind.RQE
        self.task = TaskKind.parse(task)
        for pid, probs in table.items():
            if set(probs) != set(self.task.labels):
                raise ValueError(f"pair {pid!r} has labels {sorted(probs)}, task is {self.task.value}")
        self._table = table

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self._table

    def __len__(self) -> int:
        return len(self._table)

    def score(self, text_a: str = "", text_b: str = "", pair_id: str | None = None) -> dict[str, float]:
        if pair_id is None or pair_id not in self._table:
            raise MissingScoreError(f"no stored score from {self.name!r} for pair {pair_id!r}")
        return dict(self._table[pair_id])


def external_scorer(preds: Iterable[PredictionRecord], model_name: str | None = None) -> ExternalScorer:
    return ExternalScorer(preds, model_name)


def score_pairs(scorer: Scorer, pairs: Iterable, model_name: str | None = None) -> list[PredictionRecord]:
    """Run ``scorer`` over pairs and wrap the results as prediction records."""
    name = model_name or scorer.name
    return [PredictionRecord(p.id, name, scorer.score(p.text_a, p.text_b, p.id)) for p in pairs]


def check_simplex(probs: Mapping[str, float], task: TaskKind, tol: float = 1e-9) -> None:
    if set(probs) != set(task.labels):
        raise ValueError(f"labels {sorted(probs)} do not match task {task.value}")
    if any(v < 0 for v in probs.values()) or abs(sum(probs.values()) - 1.0) > tol:
        raise ValueError(f"not a probability vector: {dict(probs)}")
