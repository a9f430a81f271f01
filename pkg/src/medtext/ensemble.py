"""Hard-label majority voting across models."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from medtext.corpus import PredictionRecord, TaskKind


@dataclass(frozen=True)
class VoteResult:
    pair_id: str
    label: str
    votes: Mapping[str, int]
    tie_broken: bool

    def to_dict(self) -> dict:
        return {"pair_id": self.pair_id, "label": self.label, "votes": dict(self.votes),
                "tie_broken": self.tie_broken}


def majority_vote(predictions: Sequence[tuple[str, Mapping[str, str]]],
                  tie_break_model: str | None = None) -> list[VoteResult]:
    """Combine per-model label maps by majority.

    The label with the strictly largest count wins. When several labels
    share the top count, ``tie_break_model``'s label wins if it is one of
    them, else the lexicographically smallest tied label. Results follow
    the pair order of the first model.
    """
    if not predictions:
        return []
    names = [name for name, _ in predictions]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate model name in {names}")
    if tie_break_model is None:
        tie_break_model = names[0]
    if tie_break_model not in names:
        raise ValueError(f"unknown tie_break_model {tie_break_model!r}; models are {names}")

    first = predictions[0][1]
    keys = set(first)
    for name, labels in predictions[1:]:
        if set(labels) != keys:
            missing = sorted(keys - set(labels))[:3]
            extra = sorted(set(labels) - keys)[:3]
            raise ValueError(f"coverage mismatch for model {name!r}: missing {missing}, extra {extra}")
    breaker = dict(predictions)[tie_break_model]

    out = []
    for pid in first:
        votes = Counter(labels[pid] for _, labels in predictions)
        top = max(votes.values())
        tied = sorted(lab for lab, n in votes.items() if n == top)
        if len(tied) == 1:
            out.append(VoteResult(pid, tied[0], dict(votes), False))
            continue
        label = breaker[pid] if breaker[pid] in tied else tied[0]
        out.append(VoteResult(pid, label, dict(votes), True))
    return out


def labels_from_records(records: Iterable[PredictionRecord],
                        task: TaskKind) -> dict[str, dict[str, str]]:
    """Argmax labels per model: ``{model_name: {pair_id: label}}``."""
    out: dict[str, dict[str, str]] = {}
    for rec in records:
        out.setdefault(rec.model_name, {})[rec.pair_id] = rec.argmax(task)
    return out
