"""Premise-group prior for NLI predictions.

Each premise in the data comes with three hypotheses carrying one label
each. Given per-hypothesis probabilities, assign entailment to the most
entailed hypothesis, contradiction to the more contradicted of the other
two, and neutral to the last.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from medtext.corpus import LabeledSentencePair, PredictionRecord, TaskKind

GREEDY_ORDER = ("entailment", "contradiction", "neutral")
GROUP_SIZE = 3


class GroupingError(ValueError):
    pass


@dataclass(frozen=True)
class PremiseGroup:
    group_id: str
    members: tuple[tuple[str, Mapping[str, float]], ...]

    def __post_init__(self) -> None:
        if len(self.members) != GROUP_SIZE:
            raise GroupingError(
                f"group size ≠ 3: group {self.group_id!r} has {len(self.members)} members")
        ids = [pid for pid, _ in self.members]
        if len(set(ids)) != len(ids):
            raise GroupingError(f"group {self.group_id!r} repeats a pair id")
        for pid, probs in self.members:
            if set(probs) != set(TaskKind.NLI.labels):
                raise GroupingError(f"pair {pid!r} lacks a full NLI probability vector")


@dataclass
class ConstrainReport:
    """What happened to each group; malformed groups fell back to argmax."""

    groups: int = 0
    constrained: int = 0
    changed_labels: int = 0
    malformed: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "groups": self.groups,
            "constrained": self.constrained,
            "changed_labels": self.changed_labels,
            "malformed": self.malformed,
        }


def _collect(preds: Iterable[PredictionRecord],
             pairs: Iterable[LabeledSentencePair]) -> dict[str, list[tuple[str, Mapping[str, float]]]]:
    pairs = list(pairs)
    preds = list(preds)
    models = {p.model_name for p in preds}
    if len(models) > 1:
        raise GroupingError(f"predictions from several models {sorted(models)}; constrain one at a time")
    by_id: dict[str, Mapping[str, float]] = {}
    for rec in preds:
        if rec.pair_id in by_id:
            raise GroupingError(f"duplicate prediction for pair {rec.pair_id!r}")
        by_id[rec.pair_id] = rec.probs
    known = {p.id for p in pairs}
    stray = [pid for pid in by_id if pid not in known]
    if stray:
        raise GroupingError(f"prediction for unknown pair {stray[0]!r}")

    groups: dict[str, list[tuple[str, Mapping[str, float]]]] = defaultdict(list)
    for pair in pairs:
        if pair.group_id is None:
            raise GroupingError(f"missing group_id for pair {pair.id!r}")
        if pair.id not in by_id:
            raise GroupingError(f"missing prediction for pair {pair.id!r}")
        groups[pair.group_id].append((pair.id, by_id[pair.id]))
    return groups


def group_by_premise(preds: Iterable[PredictionRecord],
                     pairs: Iterable[LabeledSentencePair]) -> list[PremiseGroup]:
    """Group one model's predictions by premise; every group must have exactly 3 members."""
    return [PremiseGroup(gid, tuple(members)) for gid, members in _collect(preds, pairs).items()]


def _pick(members: Sequence[tuple[str, Mapping[str, float]]], label: str) -> str:
    return min(members, key=lambda m: (-m[1][label], m[0]))[0]


def apply_prior(group: PremiseGroup) -> dict[str, str]:
    """Greedy one-of-each assignment; ties go to the smallest pair id."""
    remaining = list(group.members)
    out: dict[str, str] = {}
    for label in GREEDY_ORDER:
        chosen = _pick(remaining, label)
        out[chosen] = label
        remaining = [m for m in remaining if m[0] != chosen]
    return out


def constrain_predictions(preds: Iterable[PredictionRecord],
                          pairs: Iterable[LabeledSentencePair],
                          ) -> tuple[dict[str, str], ConstrainReport]:
    """Apply the prior to every well-formed group.

    Groups without exactly three members keep their per-pair argmax labels
    and are listed in the report. Output follows the pair order of ``pairs``.
    """
    pairs = list(pairs)
    groups = _collect(preds, pairs)
    report = ConstrainReport(groups=len(groups))
    assigned: dict[str, str] = {}
    for gid, members in groups.items():
        argmax = {pid: PredictionRecord(pid, "", probs).argmax(TaskKind.NLI) for pid, probs in members}
        if len(members) != GROUP_SIZE:
            report.malformed.append({"group_id": gid, "size": len(members),
                                     "pair_ids": [pid for pid, _ in members]})
            assigned.update(argmax)
            continue
        labels = apply_prior(PremiseGroup(gid, tuple(members)))
        report.constrained += 1
        report.changed_labels += sum(labels[pid] != argmax[pid] for pid in labels)
        assigned.update(labels)
    return {p.id: assigned[p.id] for p in pairs}, report
