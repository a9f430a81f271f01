"""Domain types and on-disk formats.

Every other module consumes the records defined here. Loaders validate
as they read and raise :class:`CorpusError` carrying the file, line number
and record id of the first offending record.

Formats (UTF-8, one JSON object per line unless noted):

* pairs.jsonl       ``{"id", "group_id"?, "text_a", "text_b", "label"?, "provenance"?}``
* pairs.tsv         ``id  group_id  text_a  text_b  label`` (optional header row)
* preds.jsonl       ``{"pair_id", "model_name", "probs": {label: float}}``
* gazetteer.tsv     ``ABBR  EXPANSION``, no header
* annotations.jsonl ``{"pair_id", "side", "span_start", "span_end", "surface",
  "canonical_name", "concept_type"}``
* answers.jsonl     ``{"question_id", "answer_id", "text", "source", "relevance"?,
  "rank_hint"?}``
* labels.jsonl      ``{"pair_id", "label", "model_name"?}``
"""

from __future__ import annotations

import csv
import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from medtext._io import atomic_write_text, dumps_jsonl, read_lines

SIMPLEX_TOL = 1e-6

TSV_COLUMNS = ("id", "group_id", "text_a", "text_b", "label")


class CorpusError(ValueError):
    """A record or file failed validation."""

    def __init__(self, message: str, *, path: str | Path | None = None,
                 line: int | None = None, record_id: str | None = None):
        self.message = message
        self.path = str(path) if path is not None else None
        self.line = line
        self.record_id = record_id
        where = ""
        if self.path is not None:
            where = self.path + (f":{line}" if line is not None else "") + ": "
        elif line is not None:
            where = f"line {line}: "
        rid = f" [record {record_id!r}]" if record_id is not None else ""
        super().__init__(f"{where}{message}{rid}")


class TaskKind(str, enum.Enum):
    NLI = "nli"
    RQE = "rqe"

    @property
    def labels(self) -> tuple[str, ...]:
        """Canonical label order; also the argmax tie-break order."""
        if self is TaskKind.NLI:
            return ("entailment", "neutral", "contradiction")
        return ("true", "false")

    @classmethod
    def parse(cls, value: str | TaskKind) -> TaskKind:
        if isinstance(value, TaskKind):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown task {value!r}; expected 'nli' or 'rqe'") from None

    def normalize_label(self, raw: Any) -> str:
        """Map a raw label (``True``, ``"Entailment"``...) onto the task's label set."""
        if isinstance(raw, bool):
            raw = "true" if raw else "false"
        if not isinstance(raw, str):
            raise ValueError(f"unknown label {raw!r} for task {self.value}")
        label = raw.strip().lower()
        if label not in self.labels:
            raise ValueError(f"unknown label {raw!r} for task {self.value}")
        return label


class Provenance(str, enum.Enum):
    ORIGINAL = "original"
    UMLS_AUGMENTED = "umls_augmented"
    PARAPHRASE = "paraphrase"
    QQP = "qqp"


@dataclass(frozen=True)
class LabeledSentencePair:
    """A premise/hypothesis (NLI) or CHQ/FAQ (RQE) pair."""

    id: str
    text_a: str
    text_b: str
    label: str | None = None
    group_id: str | None = None
    provenance: Provenance = Provenance.ORIGINAL

    def validate(self, task: TaskKind) -> None:
        if not self.id:
            raise ValueError("empty id")
        if not self.text_a.strip():
            raise ValueError("text_a is empty")
        if not self.text_b.strip():
            raise ValueError("text_b is empty")
        if self.label is not None and self.label not in task.labels:
            raise ValueError(f"unknown label {self.label!r} for task {task.value}")

    def text(self, side: str) -> str:
        if side == "a":
            return self.text_a
        if side == "b":
            return self.text_b
        raise ValueError(f"side must be 'a' or 'b', got {side!r}")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id}
        if self.group_id is not None:
            d["group_id"] = self.group_id
        d["text_a"] = self.text_a
        d["text_b"] = self.text_b
        if self.label is not None:
            d["label"] = self.label
        d["provenance"] = self.provenance.value
        return d


@dataclass(frozen=True)
class PredictionRecord:
    pair_id: str
    model_name: str
    probs: Mapping[str, float]

    def argmax(self, task: TaskKind) -> str:
        """Most probable label; ties go to the earlier label in ``task.labels``."""
        return max(task.labels, key=lambda lab: (self.probs[lab], -task.labels.index(lab)))

    def to_dict(self) -> dict[str, Any]:
        return {"pair_id": self.pair_id, "model_name": self.model_name, "probs": dict(self.probs)}


@dataclass(frozen=True)
class Gazetteer:
    """Ordered multimap abbreviation -> expansions, file order preserved."""

    entries: tuple[tuple[str, str], ...] = ()
    _index: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        index: dict[str, str] = {}
        for abbr, expansion in self.entries:
            if not abbr:
                raise ValueError("empty abbreviation")
            index.setdefault(abbr.upper(), expansion)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, token: str) -> str | None:
        """First expansion in file order for ``token`` (compared uppercased)."""
        return self._index.get(token.upper())

    def expansions(self, abbreviation: str) -> list[str]:
        key = abbreviation.upper()
        return [exp for abbr, exp in self.entries if abbr.upper() == key]


@dataclass(frozen=True)
class ConceptAnnotation:
    """A concept span found in one side of a pair.

    Offsets are half-open and count Unicode code points, not bytes.
    """

    pair_id: str
    side: str
    span_start: int
    span_end: int
    surface: str
    canonical_name: str
    concept_type: str

    def validate(self) -> None:
        if self.side not in ("a", "b"):
            raise ValueError(f"side must be 'a' or 'b', got {self.side!r}")
        if not (0 <= self.span_start < self.span_end):
            raise ValueError(f"span out of bounds: [{self.span_start}, {self.span_end})")
        if len(self.surface) != self.span_end - self.span_start:
            raise ValueError(
                f"surface mismatch: {self.surface!r} has length {len(self.surface)}, "
                f"span has length {self.span_end - self.span_start}")
        if not self.canonical_name or not self.concept_type:
            raise ValueError("canonical_name and concept_type must be non-empty")

    def check_against(self, text: str) -> None:
        if self.span_end > len(text):
            raise ValueError(
                f"span out of bounds: end {self.span_end} exceeds text length {len(text)}")
        found = text[self.span_start:self.span_end]
        if found != self.surface:
            raise ValueError(f"surface mismatch: expected {self.surface!r}, text has {found!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "side": self.side,
            "span_start": self.span_start,
            "span_end": self.span_end,
            "surface": self.surface,
            "canonical_name": self.canonical_name,
            "concept_type": self.concept_type,
        }


@dataclass(frozen=True)
class AnswerCandidate:
    question_id: str
    answer_id: str
    text: str
    source: str
    relevance: bool | None = None
    rank_hint: int | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "question_id": self.question_id,
            "answer_id": self.answer_id,
            "text": self.text,
            "source": self.source,
        }
        if self.relevance is not None:
            d["relevance"] = self.relevance
        if self.rank_hint is not None:
            d["rank_hint"] = self.rank_hint
        return d


@dataclass(frozen=True)
class RankingDatasetStats:
    question_count: int
    avg_answer_count: float
    avg_answer_length: float


# ---------------------------------------------------------------------------
# helpers


def _parse_json_line(path: Path, lineno: int, line: str) -> dict[str, Any]:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusError(f"parse error: {e.msg}", path=path, line=lineno) from e
    if not isinstance(obj, dict):
        raise CorpusError("parse error: expected a JSON object", path=path, line=lineno)
    return obj


def _require(obj: Mapping[str, Any], key: str, kind: type | tuple[type, ...],
             path: Path, lineno: int, record_id: str | None = None) -> Any:
    if key not in obj:
        raise CorpusError(f"missing field {key!r}", path=path, line=lineno, record_id=record_id)
    value = obj[key]
    if not isinstance(value, kind) or (kind is int and isinstance(value, bool)):
        raise CorpusError(f"field {key!r} has wrong type {type(value).__name__}",
                          path=path, line=lineno, record_id=record_id)
    return value


def _optional_str(obj: Mapping[str, Any], key: str, path: Path, lineno: int,
                  record_id: str | None) -> str | None:
    value = obj.get(key)
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise CorpusError(f"field {key!r} must be a string", path=path, line=lineno,
                          record_id=record_id)
    return value


def _json_lines(path: Path) -> Iterable[tuple[int, dict[str, Any]]]:
    try:
        for lineno, line in read_lines(path):
            if not line.strip():
                continue
            yield lineno, _parse_json_line(path, lineno, line)
    except UnicodeDecodeError as e:
        raise CorpusError(f"invalid UTF-8: {e.reason}", path=path) from e


# ---------------------------------------------------------------------------
# pairs


def _make_pair(raw: Mapping[str, Any], task: TaskKind, path: Path, lineno: int,
               provenance_default: Provenance = Provenance.ORIGINAL) -> LabeledSentencePair:
    pid = _require(raw, "id", str, path, lineno)
    text_a = _require(raw, "text_a", str, path, lineno, pid)
    text_b = _require(raw, "text_b", str, path, lineno, pid)
    group_id = _optional_str(raw, "group_id", path, lineno, pid)
    label = None
    if raw.get("label") not in (None, ""):
        try:
            label = task.normalize_label(raw["label"])
        except ValueError as e:
            raise CorpusError(str(e), path=path, line=lineno, record_id=pid) from None
    prov_raw = raw.get("provenance")
    try:
        provenance = Provenance(prov_raw) if prov_raw else provenance_default
    except ValueError:
        raise CorpusError(f"unknown provenance {prov_raw!r}", path=path, line=lineno,
                          record_id=pid) from None
    pair = LabeledSentencePair(id=pid, text_a=text_a, text_b=text_b, label=label,
                               group_id=group_id, provenance=provenance)
    try:
        pair.validate(task)
    except ValueError as e:
        raise CorpusError(str(e), path=path, line=lineno, record_id=pid) from None
    return pair


def _tsv_rows(path: Path) -> Iterable[tuple[int, dict[str, Any]]]:
    try:
        lines = list(read_lines(path))
    except UnicodeDecodeError as e:
        raise CorpusError(f"invalid UTF-8: {e.reason}", path=path) from e
    first = True
    for lineno, line in lines:
        if not line.strip():
            continue
        cols = next(csv.reader([line], delimiter="\t", quoting=csv.QUOTE_NONE))
        if first and tuple(c.strip().lower() for c in cols) == TSV_COLUMNS:
            first = False
            continue
        first = False
        if len(cols) == 4:
            cols.append("")
        if len(cols) != 5:
            raise CorpusError(f"parse error: expected 5 tab-separated columns, got {len(cols)}",
                              path=path, line=lineno)
        yield lineno, dict(zip(TSV_COLUMNS, cols))


def load_pairs(path: str | Path, task: TaskKind | str,
               format: str | None = None) -> tuple[LabeledSentencePair, ...]:
    """Load a pair dataset, validating every record.

    ``format`` is ``"jsonl"`` or ``"tsv"``; when omitted it is inferred from
    the file suffix. Record order is preserved and ids must be unique.
    """
    path = Path(path)
    task = TaskKind.parse(task)
    if format is None:
        format = "tsv" if path.suffix.lower() == ".tsv" else "jsonl"
    if format == "jsonl":
        rows = _json_lines(path)
    elif format == "tsv":
        rows = _tsv_rows(path)
    else:
        raise ValueError(f"unknown pairs format {format!r}")

    pairs = []
    seen: set[str] = set()
    for lineno, raw in rows:
        pair = _make_pair(raw, task, path, lineno)
        if pair.id in seen:
            raise CorpusError("duplicate id", path=path, line=lineno, record_id=pair.id)
        seen.add(pair.id)
        pairs.append(pair)
    return tuple(pairs)


def save_pairs(path: str | Path, pairs: Iterable[LabeledSentencePair],
               format: str | None = None) -> None:
    path = Path(path)
    if format is None:
        format = "tsv" if path.suffix.lower() == ".tsv" else "jsonl"
    if format == "jsonl":
        atomic_write_text(path, dumps_jsonl(p.to_dict() for p in pairs))
        return
    if format != "tsv":
        raise ValueError(f"unknown pairs format {format!r}")
    lines = []
    for p in pairs:
        cols = [p.id, p.group_id or "", p.text_a, p.text_b, p.label or ""]
        if any("\t" in c or "\n" in c or "\r" in c for c in cols):
            raise ValueError(f"record {p.id!r} contains a tab or newline; use jsonl")
        lines.append("\t".join(cols) + "\n")
    atomic_write_text(path, "".join(lines))


def label_counts(pairs: Iterable[LabeledSentencePair]) -> dict[str, int]:
    counts: dict[str, int] = defaultdict(int)
    for p in pairs:
        if p.label is not None:
            counts[p.label] += 1
    return dict(counts)


def load_qqp(path: str | Path) -> tuple[LabeledSentencePair, ...]:
    """Read the public Quora Question Pairs TSV as RQE pairs.

    Expects the header ``id qid1 qid2 question1 question2 is_duplicate``;
    ``is_duplicate == 1`` maps to ``true``. Rows with an empty question are
    skipped (the public dump has a handful).
    """
    path = Path(path)
    pairs = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        need = {"id", "question1", "question2", "is_duplicate"}
        if reader.fieldnames is None:
            return ()
        if not need <= set(reader.fieldnames):
            raise CorpusError(f"QQP header must contain {sorted(need)}", path=path, line=1)
        for row in reader:
            q1, q2 = (row.get("question1") or "").strip(), (row.get("question2") or "").strip()
            if not q1 or not q2:
                continue
            flag = (row.get("is_duplicate") or "").strip()
            if flag not in ("0", "1"):
                raise CorpusError(f"is_duplicate must be 0 or 1, got {flag!r}", path=path,
                                  line=reader.line_num, record_id=row["id"])
            pairs.append(LabeledSentencePair(
                id=f"qqp-{row['id']}", text_a=q1, text_b=q2,
                label="true" if flag == "1" else "false", provenance=Provenance.QQP))
    return tuple(pairs)


# ---------------------------------------------------------------------------
# predictions and labels


def load_predictions(path: str | Path, task: TaskKind | str) -> list[PredictionRecord]:
    """Load model probability dumps.

    Each ``probs`` map must cover exactly the task's labels with values in
    [0, 1] summing to 1 within ``SIMPLEX_TOL``; accepted vectors are
    renormalized to remove float noise.
    """
    path = Path(path)
    task = TaskKind.parse(task)
    wanted = set(task.labels)
    records = []
    seen: set[tuple[str, str]] = set()
    for lineno, raw in _json_lines(path):
        pair_id = _require(raw, "pair_id", str, path, lineno)
        model = _require(raw, "model_name", str, path, lineno, pair_id)
        probs_raw = _require(raw, "probs", dict, path, lineno, pair_id)
        probs = {str(k).strip().lower(): v for k, v in probs_raw.items()}
        if set(probs) != wanted or len(probs) != len(probs_raw):
            raise CorpusError(
                f"label set mismatch: got {sorted(probs_raw)}, expected {sorted(wanted)}",
                path=path, line=lineno, record_id=pair_id)
        try:
            probs = normalize_simplex(probs, task)
        except ValueError as e:
            raise CorpusError(str(e), path=path, line=lineno, record_id=pair_id) from None
        key = (pair_id, model)
        if key in seen:
            raise CorpusError(f"duplicate (pair_id, model_name) for model {model!r}",
                              path=path, line=lineno, record_id=pair_id)
        seen.add(key)
        records.append(PredictionRecord(pair_id=pair_id, model_name=model, probs=probs))
    return records


def normalize_simplex(probs: Mapping[str, Any], task: TaskKind) -> dict[str, float]:
    """Validate a probability map and renormalize it onto the simplex."""
    out = {}
    for lab in task.labels:
        v = probs[lab]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValueError(f"probability for {lab!r} is not a finite number: {v!r}")
        if v < 0.0 or v > 1.0:
            raise ValueError(f"probability for {lab!r} outside [0, 1]: {v}")
        out[lab] = float(v)
    total = math.fsum(out.values())
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"simplex violation: probabilities sum to {total:.9g}")
    return {lab: v / total for lab, v in out.items()}


def save_predictions(path: str | Path, records: Iterable[PredictionRecord]) -> None:
    atomic_write_text(path, dumps_jsonl(r.to_dict() for r in records))


def load_labels(path: str | Path, task: TaskKind | str) -> dict[str, str]:
    """Read ``pair_id -> label`` from a labels file or a labelled pairs file.

    Lines may carry ``pair_id`` (labels.jsonl) or ``id`` (pairs.jsonl).
    """
    path = Path(path)
    task = TaskKind.parse(task)
    out: dict[str, str] = {}
    for lineno, raw in _json_lines(path):
        key = "pair_id" if "pair_id" in raw else "id"
        pid = _require(raw, key, str, path, lineno)
        if raw.get("label") in (None, ""):
            raise CorpusError("missing label", path=path, line=lineno, record_id=pid)
        try:
            label = task.normalize_label(raw["label"])
        except ValueError as e:
            raise CorpusError(str(e), path=path, line=lineno, record_id=pid) from None
        if pid in out:
            raise CorpusError("duplicate pair_id", path=path, line=lineno, record_id=pid)
        out[pid] = label
    return out


def save_labels(path: str | Path, labels: Mapping[str, str], model_name: str | None = None) -> None:
    rows = []
    for pid, lab in labels.items():
        row = {"pair_id": pid, "label": lab}
        if model_name is not None:
            row["model_name"] = model_name
        rows.append(row)
    atomic_write_text(path, dumps_jsonl(rows))


# ---------------------------------------------------------------------------
# gazetteer


def load_gazetteer(path: str | Path) -> Gazetteer:
    path = Path(path)
    entries = []
    try:
        for lineno, line in read_lines(path):
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise CorpusError(f"malformed line: expected 2 tab-separated columns, got {len(cols)}",
                                  path=path, line=lineno)
            abbr, expansion = cols[0].strip(), cols[1].strip()
            if not abbr:
                raise CorpusError("empty abbreviation", path=path, line=lineno)
            if not expansion:
                raise CorpusError("empty expansion", path=path, line=lineno, record_id=abbr)
            entries.append((abbr, expansion))
    except UnicodeDecodeError as e:
        raise CorpusError(f"invalid UTF-8: {e.reason}", path=path) from e
    return Gazetteer(tuple(entries))


def save_gazetteer(path: str | Path, gz: Gazetteer) -> None:
    atomic_write_text(path, "".join(f"{a}\t{e}\n" for a, e in gz.entries))


# ---------------------------------------------------------------------------
# annotations


def check_annotations(annotations: Sequence[ConceptAnnotation],
                      pairs: Iterable[LabeledSentencePair] | None = None) -> None:
    """Raise ``ValueError`` on overlap, or on bounds/surface errors when ``pairs`` is given."""
    by_side: dict[tuple[str, str], list[ConceptAnnotation]] = defaultdict(list)
    for ann in annotations:
        ann.validate()
        by_side[(ann.pair_id, ann.side)].append(ann)
    for (pid, side), anns in by_side.items():
        anns = sorted(anns, key=lambda a: (a.span_start, a.span_end))
        for prev, cur in zip(anns, anns[1:]):
            if cur.span_start < prev.span_end:
                raise ValueError(
                    f"overlapping spans on pair {pid!r} side {side}: "
                    f"[{prev.span_start}, {prev.span_end}) and [{cur.span_start}, {cur.span_end})")
    if pairs is None:
        return
    texts = {p.id: p for p in pairs}
    for ann in annotations:
        pair = texts.get(ann.pair_id)
        if pair is None:
            raise ValueError(f"annotation references unknown pair {ann.pair_id!r}")
        ann.check_against(pair.text(ann.side))


def load_annotations(path: str | Path,
                     pairs: Iterable[LabeledSentencePair] | None = None) -> list[ConceptAnnotation]:
    """Load precomputed concept annotations.

    With ``pairs`` given, each span is also cross-checked against the text it
    points into (bounds and surface string).
    """
    path = Path(path)
    pair_index = {p.id: p for p in pairs} if pairs is not None else None
    out: list[ConceptAnnotation] = []
    spans: dict[tuple[str, str], list[tuple[int, int, int]]] = defaultdict(list)
    for lineno, raw in _json_lines(path):
        pid = _require(raw, "pair_id", str, path, lineno)
        ann = ConceptAnnotation(
            pair_id=pid,
            side=_require(raw, "side", str, path, lineno, pid),
            span_start=_require(raw, "span_start", int, path, lineno, pid),
            span_end=_require(raw, "span_end", int, path, lineno, pid),
            surface=_require(raw, "surface", str, path, lineno, pid),
            canonical_name=_require(raw, "canonical_name", str, path, lineno, pid),
            concept_type=_require(raw, "concept_type", str, path, lineno, pid),
        )
        try:
            ann.validate()
            if pair_index is not None:
                pair = pair_index.get(pid)
                if pair is None:
                    raise ValueError(f"annotation references unknown pair {pid!r}")
                ann.check_against(pair.text(ann.side))
        except ValueError as e:
            raise CorpusError(str(e), path=path, line=lineno, record_id=pid) from None
        for start, end, other_line in spans[(pid, ann.side)]:
            if ann.span_start < end and start < ann.span_end:
                raise CorpusError(
                    f"overlapping spans on side {ann.side}: [{start}, {end}) (line {other_line}) "
                    f"and [{ann.span_start}, {ann.span_end})",
                    path=path, line=lineno, record_id=pid)
        spans[(pid, ann.side)].append((ann.span_start, ann.span_end, lineno))
        out.append(ann)
    return out


def save_annotations(path: str | Path, annotations: Iterable[ConceptAnnotation]) -> None:
    atomic_write_text(path, dumps_jsonl(a.to_dict() for a in annotations))


# ---------------------------------------------------------------------------
# answers


def load_answers(path: str | Path) -> tuple[AnswerCandidate, ...]:
    path = Path(path)
    out = []
    seen: set[tuple[str, str]] = set()
    for lineno, raw in _json_lines(path):
        qid = _require(raw, "question_id", str, path, lineno)
        aid = _require(raw, "answer_id", str, path, lineno, qid)
        rid = f"{qid}/{aid}"
        text = _require(raw, "text", str, path, lineno, rid)
        source = _require(raw, "source", str, path, lineno, rid)
        relevance = raw.get("relevance")
        if relevance is not None and not isinstance(relevance, bool):
            raise CorpusError("field 'relevance' must be a boolean", path=path, line=lineno,
                              record_id=rid)
        rank_hint = raw.get("rank_hint")
        if rank_hint is not None and (isinstance(rank_hint, bool) or not isinstance(rank_hint, int)):
            raise CorpusError("field 'rank_hint' must be an integer", path=path, line=lineno,
                              record_id=rid)
        if (qid, aid) in seen:
            raise CorpusError("duplicate (question_id, answer_id)", path=path, line=lineno,
                              record_id=rid)
        seen.add((qid, aid))
        out.append(AnswerCandidate(qid, aid, text, source, relevance, rank_hint))
    return tuple(out)


def save_answers(path: str | Path, answers: Iterable[AnswerCandidate]) -> None:
    atomic_write_text(path, dumps_jsonl(a.to_dict() for a in answers))


def load_questions(path: str | Path) -> dict[str, str]:
    """Read ``question_id -> text`` from ``{"question_id", "text"}`` lines."""
    path = Path(path)
    out: dict[str, str] = {}
    for lineno, raw in _json_lines(path):
        qid = _require(raw, "question_id", str, path, lineno)
        text = _require(raw, "text", str, path, lineno, qid)
        if qid in out:
            raise CorpusError("duplicate question_id", path=path, line=lineno, record_id=qid)
        out[qid] = text
    return out


def dataset_stats(answers: Iterable[AnswerCandidate]) -> RankingDatasetStats:
    """Question count, mean answers per question and mean answer length in tokens."""
    from medtext.preprocess import tokenize

    answers = list(answers)
    if not answers:
        return RankingDatasetStats(0, 0.0, 0.0)
    questions = {a.question_id for a in answers}
    lengths = [len(tokenize(a.text)) for a in answers]
    return RankingDatasetStats(
        question_count=len(questions),
        avg_answer_count=len(answers) / len(questions),
        avg_answer_length=sum(lengths) / len(lengths),
    )
