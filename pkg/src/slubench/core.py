"""Domain types, dataset manifests, and the task registry.

Manifests are line-oriented JSONL, one utterance per line:

    {"id": str, "duration": float, "split": "train|dev|test",
     "transcript": [str], "ref": <task payload>, "meta": {...}?}

Task payloads:

    sa    {"sentiment": "positive|negative|neutral"}
    dac   {"acts": [str]}
    ner   {"entities": [{"tag": str, "phrase": [str], "start": float?, "end": float?}]}
    nel   same as ner, but start/end required
    qa    {"answer": {"start": float, "end": float}}
    summ  {"summary": [str]}
    asr   {} (the transcript itself is the reference)

The optional ``meta`` object is
preserved verbatim (audio paths, truncation notes and similar upstream
decisions live there; the engine never decodes audio).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator, Sequence

from .errors import DuplicateId, ParseError, SchemaError


class TaskKind(enum.Enum):
    SA = "sa"
    NER = "ner"
    NEL = "nel"
    DAC = "dac"
    QA = "qa"
    SUMM = "summ"
    ASR = "asr"

    @classmethod
    def parse(cls, name: str) -> "TaskKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise SchemaError(f"unknown task {name!r}") from None


class SentimentLabel(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"


SPLITS = ("train", "dev", "test")

# Placeholder vocabularies. The benchmark names the counts (7 entity tags,
# 18 dialog acts) but not all members; real runs supply their own lists.
DEFAULT_NER_TAGS = ("ORG", "PER", "LOC", "GPE", "DATE", "LAW", "NORP")
DEFAULT_DIALOG_ACTS = tuple(f"act{i:02d}" for i in range(18))


@dataclass(frozen=True)
class TimeSpan:
    """Half-open [start, end) interval in seconds."""

    start: float
    end: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise SchemaError(f"non-finite time span ({self.start}, {self.end})")
        if self.start < 0:
            raise SchemaError(f"span start {self.start} < 0")
        if self.end <= self.start:
            raise SchemaError(f"span end {self.end} <= start {self.start}")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class EntityAnnotation:
    tag: str
    phrase: tuple[str, ...]
    span: TimeSpan | None = None

    def __post_init__(self):
        if not self.phrase:
            raise SchemaError("entity phrase must be non-empty")


@dataclass(frozen=True)
class Utterance:
    id: str
    duration: float
    transcript: tuple[str, ...]
    split: str
    ref: Any
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise SchemaError("utterance id must be non-empty")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise SchemaError(f"{self.id}: duration must be > 0, got {self.duration}")
        if self.split not in SPLITS:
            raise SchemaError(f"{self.id}: unknown split {self.split!r}")
        if any(not isinstance(t, str) or not t for t in self.transcript):
            raise SchemaError(f"{self.id}: transcript tokens must be non-empty strings")


@dataclass(frozen=True)
class Manifest:
    task: TaskKind
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for utt in self.utterances:
            if utt.id in seen:
                raise DuplicateId(utt.id)
            seen.add(utt.id)

    def split(self, name: str) -> tuple[Utterance, ...]:
        if name not in SPLITS:
            raise SchemaError(f"unknown split {name!r}")
        return tuple(u for u in self.utterances if u.split == name)

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)

    def __len__(self) -> int:
        return len(self.utterances)


@dataclass(frozen=True)
class MetricSpec:
    """One scoring function attached to a task.

    ``external`` marks scores the engine accepts but never computes
    (currently only BERTScore, which needs a pretrained text embedder).
    """

    name: str
    higher_is_better: bool
    external: bool = False


MACRO_F1 = MetricSpec("macro_f1", True)
LABEL_F1 = MetricSpec("label_f1", True)
F1 = MetricSpec("f1", True)
FRAME_F1 = MetricSpec("frame_f1", True)
ROUGE_L = MetricSpec("rouge_l", True)
BERTSCORE = MetricSpec("bertscore", True, external=True)
WER = MetricSpec("wer", False)

_TASK_METRICS: dict[TaskKind, tuple[MetricSpec, ...]] = {
    TaskKind.SA: (MACRO_F1,),
    TaskKind.NER: (LABEL_F1, F1),
    TaskKind.NEL: (FRAME_F1,),
    TaskKind.DAC: (MACRO_F1,),
    TaskKind.QA: (FRAME_F1,),
    TaskKind.SUMM: (ROUGE_L, BERTSCORE),
    TaskKind.ASR: (WER,),
}


def task_metric_spec(task: TaskKind) -> tuple[MetricSpec, ...]:
    """Metric descriptors for a task; the first one is the primary metric."""
    return _TASK_METRICS[task]


def _require(row: dict, key: str, line_no: int) -> Any:
    if key not in row:
        raise SchemaError(f"line {line_no}: missing field {key!r}")
    return row[key]


def _parse_tokens(value: Any, what: str, line_no: int) -> tuple[str, ...]:
    if not isinstance(value, list) or any(not isinstance(t, str) or not t for t in value):
        raise SchemaError(f"line {line_no}: {what} must be a list of non-empty strings")
    return tuple(value)


def _parse_span(obj: dict, line_no: int) -> TimeSpan:
    try:
        return TimeSpan(float(obj["start"]), float(obj["end"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"line {line_no}: bad time span: {exc}") from exc


def _parse_ref(
    payload: Any,
    task: TaskKind,
    line_no: int,
    tags: Sequence[str],
    acts: Sequence[str],
) -> Any:
    if not isinstance(payload, dict):
        raise SchemaError(f"line {line_no}: ref payload must be an object")
    if task is TaskKind.SA:
        try:
            return SentimentLabel(_require(payload, "sentiment", line_no))
        except ValueError:
            raise SchemaError(
                f"line {line_no}: unknown sentiment {payload.get('sentiment')!r}"
            ) from None
    if task is TaskKind.DAC:
        names = _require(payload, "acts", line_no)
        if not isinstance(names, list):
            raise SchemaError(f"line {line_no}: acts must be a list")
        ids = set()
        for name in names:
            if name not in acts:
                raise SchemaError(f"line {line_no}: unknown dialog act {name!r}")
            ids.add(acts.index(name))
        return frozenset(ids)
    if task in (TaskKind.NER, TaskKind.NEL):
        rows = _require(payload, "entities", line_no)
        if not isinstance(rows, list):
            raise SchemaError(f"line {line_no}: entities must be a list")
        entities = []
        for ent in rows:
            if not isinstance(ent, dict):
                raise SchemaError(f"line {line_no}: entity rows must be objects")
            tag = _require(ent, "tag", line_no)
            if tag not in tags:
                raise SchemaError(f"line {line_no}: unknown entity tag {tag!r}")
            phrase = _parse_tokens(_require(ent, "phrase", line_no), "phrase", line_no)
            span = None
            if "start" in ent or "end" in ent:
                span = _parse_span(ent, line_no)
            if task is TaskKind.NEL and span is None:
                raise SchemaError(f"line {line_no}: nel entities require start/end")
            entities.append(EntityAnnotation(tag, phrase, span))
        return tuple(entities)
    if task is TaskKind.QA:
        answer = _require(payload, "answer", line_no)
        if not isinstance(answer, dict):
            raise SchemaError(f"line {line_no}: answer must be an object")
        return _parse_span(answer, line_no)
    if task is TaskKind.SUMM:
        return _parse_tokens(_require(payload, "summary", line_no), "summary", line_no)
    if task is TaskKind.ASR:
        return None
    raise SchemaError(f"line {line_no}: unsupported task {task}")


def load_manifest(
    path: str | Path,
    task: TaskKind,
    *,
    tags: Sequence[str] = DEFAULT_NER_TAGS,
    acts: Sequence[str] = DEFAULT_DIALOG_ACTS,
) -> Manifest:
    """Load and validate a JSONL manifest for ``task``.

    Raises ParseError for unparseable lines, SchemaError when a payload does
    not match the task, DuplicateId on repeated utterance ids.
    """
    utterances = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(row, dict):
                raise ParseError(line_no, "row must be a JSON object")
            utt_id = _require(row, "id", line_no)
            if not isinstance(utt_id, str):
                raise SchemaError(f"line {line_no}: id must be a string")
            duration = _require(row, "duration", line_no)
            if not isinstance(duration, (int, float)):
                raise SchemaError(f"line {line_no}: duration must be a number")
            split = _require(row, "split", line_no)
            transcript = _parse_tokens(
                _require(row, "transcript", line_no), "transcript", line_no
            )
            ref = _parse_ref(
                row.get("ref", {}), task, line_no, tuple(tags), tuple(acts)
            )
            meta = row.get("meta", {})
            if not isinstance(meta, dict):
                raise SchemaError(f"line {line_no}: meta must be an object")
            utterances.append(
                Utterance(utt_id, float(duration), transcript, split, ref, meta)
            )
    return Manifest(task, tuple(utterances))


def _ref_to_json(ref: Any, task: TaskKind, acts: Sequence[str]) -> dict:
    if task is TaskKind.SA:
        return {"sentiment": ref.value}
    if task is TaskKind.DAC:
        return {"acts": [acts[i] for i in sorted(ref)]}
    if task in (TaskKind.NER, TaskKind.NEL):
        rows = []
        for ent in ref:
            row: dict[str, Any] = {"tag": ent.tag, "phrase": list(ent.phrase)}
            if ent.span is not None:
                row["start"] = ent.span.start
                row["end"] = ent.span.end
            rows.append(row)
        return {"entities": rows}
    if task is TaskKind.QA:
        return {"answer": {"start": ref.start, "end": ref.end}}
    if task is TaskKind.SUMM:
        return {"summary": list(ref)}
    return {}


def save_manifest(
    manifest: Manifest,
    path: str | Path,
    *,
    acts: Sequence[str] = DEFAULT_DIALOG_ACTS,
) -> None:
    """Write a manifest back out as JSONL; load(save(m)) == m."""
    with open(path, "w", encoding="utf-8") as fh:
        for utt in manifest:
            row: dict[str, Any] = {
                "id": utt.id,
                "duration": utt.duration,
                "split": utt.split,
                "transcript": list(utt.transcript),
                "ref": _ref_to_json(utt.ref, manifest.task, acts),
            }
            if utt.meta:
                row["meta"] = utt.meta
            fh.write(json.dumps(row, sort_keys=True) + "\n")
