"""Persistent submission store, validation, ranking, and report rendering.

A submission is one (model, protocol, task, dataset) result row holding
scores on the reported x100 scale. The board persists as a single JSON file
with an integer storage version, written atomically (write-then-rename)
under an advisory lock; save -> load -> save is byte-identical.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from .core import TaskKind, task_metric_spec
from .errors import (
    DuplicateSubmission,
    EmptyBoard,
    SchemaError,
    ValidationError,
)

try:
    import fcntl
except ImportError:  # non-POSIX: locking degrades to best effort
    fcntl = None

STORAGE_VERSION = 1
MODEL_TYPES = ("SSL", "ASR", "SLU")
PROTOCOLS = ("lightweight", "complex", "fine-tuned")
SPLIT_KEYS = ("test", "dev")

# Datasets hosting each task; ASR exists on two and must name one.
TASK_DATASETS: dict[TaskKind, tuple[str, ...]] = {
    TaskKind.SA: ("voxceleb",),
    TaskKind.ASR: ("voxceleb", "voxpopuli"),
    TaskKind.NER: ("voxpopuli",),
    TaskKind.NEL: ("voxpopuli",),
    TaskKind.QA: ("sqa5",),
    TaskKind.SUMM: ("ted",),
    TaskKind.DAC: ("hvb",),
}


def default_dataset(task: TaskKind) -> str:
    options = TASK_DATASETS[task]
    if len(options) > 1:
        raise SchemaError(f"{task.value} spans {options}; name the dataset explicitly")
    return options[0]


@dataclass(frozen=True)
class Submission:
    model: str
    model_type: str
    protocol: str
    task: TaskKind
    dataset: str
    scores: dict[str, dict[str, float]]  # metric -> split -> value (x100 scale)
    params_millions: float | None = None
    submitted_at: str = ""
    run_ref: str | None = None
    external: dict[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.model, self.protocol, self.task.value, self.dataset)

    def score(self, metric: str, split: str = "test") -> float | None:
        return self.scores.get(metric, {}).get(split)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "model_type": self.model_type,
            "protocol": self.protocol,
            "task": self.task.value,
            "dataset": self.dataset,
            "scores": self.scores,
            "params_millions": self.params_millions,
            "submitted_at": self.submitted_at,
            "run_ref": self.run_ref,
            "external": self.external,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "Submission":
        return cls(
            model=doc["model"],
            model_type=doc["model_type"],
            protocol=doc["protocol"],
            task=TaskKind(doc["task"]),
            dataset=doc["dataset"],
            scores={m: dict(sv) for m, sv in doc["scores"].items()},
            params_millions=doc.get("params_millions"),
            submitted_at=doc.get("submitted_at", ""),
            run_ref=doc.get("run_ref"),
            external=dict(doc.get("external", {})),
        )


def validate_submission(sub: Submission) -> None:
    if sub.protocol not in PROTOCOLS:
        raise ValidationError(f"unknown protocol {sub.protocol!r}")
    if sub.model_type not in MODEL_TYPES:
        raise ValidationError(f"unknown model type {sub.model_type!r}")
    if sub.dataset not in TASK_DATASETS[sub.task]:
        raise ValidationError(
            f"dataset {sub.dataset!r} does not host task {sub.task.value}"
        )
    metric_names = {m.name: m for m in task_metric_spec(sub.task)}
    primary = task_metric_spec(sub.task)[0].name
    if primary not in sub.scores:
        raise ValidationError(f"primary metric {primary!r} missing")
    for name, by_split in sub.scores.items():
        if name not in metric_names:
            raise ValidationError(f"metric {name!r} not defined for {sub.task.value}")
        for split, value in by_split.items():
            if split not in SPLIT_KEYS:
                raise ValidationError(f"unknown split {split!r}")
            if name == "wer":
                if value < 0:
                    raise ValidationError(f"wer {value} < 0")
            elif not 0 <= value <= 100:
                raise ValidationError(f"{name} {value} outside [0, 100]")
    if sub.params_millions is not None and not sub.params_millions > 0:
        raise ValidationError(f"parameter count must be > 0, got {sub.params_millions}")


@dataclass(frozen=True)
class Board:
    submissions: tuple[Submission, ...] = ()
    version: int = STORAGE_VERSION


def submit(board: Board, sub: Submission, force: bool = False) -> Board:
    """Validate and append; an existing (model, protocol, task, dataset) row
    is replaced only when ``force`` is set."""
    validate_submission(sub)
    existing = [s for s in board.submissions if s.key == sub.key]
    if existing and not force:
        raise DuplicateSubmission(sub.key)
    kept = tuple(s for s in board.submissions if s.key != sub.key)
    return replace(board, submissions=kept + (sub,))


def rank(
    board: Board,
    task: TaskKind,
    protocol: str | None = None,
    dataset: str | None = None,
    metric: str | None = None,
    split: str = "test",
) -> list[Submission]:
    """Rows for a (task, protocol) slice, best first.

    Sorted by the chosen metric (default: the task's primary) respecting its
    direction; ties go to fewer trainable parameters, then earlier
    submission, then model name.
    """
    if dataset is None:
        dataset = default_dataset(task)
    specs = {m.name: m for m in task_metric_spec(task)}
    if metric is None:
        metric = task_metric_spec(task)[0].name
    if metric not in specs:
        raise SchemaError(f"metric {metric!r} not defined for {task.value}")
    higher = specs[metric].higher_is_better
    rows = [
        s
        for s in board.submissions
        if s.task is task
        and s.dataset == dataset
        and (protocol is None or s.protocol == protocol)
        and s.score(metric, split) is not None
    ]
    if not rows:
        raise EmptyBoard(
            f"no submissions for task={task.value} protocol={protocol} dataset={dataset}"
        )

    def sort_key(s: Submission):
        value = s.score(metric, split)
        params = s.params_millions if s.params_millions is not None else float("inf")
        return (-value if higher else value, params, s.submitted_at, s.model)

    return sorted(rows, key=sort_key)


def save_board(board: Board, path: str | Path) -> None:
    path = Path(path)
    doc = {
        "version": board.version,
        "submissions": [s.to_dict() for s in board.submissions],
    }
    payload = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    lock_path = path.with_suffix(path.suffix + ".lock")
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(lock_path, "w") as lock:
        if fcntl is not None:
            fcntl.flock(lock, fcntl.LOCK_EX)
        with open(tmp_path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp_path, path)


def load_board(path: str | Path) -> Board:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != STORAGE_VERSION:
        raise SchemaError(f"unsupported board version {doc.get('version')}")
    return Board(
        tuple(Submission.from_dict(row) for row in doc["submissions"]),
        doc["version"],
    )


# Rendered column layout, mirroring the benchmark's summary table: one cell
# per (dataset, task, metric), higher/lower direction arrows in the header.
REPORT_COLUMNS: tuple[tuple[str, TaskKind, str, str], ...] = (
    ("voxceleb", TaskKind.SA, "macro_f1", "VoxCeleb SA F1 ↑"),
    ("voxceleb", TaskKind.ASR, "wer", "VoxCeleb ASR WER ↓"),
    ("voxpopuli", TaskKind.NER, "label_f1", "VoxPopuli NER Label F1 ↑"),
    ("voxpopuli", TaskKind.NER, "f1", "VoxPopuli NER F1 ↑"),
    ("voxpopuli", TaskKind.ASR, "wer", "VoxPopuli ASR WER ↓"),
    ("voxpopuli", TaskKind.NEL, "frame_f1", "VoxPopuli NEL Frame F1 ↑"),
    ("sqa5", TaskKind.QA, "frame_f1", "SQA-5 QA Frame F1 ↑"),
    ("ted", TaskKind.SUMM, "rouge_l", "TED SUMM ROUGE-L ↑"),
    ("ted", TaskKind.SUMM, "bertscore", "TED SUMM BERTScore ↑"),
    ("hvb", TaskKind.DAC, "macro_f1", "HVB DAC F1 ↑"),
)

MISSING_CELL = "-"


def _report_rows(board: Board, split: str) -> list[dict[str, Any]]:
    by_key: dict[tuple[str, str, str, str], Submission] = {
        s.key: s for s in board.submissions
    }
    # Row identity is (protocol, model); order within a protocol follows the
    # earliest submission timestamp so a seeded board renders in seed order.
    order: dict[tuple[str, str], tuple[str, str]] = {}
    for s in board.submissions:
        row_id = (s.protocol, s.model)
        stamp = (s.submitted_at, s.model)
        if row_id not in order or stamp < order[row_id]:
            order[row_id] = stamp
    rows = []
    for protocol in PROTOCOLS:
        row_ids = sorted(
            (rid for rid in order if rid[0] == protocol), key=lambda rid: order[rid]
        )
        for _, model in row_ids:
            cells = []
            model_type = ""
            for dataset, task, metric, _ in REPORT_COLUMNS:
                sub = by_key.get((model, protocol, task.value, dataset))
                value = sub.score(metric, split) if sub else None
                if sub:
                    model_type = sub.model_type
                cells.append(MISSING_CELL if value is None else f"{value:.1f}")
            rows.append(
                {
                    "protocol": protocol,
                    "model": model,
                    "model_type": model_type,
                    "cells": cells,
                }
            )
    return rows


def render_report(board: Board, fmt: str = "markdown", split: str = "test") -> str:
    """Protocol x model grid over the canonical column layout.

    Deterministic: rendering the same board twice yields identical bytes.
    """
    if split not in SPLIT_KEYS:
        raise SchemaError(f"unknown split {split!r}")
    rows = _report_rows(board, split)
    headers = [h for _, _, _, h in REPORT_COLUMNS]
    if fmt == "json":
        doc = {"split": split, "columns": headers, "rows": rows}
        return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if fmt != "markdown":
        raise SchemaError(f"unknown report format {fmt!r}")
    head = ["Protocol", "Model", "Type", *headers]
    lines = [
        "| " + " | ".join(head) + " |",
        "| " + " | ".join("---" for _ in head) + " |",
    ]
    for row in rows:
        lines.append(
            "| "
            + " | ".join(
                [row["protocol"], row["model"], row["model_type"], *row["cells"]]
            )
            + " |"
        )
    return "\n".join(lines) + "\n"
