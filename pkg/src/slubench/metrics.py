"""Scoring functions: WER, macro-F1, NER F1 and label-F1, frame-F1 with
offset tuning, multi-label DAC F1, and ROUGE-L.

All F1-family values are ratios in [0, 1]; reports format them x100 with one
decimal. Corpus-level scores micro-accumulate counts (sums of TP/FP/FN or
edit counts), so utterances may be scored in any order. The 0/0 convention
is 0 everywhere, recorded in each report's support counts.
"""

from __future__ import annotations

import json
import math
import string
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .core import TimeSpan
from .errors import (
    EmptyDevSet,
    EmptyReference,
    SchemaError,
    UnknownClass,
)

_PUNCT = set(string.punctuation)


@dataclass(frozen=True)
class ScoreReport:
    """One metric value plus the counts it was computed from."""

    metric: str
    value: float
    support: dict[str, Any] = field(default_factory=dict)
    per_utterance: dict[str, float] = field(default_factory=dict)
    notes: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "metric": self.metric,
            "value": self.value,
            "support": self.support,
            "per_utterance": self.per_utterance,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def formatted(self) -> str:
        """Value x100 with one decimal, the presentation used in reports."""
        return f"{self.value * 100:.1f}"


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _prf(tp: float, fp: float, fn: float) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    return precision, recall, _f1(precision, recall)


def _ids_or_indices(ids, n: int) -> list[str]:
    if ids is None:
        return [str(i) for i in range(n)]
    ids = list(ids)
    if len(ids) != n:
        raise SchemaError(f"{len(ids)} ids for {n} utterances")
    return [str(i) for i in ids]


def wer(hyp: Sequence[str], ref: Sequence[str]) -> ScoreReport:
    """Word error rate: minimal (S + D + I) / |ref| by edit-distance DP."""
    if len(ref) == 0:
        raise EmptyReference("WER reference must be non-empty")
    n, m = len(hyp), len(ref)
    # dist[i][j] = minimal edits aligning hyp[:i] to ref[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1])
            dele = dist[i][j - 1] + 1  # ref word missing from hyp
            ins = dist[i - 1][j] + 1  # extra hyp word
            dist[i][j] = min(sub, dele, ins)
    # Backtrace, preferring match/substitution, then deletion, then insertion.
    subs = dels = inss = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i][j] == dist[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            subs += hyp[i - 1] != ref[j - 1]
            i, j = i - 1, j - 1
        elif j > 0 and dist[i][j] == dist[i][j - 1] + 1:
            dels += 1
            j -= 1
        else:
            inss += 1
            i -= 1
    edits = subs + dels + inss
    return ScoreReport(
        "wer",
        edits / m,
        support={"sub": subs, "del": dels, "ins": inss, "edits": edits, "ref_len": m},
    )


def macro_f1(
    hyp_labels: Sequence[Any],
    ref_labels: Sequence[Any],
    classes: Sequence[Any],
    ids: Sequence[str] | None = None,
) -> ScoreReport:
    """Unweighted mean of per-class one-vs-rest F1 over all configured classes."""
    if len(hyp_labels) != len(ref_labels):
        raise SchemaError("hyp/ref length mismatch")
    class_list = list(classes)
    class_set = set(class_list)
    for lab in list(hyp_labels) + list(ref_labels):
        if lab not in class_set:
            raise UnknownClass(f"label {lab!r} not in configured classes")
    per_class = {}
    total = 0.0
    for cls in class_list:
        tp = sum(1 for h, r in zip(hyp_labels, ref_labels) if h == cls and r == cls)
        fp = sum(1 for h, r in zip(hyp_labels, ref_labels) if h == cls and r != cls)
        fn = sum(1 for h, r in zip(hyp_labels, ref_labels) if h != cls and r == cls)
        p, r, f = _prf(tp, fp, fn)
        per_class[str(cls)] = {"tp": tp, "fp": fp, "fn": fn, "f1": f}
        total += f
    return ScoreReport(
        "macro_f1",
        total / len(class_list),
        support={"classes": per_class, "n": len(hyp_labels)},
    )


def _normalize_phrase(
    phrase: Sequence[str], lowercase: bool, strip_edge_punct: bool
) -> tuple[str, ...]:
    toks = [t.lower() for t in phrase] if lowercase else list(phrase)
    if strip_edge_punct:
        while toks and all(c in _PUNCT for c in toks[0]):
            toks.pop(0)
        while toks and all(c in _PUNCT for c in toks[-1]):
            toks.pop()
    return tuple(toks)


def _entity_pairs(utt_entities: Iterable[Any]) -> list[tuple[str, tuple[str, ...]]]:
    pairs = []
    for ent in utt_entities:
        if hasattr(ent, "tag"):
            pairs.append((ent.tag, tuple(ent.phrase)))
        else:
            tag, phrase = ent
            pairs.append((tag, tuple(phrase)))
    return pairs


def _multiset_match(hyp: list, ref: list) -> int:
    """Size of the multiset intersection."""
    remaining = list(ref)
    matched = 0
    for item in hyp:
        if item in remaining:
            remaining.remove(item)
            matched += 1
    return matched


def _entity_f1(
    hyp_entities,
    ref_entities,
    ids,
    key,
    metric_name: str,
    notes: dict[str, Any],
) -> ScoreReport:
    if len(hyp_entities) != len(ref_entities):
        raise SchemaError("hyp/ref length mismatch")
    names = _ids_or_indices(ids, len(hyp_entities))
    tp = fp = fn = 0
    per_utt = {}
    for name, hyp_utt, ref_utt in zip(names, hyp_entities, ref_entities):
        hyp_items = [key(p) for p in _entity_pairs(hyp_utt)]
        ref_items = [key(p) for p in _entity_pairs(ref_utt)]
        matched = _multiset_match(hyp_items, ref_items)
        tp += matched
        fp += len(hyp_items) - matched
        fn += len(ref_items) - matched
        _, _, utt_f = _prf(
            matched, len(hyp_items) - matched, len(ref_items) - matched
        )
        per_utt[name] = utt_f
    p, r, f = _prf(tp, fp, fn)
    return ScoreReport(
        metric_name,
        f,
        support={"tp": tp, "fp": fp, "fn": fn, "precision": p, "recall": r},
        per_utterance=per_utt,
        notes=notes,
    )


def ner_f1(
    hyp_entities: Sequence[Iterable[Any]],
    ref_entities: Sequence[Iterable[Any]],
    ids: Sequence[str] | None = None,
    *,
    lowercase: bool = True,
    strip_edge_punct: bool = True,
) -> ScoreReport:
    """Micro-averaged F1 over (tag, normalized phrase) pairs, multiset-matched
    within each utterance. Entities may be (tag, phrase) tuples or objects
    with .tag/.phrase."""

    def key(pair):
        tag, phrase = pair
        return (tag, _normalize_phrase(phrase, lowercase, strip_edge_punct))

    notes = {"normalization": {"lowercase": lowercase, "strip_edge_punct": strip_edge_punct}}
    return _entity_f1(hyp_entities, ref_entities, ids, key, "f1", notes)


def label_f1(
    hyp_entities: Sequence[Iterable[Any]],
    ref_entities: Sequence[Iterable[Any]],
    ids: Sequence[str] | None = None,
) -> ScoreReport:
    """Micro-averaged F1 over entity tags only: phrase text errors are excused."""
    return _entity_f1(
        hyp_entities, ref_entities, ids, lambda pair: pair[0], "label_f1", {}
    )


def _span_frames(span, offset: float, frame_rate: float) -> range:
    # Snap boundaries to the nearest frame index; the epsilon absorbs float
    # drift from shift-then-unshift arithmetic so grid-aligned shifts stay
    # exactly invertible.
    start = span.start if isinstance(span, TimeSpan) else span[0]
    end = span.end if isinstance(span, TimeSpan) else span[1]
    f0 = math.floor((start + offset) * frame_rate + 0.5 + 1e-9)
    f1 = math.floor((end + offset) * frame_rate + 0.5 + 1e-9)
    return range(f0, f1)


def _frame_set(spans, offset: float, frame_rate: float) -> set[int]:
    frames: set[int] = set()
    for span in spans:
        frames.update(_span_frames(span, offset, frame_rate))
    return frames


def frame_f1(
    hyp_spans: Sequence[Iterable[Any]],
    ref_spans: Sequence[Iterable[Any]],
    offset: float = 0.0,
    frame_rate: float = 50.0,
    ids: Sequence[str] | None = None,
) -> ScoreReport:
    """F1 over per-frame overlap of predicted and reference time spans.

    Every hypothesis span is rigidly shifted by ``offset`` before
    discretization. Frame counts micro-accumulate across the corpus.
    Spans may be TimeSpan objects or (start, end) pairs.
    """
    if len(hyp_spans) != len(ref_spans):
        raise SchemaError("hyp/ref length mismatch")
    names = _ids_or_indices(ids, len(hyp_spans))
    overlap = n_hyp = n_ref = 0
    per_utt = {}
    for name, hyp_utt, ref_utt in zip(names, hyp_spans, ref_spans):
        hyp_frames = _frame_set(hyp_utt, offset, frame_rate)
        ref_frames = _frame_set(ref_utt, 0.0, frame_rate)
        inter = len(hyp_frames & ref_frames)
        overlap += inter
        n_hyp += len(hyp_frames)
        n_ref += len(ref_frames)
        _, _, utt_f = _prf(inter, len(hyp_frames) - inter, len(ref_frames) - inter)
        per_utt[name] = utt_f
    p, r, f = _prf(overlap, n_hyp - overlap, n_ref - overlap)
    return ScoreReport(
        "frame_f1",
        f,
        support={
            "overlap": overlap,
            "hyp_frames": n_hyp,
            "ref_frames": n_ref,
            "precision": p,
            "recall": r,
        },
        per_utterance=per_utt,
        notes={"offset": offset, "frame_rate": frame_rate},
    )


@dataclass(frozen=True)
class OffsetGrid:
    """Inclusive [min, max] search range walked in multiples of ``step``.

    Offsets are generated as integer multiples of the step so that the grid
    is closed under negation whenever the range is symmetric.
    """

    min: float = -1.0
    max: float = 1.0
    step: float = 0.02

    def __post_init__(self):
        if self.min > self.max:
            raise SchemaError(f"grid min {self.min} > max {self.max}")
        if not self.step > 0:
            raise SchemaError(f"grid step must be > 0, got {self.step}")

    def values(self) -> list[float]:
        k_lo = math.ceil(self.min / self.step - 1e-9)
        k_hi = math.floor(self.max / self.step + 1e-9)
        return [round(k * self.step, 9) for k in range(k_lo, k_hi + 1)]


DEFAULT_OFFSET_GRID = OffsetGrid()


def tune_offset(
    hyp_spans: Sequence[Iterable[Any]],
    ref_spans: Sequence[Iterable[Any]],
    grid: OffsetGrid = DEFAULT_OFFSET_GRID,
    frame_rate: float = 50.0,
    ids: Sequence[str] | None = None,
) -> tuple[float, ScoreReport]:
    """Exhaustive grid search for the offset maximizing dev frame-F1.

    Ties break toward the smallest |offset|, then negative before positive.
    Returns the winning offset and its frame-F1 report.
    """
    if len(hyp_spans) == 0:
        raise EmptyDevSet("offset tuning requires a non-empty dev set")
    candidates = grid.values()
    if not candidates:
        raise EmptyDevSet("offset grid contains no candidates")
    best: tuple[float, float, int, float, ScoreReport] | None = None
    for offset in candidates:
        report = frame_f1(hyp_spans, ref_spans, offset, frame_rate, ids)
        rank = (-report.value, abs(offset), 0 if offset < 0 else 1)
        if best is None or rank < best[:3]:
            best = (*rank, offset, report)
    return best[3], best[4]


def dac_f1(
    hyp_sets: Sequence[Iterable[int]],
    ref_sets: Sequence[Iterable[int]],
    num_classes: int = 18,
    ids: Sequence[str] | None = None,
) -> ScoreReport:
    """Macro-averaged (unweighted) F1 over per-class set membership."""
    if len(hyp_sets) != len(ref_sets):
        raise SchemaError("hyp/ref length mismatch")
    hyp_sets = [frozenset(s) for s in hyp_sets]
    ref_sets = [frozenset(s) for s in ref_sets]
    for s in hyp_sets + ref_sets:
        for cls in s:
            if not 0 <= cls < num_classes:
                raise UnknownClass(f"class id {cls} outside 0..{num_classes - 1}")
    per_class = {}
    total = 0.0
    for cls in range(num_classes):
        tp = sum(1 for h, r in zip(hyp_sets, ref_sets) if cls in h and cls in r)
        fp = sum(1 for h, r in zip(hyp_sets, ref_sets) if cls in h and cls not in r)
        fn = sum(1 for h, r in zip(hyp_sets, ref_sets) if cls not in h and cls in r)
        p, r, f = _prf(tp, fp, fn)
        per_class[str(cls)] = {"tp": tp, "fp": fp, "fn": fn, "f1": f}
        total += f
    return ScoreReport(
        "macro_f1",
        total / num_classes,
        support={"classes": per_class, "n": len(hyp_sets)},
    )


def rouge_l(hyp: Sequence[str], ref: Sequence[str]) -> ScoreReport:
    """ROUGE-L: F-measure (beta=1) over the longest common subsequence."""
    if len(ref) == 0:
        raise EmptyReference("ROUGE-L reference must be non-empty")
    n, m = len(hyp), len(ref)
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if hyp[i - 1] == ref[j - 1]:
                lcs[i][j] = lcs[i - 1][j - 1] + 1
            else:
                lcs[i][j] = max(lcs[i - 1][j], lcs[i][j - 1])
    length = lcs[n][m]
    p = length / n if n > 0 else 0.0
    r = length / m
    return ScoreReport(
        "rouge_l",
        _f1(p, r),
        support={"lcs": length, "hyp_len": n, "ref_len": m, "precision": p, "recall": r},
    )
