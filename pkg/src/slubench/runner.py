"""Task pipelines wiring codec, CTC, probe, and metrics into evaluation runs.

A run consumes a manifest plus one of the admissible input kinds for its
task (features to train on, posteriors or frame paths to decode, plain
hypothesis tokens, or precomputed predictions/spans) and produces a
RunResult whose metric set matches the task registry exactly.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .codec import (
    DEFAULT_SPECIALS,
    Hypothesis,
    SpecialTokens,
    decode_ner,
    decode_qa,
    load_hypotheses,
    load_vocab,
)
from .core import (
    DEFAULT_DIALOG_ACTS,
    DEFAULT_NER_TAGS,
    Manifest,
    SentimentLabel,
    TaskKind,
    TimeSpan,
    Utterance,
    load_manifest,
    task_metric_spec,
)
from .ctc import Alignment, greedy_decode, read_posteriors
from .errors import (
    MissingFeatures,
    MissingHypothesis,
    MissingInput,
    SchemaError,
)
from .features import DEFAULT_FRAME_RATE, read_layerstack
from .metrics import (
    DEFAULT_OFFSET_GRID,
    OffsetGrid,
    ScoreReport,
    dac_f1,
    frame_f1,
    label_f1,
    macro_f1,
    ner_f1,
    rouge_l,
    tune_offset,
    wer,
)
from .probe import SENTIMENT_CLASSES, TrainConfig, predict_dac, predict_sa, train

PROTOCOLS = ("lightweight", "complex", "fine-tuned")


@dataclass(frozen=True)
class RunSpec:
    task: TaskKind
    protocol: str
    model: str
    manifest: Path
    features: Path | None = None
    posteriors: Path | None = None
    hypotheses: Path | None = None
    predictions: Path | None = None
    spans: Path | None = None
    vocab: Path | None = None
    bertscore: Path | None = None
    splits: tuple[str, ...] = ("dev", "test")
    train_config: TrainConfig | None = None
    offset_grid: OffsetGrid = DEFAULT_OFFSET_GRID
    tags: tuple[str, ...] = DEFAULT_NER_TAGS
    acts: tuple[str, ...] = DEFAULT_DIALOG_ACTS
    specials: SpecialTokens = DEFAULT_SPECIALS

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise SchemaError(f"unknown protocol {self.protocol!r}")
        if not self.splits:
            raise SchemaError("at least one split required")

    def to_dict(self) -> dict[str, Any]:
        doc = {
            "task": self.task.value,
            "protocol": self.protocol,
            "model": self.model,
            "manifest": str(self.manifest),
            "splits": list(self.splits),
        }
        for name in ("features", "posteriors", "hypotheses", "predictions",
                     "spans", "vocab", "bertscore"):
            value = getattr(self, name)
            if value is not None:
                doc[name] = str(value)
        return doc


@dataclass
class RunResult:
    spec: dict[str, Any]
    scores: dict[str, dict[str, ScoreReport]]  # split -> metric -> report
    tuned_offset: float | None = None
    wall_clock_s: float = 0.0
    engine_version: str = __version__
    warnings: dict[str, Any] = field(default_factory=dict)
    external: dict[str, Any] = field(default_factory=dict)
    train_log: list[dict[str, float]] | None = None

    def __post_init__(self):
        expected = {
            m.name for m in task_metric_spec(TaskKind(self.spec["task"])) if not m.external
        }
        for split, reports in self.scores.items():
            if set(reports) != expected:
                raise SchemaError(
                    f"split {split}: metrics {sorted(reports)} != expected {sorted(expected)}"
                )

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec,
            "scores": {
                split: {name: rep.to_dict() for name, rep in reports.items()}
                for split, reports in self.scores.items()
            },
            "tuned_offset": self.tuned_offset,
            "wall_clock_s": self.wall_clock_s,
            "engine_version": self.engine_version,
            "warnings": self.warnings,
            "external": self.external,
            "train_log": self.train_log,
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def _require_exists(path: Path | None, what: str) -> Path:
    if path is None:
        raise SchemaError(f"{what} required for this run")
    if not Path(path).exists():
        raise MissingInput(f"{what} not found: {path}")
    return Path(path)


def _load_predictions(path: Path) -> dict[str, dict]:
    out: dict[str, dict] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            out[row["id"]] = row
    return out


def _load_spans(path: Path) -> dict[str, list[TimeSpan]]:
    out: dict[str, list[TimeSpan]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            out[row["id"]] = [
                TimeSpan(float(s["start"]), float(s["end"])) for s in row.get("spans", [])
            ]
    return out


def run_classification(spec: RunSpec) -> RunResult:
    """Train-and-score (features) or score-only (predictions) for SA/DAC."""
    if spec.task not in (TaskKind.SA, TaskKind.DAC):
        raise SchemaError(f"run_classification got task {spec.task.value}")
    started = time.monotonic()
    manifest = load_manifest(spec.manifest, spec.task, tags=spec.tags, acts=spec.acts)
    scores: dict[str, dict[str, ScoreReport]] = {}
    train_log = None

    if spec.predictions is not None:
        preds = _load_predictions(_require_exists(spec.predictions, "predictions"))

        def predict(utt: Utterance):
            if utt.id not in preds:
                raise MissingHypothesis(utt.id)
            row = preds[utt.id]
            if spec.task is TaskKind.SA:
                if "sentiment" not in row:
                    raise SchemaError(f"{utt.id}: prediction lacks 'sentiment'")
                return SentimentLabel(row["sentiment"])
            if "acts" not in row:
                raise SchemaError(f"{utt.id}: prediction lacks 'acts'")
            try:
                return frozenset(spec.acts.index(a) for a in row["acts"])
            except ValueError:
                raise SchemaError(f"{utt.id}: unknown dialog act in prediction") from None

    elif spec.features is not None:
        features_dir = _require_exists(spec.features, "features directory")
        probe, train_log = train(
            manifest, features_dir, spec.train_config or TrainConfig()
        )

        def predict(utt: Utterance):
            path = features_dir / f"{utt.id}.lstk"
            if not path.exists():
                raise MissingFeatures(utt.id)
            stack = read_layerstack(path)
            if spec.task is TaskKind.SA:
                return predict_sa(probe, stack)
            return predict_dac(probe, stack)

    else:
        raise SchemaError("classification runs need features or predictions")

    for split in spec.splits:
        utts = manifest.split(split)
        if not utts:
            raise SchemaError(f"manifest has no {split} utterances")
        hyp = [predict(u) for u in utts]
        ref = [u.ref for u in utts]
        ids = [u.id for u in utts]
        if spec.task is TaskKind.SA:
            report = macro_f1(hyp, ref, SENTIMENT_CLASSES, ids)
        else:
            report = dac_f1(hyp, ref, len(spec.acts), ids)
        scores[split] = {"macro_f1": report}

    return RunResult(
        spec.to_dict(),
        scores,
        wall_clock_s=time.monotonic() - started,
        train_log=train_log,
    )


@dataclass
class _Decoded:
    tokens: list[str]
    alignment: Alignment | None
    frame_rate: float | None


def _decode_split(
    spec: RunSpec, utts: Sequence[Utterance], vocab: tuple[str, ...] | None
) -> dict[str, _Decoded]:
    """Per-utterance decoded tokens (plus alignment when timing is known)."""
    out: dict[str, _Decoded] = {}
    if spec.posteriors is not None:
        post_dir = _require_exists(spec.posteriors, "posteriors directory")
        if vocab is None:
            raise SchemaError("posterior decoding requires a vocabulary file")
        for utt in utts:
            path = post_dir / f"{utt.id}.lstk"
            if not path.exists():
                raise MissingFeatures(utt.id)
            post = read_posteriors(path)
            if post.vocab != len(vocab):
                raise SchemaError(
                    f"{utt.id}: posterior vocab {post.vocab} != file vocab {len(vocab)}"
                )
            ids, alignment = greedy_decode(post)
            out[utt.id] = _Decoded(
                [vocab[i] for i in ids], alignment, post.frame_rate
            )
        return out
    if spec.hypotheses is not None:
        hyps = load_hypotheses(_require_exists(spec.hypotheses, "hypotheses"))
        for utt in utts:
            if utt.id not in hyps:
                raise MissingHypothesis(utt.id)
            hyp = hyps[utt.id]
            if hyp.frames is not None:
                if vocab is None:
                    raise SchemaError("frame hypotheses require a vocabulary file")
                alignment = Alignment.from_frame_path(hyp.frames)
                out[utt.id] = _Decoded(
                    [vocab[i] for i in alignment.tokens],
                    alignment,
                    hyp.frame_rate or DEFAULT_FRAME_RATE,
                )
            else:
                out[utt.id] = _Decoded(list(hyp.tokens), None, None)
        return out
    raise SchemaError("sequence runs need posteriors or hypotheses")


def _entity_spans(
    decoded: _Decoded, spec: RunSpec
) -> list[TimeSpan]:
    """Entity time spans from the phrase tokens' alignment extents."""
    result = decode_ner(decoded.tokens, tags=spec.tags, specials=spec.specials)
    spans = []
    for seq_start, seq_end in result.seq_spans:
        token_spans = decoded.alignment.token_spans[seq_start:seq_end]
        first = token_spans[0].first_frame
        last = token_spans[-1].last_frame
        spans.append(TimeSpan(first / decoded.frame_rate, (last + 1) / decoded.frame_rate))
    return spans


def run_ner_nel(spec: RunSpec) -> RunResult:
    """Decode label sequences; score tag/phrase F1 (NER) or frame-F1 (NEL)."""
    if spec.task not in (TaskKind.NER, TaskKind.NEL):
        raise SchemaError(f"run_ner_nel got task {spec.task.value}")
    started = time.monotonic()
    manifest = load_manifest(spec.manifest, spec.task, tags=spec.tags, acts=spec.acts)
    vocab = load_vocab(_require_exists(spec.vocab, "vocabulary")) if spec.vocab else None
    precomputed = _load_spans(_require_exists(spec.spans, "spans")) if spec.spans else None

    scores: dict[str, dict[str, ScoreReport]] = {}
    warnings: dict[str, Any] = {}
    tuned_offset = None

    if spec.task is TaskKind.NER:
        for split in spec.splits:
            utts = manifest.split(split)
            if not utts:
                raise SchemaError(f"manifest has no {split} utterances")
            decoded = _decode_split(spec, utts, vocab)
            hyp, ref, malformed = [], [], 0
            for utt in utts:
                res = decode_ner(
                    decoded[utt.id].tokens, tags=spec.tags, specials=spec.specials
                )
                malformed += res.malformed
                hyp.append([(e.tag, e.phrase) for e in res.entities])
                ref.append([(e.tag, e.phrase) for e in utt.ref])
            ids = [u.id for u in utts]
            scores[split] = {
                "label_f1": label_f1(hyp, ref, ids),
                "f1": ner_f1(hyp, ref, ids),
            }
            warnings[f"{split}_malformed_regions"] = malformed
    else:
        if "dev" not in spec.splits:
            raise SchemaError("nel runs need the dev split for offset tuning")
        span_data: dict[str, tuple[list, list, list]] = {}
        seen_rate: float | None = None
        for split in spec.splits:
            utts = manifest.split(split)
            if not utts:
                raise SchemaError(f"manifest has no {split} utterances")
            ids = [u.id for u in utts]
            ref = [[e.span for e in u.ref] for u in utts]
            if precomputed is not None:
                hyp = [precomputed.get(u.id, []) for u in utts]
            else:
                decoded = _decode_split(spec, utts, vocab)
                for utt in utts:
                    if decoded[utt.id].alignment is None:
                        raise SchemaError(
                            "nel needs timing: posteriors, frame hypotheses, or spans"
                        )
                hyp = [_entity_spans(decoded[u.id], spec) for u in utts]
                if seen_rate is None:
                    seen_rate = decoded[utts[0].id].frame_rate
            span_data[split] = (hyp, ref, ids)
        hyp, ref, ids = span_data["dev"]
        frame_rate = seen_rate if seen_rate is not None else DEFAULT_FRAME_RATE
        tuned_offset, dev_report = tune_offset(
            hyp, ref, spec.offset_grid, frame_rate, ids
        )
        scores["dev"] = {"frame_f1": dev_report}
        for split in spec.splits:
            if split == "dev":
                continue
            hyp, ref, ids = span_data[split]
            scores[split] = {
                "frame_f1": frame_f1(hyp, ref, tuned_offset, frame_rate, ids)
            }

    return RunResult(
        spec.to_dict(),
        scores,
        tuned_offset=tuned_offset,
        wall_clock_s=time.monotonic() - started,
        warnings=warnings,
    )


def run_qa(spec: RunSpec) -> RunResult:
    """Decode answer regions and score frame-F1 with dev-tuned offset."""
    if spec.task is not TaskKind.QA:
        raise SchemaError(f"run_qa got task {spec.task.value}")
    if "dev" not in spec.splits:
        raise SchemaError("qa runs need the dev split for offset tuning")
    started = time.monotonic()
    manifest = load_manifest(spec.manifest, spec.task, tags=spec.tags, acts=spec.acts)
    vocab = load_vocab(_require_exists(spec.vocab, "vocabulary")) if spec.vocab else None
    precomputed = _load_spans(_require_exists(spec.spans, "spans")) if spec.spans else None

    warnings: dict[str, Any] = {}
    span_data: dict[str, tuple[list, list, list]] = {}
    seen_rate: float | None = None
    for split in spec.splits:
        utts = manifest.split(split)
        if not utts:
            raise SchemaError(f"manifest has no {split} utterances")
        ids = [u.id for u in utts]
        ref = [[u.ref] for u in utts]
        if precomputed is not None:
            hyp = [precomputed.get(u.id, []) for u in utts]
        else:
            decoded = _decode_split(spec, utts, vocab)
            hyp = []
            missing = malformed = 0
            for utt in utts:
                dec = decoded[utt.id]
                if dec.alignment is None:
                    raise SchemaError(
                        "qa needs timing: posteriors, frame hypotheses, or spans"
                    )
                res = decode_qa(dec.tokens, specials=spec.specials)
                malformed += res.malformed
                if res.answer_seq_span is None:
                    missing += 1
                    hyp.append([])
                    continue
                s0, s1 = res.answer_seq_span
                token_spans = dec.alignment.token_spans[s0:s1]
                first = token_spans[0].first_frame
                last = token_spans[-1].last_frame
                hyp.append(
                    [TimeSpan(first / dec.frame_rate, (last + 1) / dec.frame_rate)]
                )
            warnings[f"{split}_no_answer"] = missing
            warnings[f"{split}_malformed_regions"] = malformed
            if seen_rate is None:
                seen_rate = decoded[utts[0].id].frame_rate
        span_data[split] = (hyp, ref, ids)

    frame_rate = seen_rate if seen_rate is not None else DEFAULT_FRAME_RATE
    hyp, ref, ids = span_data["dev"]
    tuned_offset, dev_report = tune_offset(hyp, ref, spec.offset_grid, frame_rate, ids)
    scores = {"dev": {"frame_f1": dev_report}}
    for split in spec.splits:
        if split == "dev":
            continue
        hyp, ref, ids = span_data[split]
        scores[split] = {"frame_f1": frame_f1(hyp, ref, tuned_offset, frame_rate, ids)}

    return RunResult(
        spec.to_dict(),
        scores,
        tuned_offset=tuned_offset,
        wall_clock_s=time.monotonic() - started,
        warnings=warnings,
    )


def run_text_task(spec: RunSpec) -> RunResult:
    """ASR (pooled corpus WER) or SUMM (mean per-talk ROUGE-L)."""
    if spec.task not in (TaskKind.ASR, TaskKind.SUMM):
        raise SchemaError(f"run_text_task got task {spec.task.value}")
    started = time.monotonic()
    manifest = load_manifest(spec.manifest, spec.task, tags=spec.tags, acts=spec.acts)
    hyps = load_hypotheses(_require_exists(spec.hypotheses, "hypotheses"))

    scores: dict[str, dict[str, ScoreReport]] = {}
    for split in spec.splits:
        utts = manifest.split(split)
        if not utts:
            raise SchemaError(f"manifest has no {split} utterances")
        if spec.task is TaskKind.ASR:
            subs = dels = inss = ref_len = 0
            per_utt = {}
            for utt in utts:
                if utt.id not in hyps or hyps[utt.id].tokens is None:
                    raise MissingHypothesis(utt.id)
                report = wer(hyps[utt.id].tokens, utt.transcript)
                subs += report.support["sub"]
                dels += report.support["del"]
                inss += report.support["ins"]
                ref_len += report.support["ref_len"]
                per_utt[utt.id] = report.value
            edits = subs + dels + inss
            scores[split] = {
                "wer": ScoreReport(
                    "wer",
                    edits / ref_len,
                    support={
                        "sub": subs, "del": dels, "ins": inss,
                        "edits": edits, "ref_len": ref_len,
                    },
                    per_utterance=per_utt,
                )
            }
        else:
            values = {}
            for utt in utts:
                if utt.id not in hyps or hyps[utt.id].tokens is None:
                    raise MissingHypothesis(utt.id)
                values[utt.id] = rouge_l(hyps[utt.id].tokens, utt.ref).value
            mean = sum(values.values()) / len(values)
            scores[split] = {
                "rouge_l": ScoreReport(
                    "rouge_l", mean, support={"n": len(values)}, per_utterance=values
                )
            }

    external: dict[str, Any] = {}
    if spec.task is TaskKind.SUMM:
        if spec.bertscore is not None:
            with open(_require_exists(spec.bertscore, "bertscore file")) as fh:
                doc = json.load(fh)
            external["bertscore"] = {
                "value": float(doc["value"]),
                "source": doc.get("source", "external"),
            }
        else:
            external["bertscore"] = {"absent": True}

    return RunResult(
        spec.to_dict(),
        scores,
        wall_clock_s=time.monotonic() - started,
        external=external,
    )


_RUNNERS = {
    TaskKind.SA: run_classification,
    TaskKind.DAC: run_classification,
    TaskKind.NER: run_ner_nel,
    TaskKind.NEL: run_ner_nel,
    TaskKind.QA: run_qa,
    TaskKind.ASR: run_text_task,
    TaskKind.SUMM: run_text_task,
}


def run(spec: RunSpec) -> RunResult:
    return _RUNNERS[spec.task](spec)
