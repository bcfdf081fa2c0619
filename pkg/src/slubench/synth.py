"""Synthetic fixtures: separable feature sets, one-hot posteriors, and small
evaluation corpora with exactly known scores.

Everything here is deterministic given the seed, so tests and demos can
assert exact outcomes without shipping real audio or model outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .codec import DEFAULT_SPECIALS, Entity, SpecialTokens, encode_ner, encode_qa
from .core import DEFAULT_DIALOG_ACTS, DEFAULT_NER_TAGS
from .ctc import BLANK, PosteriorMatrix, write_posteriors
from .features import DEFAULT_FRAME_RATE, LayerStack, write_layerstack


def frame_path_for_tokens(
    token_ids: Sequence[int],
    frames_per_token: int = 2,
    gap: int = 1,
    lead: int = 1,
) -> tuple[list[int], list[tuple[int, int]]]:
    """Expand tokens into a frame path with blank gaps.

    Returns the path and each token's (first, last) frame extent. ``gap >= 1``
    keeps adjacent repeats in separate runs so the path collapses back to the
    token sequence.
    """
    if frames_per_token < 1 or gap < 1 or lead < 0:
        raise ValueError("frames_per_token and gap must be >= 1, lead >= 0")
    path = [BLANK] * lead
    extents = []
    for tok in token_ids:
        start = len(path)
        path.extend([int(tok)] * frames_per_token)
        extents.append((start, len(path) - 1))
        path.extend([BLANK] * gap)
    return path, extents


def posterior_from_path(
    path: Sequence[int], vocab_size: int, frame_rate: float = DEFAULT_FRAME_RATE
) -> PosteriorMatrix:
    """One-hot posterior matrix whose argmax path is exactly ``path``."""
    lp = np.full((len(path), vocab_size), -np.inf)
    for t, tok in enumerate(path):
        lp[t, int(tok)] = 0.0
    return PosteriorMatrix(lp, frame_rate)


@dataclass(frozen=True)
class ClassificationFixture:
    manifest: Path
    features: Path
    planted_layer: int


def make_sa_fixture(
    out_dir: str | Path,
    *,
    n_train_per_class: int = 16,
    n_dev_per_class: int = 8,
    n_test_per_class: int = 8,
    layers: int = 4,
    dim: int = 8,
    frames: int = 10,
    planted_layer: int = 2,
    signal: float = 3.0,
    noise: float = 1.0,
    seed: int = 0,
) -> ClassificationFixture:
    """Sentiment corpus whose class is linearly decodable from one layer only.

    The planted layer carries a class-dependent mean along the first three
    feature dimensions; every other layer is pure noise.
    """
    out_dir = Path(out_dir)
    feats = out_dir / "feats"
    feats.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    sentiments = ("positive", "negative", "neutral")
    counts = {"train": n_train_per_class, "dev": n_dev_per_class, "test": n_test_per_class}
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for split, per_class in counts.items():
            for cls, name in enumerate(sentiments):
                for k in range(per_class):
                    utt_id = f"{split}_{name}_{k:03d}"
                    data = rng.normal(0.0, 1.0, size=(layers, frames, dim))
                    data[planted_layer] = rng.normal(0.0, noise, size=(frames, dim))
                    data[planted_layer, :, cls] += signal
                    stack = LayerStack(data.astype(np.float32))
                    write_layerstack(stack, feats / f"{utt_id}.lstk")
                    row = {
                        "id": utt_id,
                        "duration": frames / DEFAULT_FRAME_RATE,
                        "split": split,
                        "transcript": ["spoken", "words"],
                        "ref": {"sentiment": name},
                    }
                    fh.write(json.dumps(row) + "\n")
    return ClassificationFixture(manifest_path, feats, planted_layer)


def make_dac_fixture(
    out_dir: str | Path,
    *,
    n_train: int = 48,
    n_dev: int = 24,
    n_test: int = 24,
    layers: int = 3,
    dim: int = 24,
    frames: int = 8,
    planted_layer: int = 1,
    signal: float = 4.0,
    seed: int = 0,
) -> ClassificationFixture:
    """Multi-label corpus: act k is present iff planted-layer dim k is high."""
    out_dir = Path(out_dir)
    feats = out_dir / "feats"
    feats.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_acts = len(DEFAULT_DIALOG_ACTS)
    counts = {"train": n_train, "dev": n_dev, "test": n_test}
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for split, count in counts.items():
            for k in range(count):
                utt_id = f"{split}_{k:03d}"
                active = sorted(
                    int(i)
                    for i in rng.choice(n_acts, size=int(rng.integers(1, 4)), replace=False)
                )
                data = rng.normal(0.0, 1.0, size=(layers, frames, dim))
                plant = rng.normal(0.0, 1.0, size=(frames, dim)) - signal / 2
                for act in active:
                    plant[:, act] += signal
                data[planted_layer] = plant
                stack = LayerStack(data.astype(np.float32))
                write_layerstack(stack, feats / f"{utt_id}.lstk")
                row = {
                    "id": utt_id,
                    "duration": frames / DEFAULT_FRAME_RATE,
                    "split": split,
                    "transcript": ["spoken", "words"],
                    "ref": {"acts": [DEFAULT_DIALOG_ACTS[i] for i in active]},
                }
                fh.write(json.dumps(row) + "\n")
    return ClassificationFixture(manifest_path, feats, planted_layer)


# Small handcrafted corpus for the sequence tasks. Each row: transcript and
# (tag, start, end) entity token ranges. The first row is the canonical
# welcome-parliament example used throughout the docs.
NER_SENTENCES: list[tuple[list[str], list[tuple[str, int, int]]]] = [
    ("we welcome parliament 's agreement".split(), [("ORG", 2, 3)]),
    ("the council met maria in berlin".split(), [("ORG", 1, 2), ("PER", 3, 4), ("LOC", 5, 6)]),
    ("members debated the budget yesterday".split(), []),
    ("greece joined the union in july".split(), [("GPE", 0, 1), ("DATE", 5, 6)]),
    ("the treaty text cites article seven".split(), [("LAW", 1, 3)]),
    ("citizens of spain voted early".split(), [("GPE", 2, 3)]),
]

# Question, document, and answer token range inside the document. The first
# row is the canonical quarterback example.
QA_ITEMS: list[tuple[list[str], list[str], tuple[int, int]]] = [
    (
        "who is the present quarterback of the broncos".split(),
        ("nature and persistence of the tennessee volunteers quarterback "
         "at the time peyton manning having").split(),
        (11, 13),
    ),
    (
        "when did the treaty enter into force".split(),
        "the treaty entered into force in july after ratification".split(),
        (6, 7),
    ),
    (
        "who chaired the session".split(),
        "the session was chaired by maria according to the minutes".split(),
        (5, 6),
    ),
]


@dataclass(frozen=True)
class SequenceFixture:
    manifest: Path
    posteriors: Path
    vocab: Path
    frame_rate: float


def _write_vocab(tokens: Sequence[str], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("<blank>\n")
        for tok in tokens:
            fh.write(tok + "\n")


def _encode_ner_with_positions(
    sent: list[str], entities: list[Entity], specials: SpecialTokens
) -> tuple[list[str], list[tuple[int, int]]]:
    """encode_ner plus each entity's phrase position range in the sequence."""
    seq: list[str] = []
    phrase_pos: list[tuple[int, int]] = []
    prev = 0
    for ent in sorted(entities, key=lambda e: e.start):
        seq.extend(sent[prev : ent.start])
        seq.extend((ent.tag, specials.fill))
        phrase_pos.append((len(seq), len(seq) + len(ent.phrase)))
        seq.extend(ent.phrase)
        seq.append(specials.sep)
        prev = ent.end
    seq.extend(sent[prev:])
    return seq, phrase_pos


def make_ner_fixture(
    out_dir: str | Path,
    *,
    splits: Sequence[str] = ("dev", "test"),
    shift_frames: int = 0,
    frame_rate: float = DEFAULT_FRAME_RATE,
    tags: Sequence[str] = DEFAULT_NER_TAGS,
    specials: SpecialTokens = DEFAULT_SPECIALS,
) -> SequenceFixture:
    """NER/NEL corpus with one-hot posteriors that decode to the references.

    ``shift_frames`` delays every posterior path uniformly, displacing all
    predicted spans by shift_frames/frame_rate seconds while references stay
    put; with a zero shift the pipeline scores 1.0 everywhere.
    """
    out_dir = Path(out_dir)
    post_dir = out_dir / "posteriors"
    post_dir.mkdir(parents=True, exist_ok=True)
    words = sorted({w for sent, _ in NER_SENTENCES for w in sent})
    vocab = words + list(tags) + [specials.fill, specials.sep]
    vocab_path = out_dir / "vocab.txt"
    _write_vocab(vocab, vocab_path)
    tok_id = {tok: i + 1 for i, tok in enumerate(vocab)}

    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for split in splits:
            for n, (sent, ent_rows) in enumerate(NER_SENTENCES):
                utt_id = f"{split}_{n:02d}"
                entities = [Entity(tag, tuple(sent[s:e]), s, e) for tag, s, e in ent_rows]
                seq, phrase_pos = _encode_ner_with_positions(sent, entities, specials)
                assert seq == encode_ner(sent, entities, tags=tags, specials=specials)
                path, extents = frame_path_for_tokens(
                    [tok_id[t] for t in seq], lead=1 + shift_frames
                )
                write_posteriors(
                    posterior_from_path(path, len(vocab) + 1, frame_rate),
                    post_dir / f"{utt_id}.lstk",
                )
                ent_json = []
                for ent, (p0, p1) in zip(sorted(entities, key=lambda e: e.start), phrase_pos):
                    first = extents[p0][0] - shift_frames
                    last = extents[p1 - 1][1] - shift_frames
                    ent_json.append(
                        {
                            "tag": ent.tag,
                            "phrase": list(ent.phrase),
                            "start": first / frame_rate,
                            "end": (last + 1) / frame_rate,
                        }
                    )
                row = {
                    "id": utt_id,
                    "duration": (len(path) + 1) / frame_rate,
                    "split": split,
                    "transcript": sent,
                    "ref": {"entities": ent_json},
                }
                fh.write(json.dumps(row) + "\n")
    return SequenceFixture(manifest_path, post_dir, vocab_path, frame_rate)


def make_qa_fixture(
    out_dir: str | Path,
    *,
    splits: Sequence[str] = ("dev", "test"),
    shift_frames: int = 0,
    frame_rate: float = DEFAULT_FRAME_RATE,
    specials: SpecialTokens = DEFAULT_SPECIALS,
) -> SequenceFixture:
    """QA corpus with one-hot posteriors over question SEP ... ANS answer ANS."""
    out_dir = Path(out_dir)
    post_dir = out_dir / "posteriors"
    post_dir.mkdir(parents=True, exist_ok=True)
    words = sorted({w for q, d, _ in QA_ITEMS for w in q + d})
    vocab = words + [specials.sep, specials.ans]
    vocab_path = out_dir / "vocab.txt"
    _write_vocab(vocab, vocab_path)
    tok_id = {tok: i + 1 for i, tok in enumerate(vocab)}

    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for split in splits:
            for n, (question, document, (a0, a1)) in enumerate(QA_ITEMS):
                utt_id = f"{split}_{n:02d}"
                seq = encode_qa(question, document, (a0, a1), specials=specials)
                # Answer tokens sit right after the first ANS marker.
                ans_marker = seq.index(specials.ans)
                p0, p1 = ans_marker + 1, ans_marker + 1 + (a1 - a0)
                path, extents = frame_path_for_tokens(
                    [tok_id[t] for t in seq], lead=1 + shift_frames
                )
                write_posteriors(
                    posterior_from_path(path, len(vocab) + 1, frame_rate),
                    post_dir / f"{utt_id}.lstk",
                )
                first = extents[p0][0] - shift_frames
                last = extents[p1 - 1][1] - shift_frames
                row = {
                    "id": utt_id,
                    "duration": (len(path) + 1) / frame_rate,
                    "split": split,
                    "transcript": question + document,
                    "ref": {
                        "answer": {
                            "start": first / frame_rate,
                            "end": (last + 1) / frame_rate,
                        }
                    },
                    "meta": {"question_len": len(question)},
                }
                fh.write(json.dumps(row) + "\n")
    return SequenceFixture(manifest_path, post_dir, vocab_path, frame_rate)
