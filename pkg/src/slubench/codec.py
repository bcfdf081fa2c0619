"""Encode/decode the special-token label-sequence formats for NER and QA.

An NER label sequence wraps each entity phrase as ``TAG FILL phrase... SEP``
inside the transcript. A QA label sequence is
``question SEP doc-prefix ANS answer ANS doc-suffix``.

Decoding is total: CTC hypotheses are routinely malformed, so unmatched
markers are dropped (never raised) and counted in the result's
``malformed`` field, and the recovered plain transcript never contains
marker tokens.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .core import DEFAULT_NER_TAGS
from .errors import (
    AnswerOutOfBounds,
    DuplicateId,
    OverlappingEntities,
    ParseError,
    RangeOutOfBounds,
    ReservedToken,
    SchemaError,
)


@dataclass(frozen=True)
class SpecialTokens:
    fill: str = "FILL"
    sep: str = "SEP"
    ans: str = "ANS"

    def as_set(self) -> frozenset[str]:
        return frozenset((self.fill, self.sep, self.ans))


DEFAULT_SPECIALS = SpecialTokens()


@dataclass(frozen=True)
class Entity:
    """An entity occurrence: tag, phrase, and [start, end) token range."""

    tag: str
    phrase: tuple[str, ...]
    start: int
    end: int

    def __post_init__(self):
        if not self.phrase:
            raise SchemaError("entity phrase must be non-empty")
        if not 0 <= self.start < self.end:
            raise SchemaError(f"bad entity range [{self.start}, {self.end})")


@dataclass(frozen=True)
class NerDecode:
    entities: tuple[Entity, ...]
    transcript: tuple[str, ...]
    malformed: int
    # [start, end) positions of each entity's phrase in the input sequence,
    # parallel to `entities`; used to look up alignment frames for timing.
    seq_spans: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class QaDecode:
    question: tuple[str, ...]
    document: tuple[str, ...]
    answer: tuple[int, int] | None
    malformed: int
    answer_seq_span: tuple[int, int] | None = None


def _check_reserved(tokens: Sequence[str], reserved: frozenset[str], what: str) -> None:
    hits = sorted(set(tokens) & reserved)
    if hits:
        raise ReservedToken(f"{what} contains reserved tokens {hits}")


def encode_ner(
    transcript: Sequence[str],
    entities: Sequence[Entity],
    *,
    tags: Sequence[str] = DEFAULT_NER_TAGS,
    specials: SpecialTokens = DEFAULT_SPECIALS,
) -> list[str]:
    """Insert ``TAG FILL`` / ``SEP`` markers around each entity phrase."""
    tag_set = frozenset(tags)
    _check_reserved(transcript, specials.as_set() | tag_set, "transcript")
    ordered = sorted(entities, key=lambda e: e.start)
    prev_end = 0
    out: list[str] = []
    for ent in ordered:
        if ent.end > len(transcript):
            raise RangeOutOfBounds(
                f"entity range [{ent.start}, {ent.end}) exceeds transcript "
                f"length {len(transcript)}"
            )
        if ent.start < prev_end:
            raise OverlappingEntities(f"entity at {ent.start} overlaps the previous one")
        if ent.tag not in tag_set:
            raise SchemaError(f"unknown entity tag {ent.tag!r}")
        if tuple(transcript[ent.start : ent.end]) != ent.phrase:
            raise SchemaError(
                f"entity phrase {ent.phrase} does not match transcript slice "
                f"[{ent.start}, {ent.end})"
            )
        out.extend(transcript[prev_end : ent.start])
        out.append(ent.tag)
        out.append(specials.fill)
        out.extend(ent.phrase)
        out.append(specials.sep)
        prev_end = ent.end
    out.extend(transcript[prev_end:])
    return out


def decode_ner(
    seq: Sequence[str],
    *,
    tags: Sequence[str] = DEFAULT_NER_TAGS,
    specials: SpecialTokens = DEFAULT_SPECIALS,
) -> NerDecode:
    """Inverse of encode_ner, tolerant of malformed marker structure.

    Unmatched or stray FILL/SEP/tag tokens are dropped and counted; an
    unterminated region keeps its words in the transcript but yields no
    entity.
    """
    tag_set = frozenset(tags)
    transcript: list[str] = []
    entities: list[Entity] = []
    seq_spans: list[tuple[int, int]] = []
    malformed = 0

    open_tag: str | None = None
    region_words: list[tuple[str, int]] = []  # (word, seq position)

    def close_region(emit: bool) -> None:
        nonlocal malformed, open_tag
        if open_tag is None:
            return
        if emit and region_words:
            start = len(transcript)
            entities.append(
                Entity(
                    open_tag,
                    tuple(w for w, _ in region_words),
                    start,
                    start + len(region_words),
                )
            )
            seq_spans.append((region_words[0][1], region_words[-1][1] + 1))
        else:
            malformed += 1
        transcript.extend(w for w, _ in region_words)
        region_words.clear()
        open_tag = None

    i = 0
    n = len(seq)
    while i < n:
        tok = seq[i]
        if tok in tag_set:
            if i + 1 < n and seq[i + 1] == specials.fill:
                close_region(emit=False)  # nested region: previous one is malformed
                open_tag = tok
                i += 2
                continue
            malformed += 1  # tag not followed by FILL
            i += 1
            continue
        if tok == specials.fill:
            malformed += 1
            i += 1
            continue
        if tok == specials.sep:
            if open_tag is not None:
                close_region(emit=True)
            else:
                malformed += 1
            i += 1
            continue
        if open_tag is not None:
            region_words.append((tok, i))
        else:
            transcript.append(tok)
        i += 1
    close_region(emit=False)

    return NerDecode(tuple(entities), tuple(transcript), malformed, tuple(seq_spans))


def encode_qa(
    question: Sequence[str],
    document: Sequence[str],
    answer: tuple[int, int],
    *,
    specials: SpecialTokens = DEFAULT_SPECIALS,
) -> list[str]:
    """Concatenate question and document, wrapping the answer in ANS markers."""
    start, end = answer
    if not 0 <= start < end <= len(document):
        raise AnswerOutOfBounds(
            f"answer range [{start}, {end}) invalid for document of "
            f"length {len(document)}"
        )
    reserved = specials.as_set()
    _check_reserved(question, reserved, "question")
    _check_reserved(document, reserved, "document")
    out = list(question)
    out.append(specials.sep)
    out.extend(document[:start])
    out.append(specials.ans)
    out.extend(document[start:end])
    out.append(specials.ans)
    out.extend(document[end:])
    return out


def decode_qa(
    seq: Sequence[str],
    *,
    specials: SpecialTokens = DEFAULT_SPECIALS,
) -> QaDecode:
    """Inverse of encode_qa with the same drop-and-count recovery policy.

    The answer is the first balanced ANS pair after the question/document
    SEP; its range is reported in document token indices.
    """
    malformed = 0
    try:
        sep_pos = list(seq).index(specials.sep)
    except ValueError:
        sep_pos = -1
        malformed += 1

    question: list[str] = []
    for i in range(max(sep_pos, 0)):
        tok = seq[i]
        if tok in (specials.ans, specials.sep):
            malformed += 1
        else:
            question.append(tok)

    document: list[str] = []
    doc_positions: list[int] = []
    ans_open: int | None = None  # document index where the answer starts
    answer: tuple[int, int] | None = None
    answer_seq: tuple[int, int] | None = None
    for i in range(sep_pos + 1, len(seq)):
        tok = seq[i]
        if tok == specials.sep:
            malformed += 1
            continue
        if tok == specials.ans:
            if answer is not None:
                malformed += 1  # extra marker after the balanced pair
            elif ans_open is None:
                ans_open = len(document)
            elif len(document) == ans_open:
                malformed += 1  # empty ANS pair
                ans_open = None
            else:
                answer = (ans_open, len(document))
                answer_seq = (doc_positions[ans_open], doc_positions[-1] + 1)
                ans_open = None
            continue
        document.append(tok)
        doc_positions.append(i)
    if ans_open is not None:
        malformed += 1  # unclosed ANS

    return QaDecode(tuple(question), tuple(document), answer, malformed, answer_seq)


@dataclass(frozen=True)
class Hypothesis:
    """One decoded model output: plain tokens or a per-frame token-id path."""

    tokens: tuple[str, ...] | None = None
    frames: tuple[int, ...] | None = None
    frame_rate: float | None = None


def load_vocab(path: str | Path) -> tuple[str, ...]:
    """Plain-text vocabulary, one token per line; line 0 is the blank."""
    tokens: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            tok = line.rstrip("\n")
            if not tok:
                raise ParseError(line_no, "empty vocabulary entry")
            tokens.append(tok)
    if len(tokens) < 2:
        raise SchemaError("vocabulary must hold the blank plus at least one token")
    return tuple(tokens)


def load_hypotheses(path: str | Path) -> dict[str, Hypothesis]:
    """Hypothesis JSONL: {"id", "tokens": [str]} or {"id", "frames": [int]}."""
    out: dict[str, Hypothesis] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            utt_id = row.get("id")
            if not isinstance(utt_id, str):
                raise SchemaError(f"line {line_no}: missing or non-string id")
            if utt_id in out:
                raise DuplicateId(utt_id)
            has_tokens = "tokens" in row
            has_frames = "frames" in row
            if has_tokens == has_frames:
                raise SchemaError(
                    f"line {line_no}: exactly one of tokens/frames required"
                )
            if has_tokens:
                toks = row["tokens"]
                if not isinstance(toks, list) or any(not isinstance(t, str) for t in toks):
                    raise SchemaError(f"line {line_no}: tokens must be a string list")
                out[utt_id] = Hypothesis(tokens=tuple(toks))
            else:
                frames = row["frames"]
                if not isinstance(frames, list) or any(
                    not isinstance(f, int) or f < 0 for f in frames
                ):
                    raise SchemaError(f"line {line_no}: frames must be token ids")
                out[utt_id] = Hypothesis(
                    frames=tuple(frames), frame_rate=row.get("frame_rate")
                )
    return out
