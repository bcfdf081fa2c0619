"""CTC decoding, loss, and frame alignment.

Conventions used everywhere in the engine:

* the blank token is vocabulary index 0 (asserted at codec boundaries);
* the collapse rule merges adjacent repeats, then deletes blanks;
* a decoded token's time extent is the full extent of its argmax run
  (first to last frame), so one-frame tokens have nonzero duration.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import TimeSpan
from .errors import (
    BadMagic,
    DimensionMismatch,
    NonFiniteValue,
    SchemaError,
    TargetTooLong,
    UnsupportedVersion,
)
from .features import _HEADER, MAGIC, VERSION_POSTERIOR, _read_header, _read_payload

BLANK = 0

_ROW_NORM_TOL = 1e-4


@dataclass(frozen=True)
class PosteriorMatrix:
    """T x V per-frame log-probabilities with blank at index 0."""

    log_probs: np.ndarray
    frame_rate: float

    def __post_init__(self):
        lp = np.asarray(self.log_probs, dtype=np.float64)
        if lp.ndim != 2 or lp.shape[0] < 1 or lp.shape[1] < 2:
            raise DimensionMismatch(f"expected TxV with V >= 2, got shape {lp.shape}")
        if np.any(np.isnan(lp)) or np.any(lp == np.inf):
            raise NonFiniteValue("log-probabilities must be finite or -inf")
        row_norm = np.logaddexp.reduce(lp, axis=1)
        if np.any(np.abs(row_norm) > _ROW_NORM_TOL):
            worst = float(np.abs(row_norm).max())
            raise SchemaError(f"rows must log-sum-exp to 0, worst deviation {worst:g}")
        if not self.frame_rate > 0:
            raise DimensionMismatch(f"frame_rate must be > 0, got {self.frame_rate}")
        object.__setattr__(self, "log_probs", lp)

    @property
    def frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def vocab(self) -> int:
        return self.log_probs.shape[1]


@dataclass(frozen=True)
class TokenSpan:
    token_id: int
    first_frame: int
    last_frame: int


@dataclass(frozen=True)
class Alignment:
    """A per-frame token path plus the frame extent of every emitted token."""

    frame_path: tuple[int, ...]
    token_spans: tuple[TokenSpan, ...]

    @classmethod
    def from_frame_path(cls, path) -> "Alignment":
        path = tuple(int(t) for t in path)
        spans = []
        start = 0
        for i in range(1, len(path) + 1):
            if i == len(path) or path[i] != path[start]:
                if path[start] != BLANK:
                    spans.append(TokenSpan(path[start], start, i - 1))
                start = i
        return cls(path, tuple(spans))

    @property
    def tokens(self) -> tuple[int, ...]:
        return tuple(s.token_id for s in self.token_spans)


def greedy_decode(post: PosteriorMatrix) -> tuple[list[int], Alignment]:
    """Best-path decoding: per-frame argmax, then the collapse rule.

    Returns the decoded token ids and an Alignment whose spans record each
    token's argmax-run extent. An all-blank path yields an empty token list.
    """
    path = np.argmax(post.log_probs, axis=1)
    alignment = Alignment.from_frame_path(path)
    return list(alignment.tokens), alignment


def _min_frames(target: list[int]) -> int:
    repeats = sum(1 for a, b in zip(target, target[1:]) if a == b)
    return len(target) + repeats


def ctc_loss(post: PosteriorMatrix, target) -> float:
    """Negative log-likelihood of ``target`` under the posterior matrix.

    Sums, in log space, over every frame path that collapses to the target
    (forward algorithm over the blank-interleaved target).
    """
    target = [int(t) for t in target]
    if any(t == BLANK for t in target):
        raise ValueError("target must not contain the blank token")
    if any(not 0 < t < post.vocab for t in target):
        raise ValueError("target token id outside the vocabulary")
    if _min_frames(target) > post.frames:
        raise TargetTooLong(
            f"target needs {_min_frames(target)} frames, posterior has {post.frames}"
        )

    lp = post.log_probs
    # Extended sequence [blank, t1, blank, t2, ..., blank]; 2K+1 states.
    ext = [BLANK]
    for tok in target:
        ext.extend((tok, BLANK))
    n_states = len(ext)
    ext_ids = np.array(ext)

    alpha = np.full(n_states, -np.inf)
    alpha[0] = lp[0, BLANK]
    if n_states > 1:
        alpha[1] = lp[0, ext[1]]

    # States allowed to receive from s-2: non-blank and different label there.
    skip_ok = np.zeros(n_states, dtype=bool)
    for s in range(2, n_states):
        skip_ok[s] = ext[s] != BLANK and ext[s] != ext[s - 2]

    for t in range(1, post.frames):
        stay = alpha
        step = np.concatenate(([-np.inf], alpha[:-1]))
        skip = np.concatenate(([-np.inf, -np.inf], alpha[:-2]))
        skip = np.where(skip_ok, skip, -np.inf)
        alpha = np.logaddexp(np.logaddexp(stay, step), skip) + lp[t, ext_ids]

    total = alpha[-1] if n_states == 1 else np.logaddexp(alpha[-1], alpha[-2])
    return float(-total) + 0.0


def token_spans_to_time(
    alignment: Alignment, frame_rate: float
) -> list[tuple[int, TimeSpan]]:
    """Convert frame extents to seconds: frames [f0, f1] -> [f0/r, (f1+1)/r)."""
    if not frame_rate > 0:
        raise DimensionMismatch(f"frame_rate must be > 0, got {frame_rate}")
    return [
        (s.token_id, TimeSpan(s.first_frame / frame_rate, (s.last_frame + 1) / frame_rate))
        for s in alignment.token_spans
    ]


def write_posteriors(post: PosteriorMatrix, path: str | Path) -> None:
    """Write the LSTK v2 posterior format (L=1 stack plus a vocab-size field)."""
    header = _HEADER.pack(
        MAGIC, VERSION_POSTERIOR, 1, post.frames, post.vocab, post.frame_rate
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(struct.pack("<I", post.vocab))
        fh.write(np.ascontiguousarray(post.log_probs, dtype="<f4").tobytes())


def read_posteriors(path: str | Path) -> PosteriorMatrix:
    with open(path, "rb") as fh:
        version, layers, frames, dim, frame_rate = _read_header(fh, path)
        if version != VERSION_POSTERIOR:
            raise UnsupportedVersion(
                f"{path}: version {version}, expected {VERSION_POSTERIOR}"
            )
        if layers != 1:
            raise DimensionMismatch(f"{path}: posterior files must have L=1, got {layers}")
        raw = fh.read(4)
        if len(raw) < 4:
            raise BadMagic(f"{path}: truncated vocab extension")
        (vocab,) = struct.unpack("<I", raw)
        if vocab != dim:
            raise DimensionMismatch(f"{path}: vocab field {vocab} != D {dim}")
        data = _read_payload(fh, path, layers, frames, dim)
    return PosteriorMatrix(data[0].astype(np.float64), frame_rate)


def load_posteriors_jsonl(path: str | Path) -> dict[str, PosteriorMatrix]:
    """Debug format: one {"id", "log_probs", "frame_rate"} object per line."""
    out: dict[str, PosteriorMatrix] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            lp = np.array(
                [[-np.inf if v is None else float(v) for v in r] for r in row["log_probs"]]
            )
            out[row["id"]] = PosteriorMatrix(lp, float(row.get("frame_rate", 50.0)))
    return out
