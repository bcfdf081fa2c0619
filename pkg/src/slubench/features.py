"""Layer-feature file format and frozen-representation plumbing.

LSTK binary layout (little-endian):

    bytes 0..3    magic b"LSTK"
    u32           version (1 = layer stack, 2 = posterior file, see ctc.py)
    u32 u32 u32   L, T, D
    f32           frame_rate (frames per second)
    payload       L*T*D float32, row-major

Version 2 files insert one extra u32 (vocab size, equal to D) between the
header and the payload; they hold per-frame log-probabilities rather than
hidden activations and are read through ``ctc.read_posteriors``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    EmptyInput,
    LayerCountMismatch,
    NonFiniteValue,
    UnsupportedVersion,
)

MAGIC = b"LSTK"
VERSION_STACK = 1
VERSION_POSTERIOR = 2
DEFAULT_FRAME_RATE = 50.0

_HEADER = struct.Struct("<4sIIIIf")


@dataclass(frozen=True)
class LayerStack:
    """L x T x D float32 tensor of per-layer, per-frame features."""

    data: np.ndarray
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or min(data.shape) < 1:
            raise DimensionMismatch(f"expected non-empty LxTxD array, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteValue("layer stack contains NaN or infinity")
        if not self.frame_rate > 0:
            raise DimensionMismatch(f"frame_rate must be > 0, got {self.frame_rate}")
        object.__setattr__(self, "data", data)

    @property
    def layers(self) -> int:
        return self.data.shape[0]

    @property
    def frames(self) -> int:
        return self.data.shape[1]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class AggregationWeights:
    """Unconstrained per-layer logits; the layer weights are their softmax."""

    logits: np.ndarray

    def __post_init__(self):
        logits = np.asarray(self.logits, dtype=np.float64)
        if logits.ndim != 1 or logits.size < 1:
            raise DimensionMismatch(f"expected 1-D logits, got shape {logits.shape}")
        if not np.all(np.isfinite(logits)):
            raise NonFiniteValue("aggregation logits contain NaN or infinity")
        object.__setattr__(self, "logits", logits)

    @property
    def weights(self) -> np.ndarray:
        shifted = self.logits - self.logits.max()
        exp = np.exp(shifted)
        return exp / exp.sum()


def _read_header(fh, path) -> tuple[int, int, int, int, float]:
    raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise BadMagic(f"{path}: truncated header")
    magic, version, layers, frames, dim, frame_rate = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if min(layers, frames, dim) < 1 or not frame_rate > 0:
        raise DimensionMismatch(
            f"{path}: bad header dims L={layers} T={frames} D={dim} rate={frame_rate}"
        )
    return version, layers, frames, dim, frame_rate


def _read_payload(fh, path, layers: int, frames: int, dim: int) -> np.ndarray:
    expected = layers * frames * dim * 4
    raw = fh.read()
    if len(raw) != expected:
        raise DimensionMismatch(
            f"{path}: payload holds {len(raw)} bytes, header implies {expected}"
        )
    return np.frombuffer(raw, dtype="<f4").reshape(layers, frames, dim)


def read_layerstack(path: str | Path) -> LayerStack:
    with open(path, "rb") as fh:
        version, layers, frames, dim, frame_rate = _read_header(fh, path)
        if version != VERSION_STACK:
            raise UnsupportedVersion(f"{path}: version {version}, expected {VERSION_STACK}")
        data = _read_payload(fh, path, layers, frames, dim)
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"{path}: payload contains NaN or infinity")
    return LayerStack(data.copy(), frame_rate)


def write_layerstack(stack: LayerStack, path: str | Path) -> None:
    header = _HEADER.pack(
        MAGIC, VERSION_STACK, stack.layers, stack.frames, stack.dim, stack.frame_rate
    )
    payload = np.ascontiguousarray(stack.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def weighted_sum(stack: LayerStack, agg: AggregationWeights) -> np.ndarray:
    """Softmax-weighted combination of the layers; returns a T x D float64 matrix."""
    if agg.logits.size != stack.layers:
        raise LayerCountMismatch(
            f"{agg.logits.size} logits for a stack with {stack.layers} layers"
        )
    return np.tensordot(agg.weights, stack.data.astype(np.float64), axes=1)


def mean_pool(features: np.ndarray) -> np.ndarray:
    """Average a T x D matrix over time."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[0] < 1:
        raise EmptyInput(f"expected non-empty TxD matrix, got shape {features.shape}")
    return features.mean(axis=0)
