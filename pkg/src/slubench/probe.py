"""Lightweight prediction head for the classification tasks.

A probe is a linear layer over the mean-pooled, softmax-weighted layer
combination of a frozen feature stack. Sentiment uses a 3-way softmax with
cross-entropy; dialog acts use 18 independent sigmoids with binary
cross-entropy (mean over classes). Aggregation logits and the head are
trained jointly by full-batch gradient descent: deterministic, no minibatch
shuffling, no adaptive optimizer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import Manifest, SentimentLabel, TaskKind
from .errors import DimMismatch, LayerCountMismatch, MissingFeatures, SchemaError
from .features import AggregationWeights, LayerStack, read_layerstack
from .metrics import dac_f1, macro_f1

SENTIMENT_CLASSES = tuple(SentimentLabel)

_TASK_CLASSES = {TaskKind.SA: 3, TaskKind.DAC: 18}


@dataclass
class LinearProbe:
    task: TaskKind
    weights: np.ndarray  # C x D
    bias: np.ndarray  # C
    agg_logits: np.ndarray  # L

    def __post_init__(self):
        if self.task not in _TASK_CLASSES:
            raise SchemaError(f"probes support sa/dac, not {self.task.value}")
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        self.agg_logits = np.asarray(self.agg_logits, dtype=np.float64)
        expected_c = _TASK_CLASSES[self.task]
        if self.weights.ndim != 2 or self.weights.shape[0] != expected_c:
            raise DimMismatch(
                f"{self.task.value} head needs {expected_c} rows, "
                f"got shape {self.weights.shape}"
            )
        if self.bias.shape != (expected_c,):
            raise DimMismatch(f"bias shape {self.bias.shape} != ({expected_c},)")
        for block in (self.weights, self.bias, self.agg_logits):
            if not np.all(np.isfinite(block)):
                raise DimMismatch("probe parameters must be finite")

    @classmethod
    def zeros(cls, task: TaskKind, n_layers: int, dim: int) -> "LinearProbe":
        c = _TASK_CLASSES[task]
        return cls(task, np.zeros((c, dim)), np.zeros(c), np.zeros(n_layers))

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> "LinearProbe":
        return LinearProbe(
            self.task, self.weights.copy(), self.bias.copy(), self.agg_logits.copy()
        )


@dataclass(frozen=True)
class ProbeGradients:
    weights: np.ndarray
    bias: np.ndarray
    agg_logits: np.ndarray


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 200
    seed: int = 0
    weight_decay: float = 0.0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise SchemaError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise SchemaError(f"epochs must be >= 0, got {self.epochs}")
        if self.weight_decay < 0:
            raise SchemaError(f"weight decay must be >= 0, got {self.weight_decay}")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def _pooled_layers(probe: LinearProbe, stack: LayerStack) -> np.ndarray:
    if stack.layers != probe.agg_logits.size:
        raise LayerCountMismatch(
            f"probe has {probe.agg_logits.size} layer logits, stack has {stack.layers}"
        )
    if stack.dim != probe.weights.shape[1]:
        raise DimMismatch(
            f"probe expects dim {probe.weights.shape[1]}, stack has {stack.dim}"
        )
    # Mean over time first: pooling and layer aggregation commute.
    return stack.data.astype(np.float64).mean(axis=1)


def _logits(probe: LinearProbe, pooled_layers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    agg = AggregationWeights(probe.agg_logits)
    weights = agg.weights
    h = weights @ pooled_layers
    return probe.weights @ h + probe.bias, h


def forward(probe: LinearProbe, stack: LayerStack) -> np.ndarray:
    """Class probabilities: softmax for sentiment, per-class sigmoid for acts."""
    z, _ = _logits(probe, _pooled_layers(probe, stack))
    if probe.task is TaskKind.SA:
        return _softmax(z)
    return 1.0 / (1.0 + np.exp(-z))


def _label_vector(probe: LinearProbe, label: Any) -> np.ndarray:
    c = probe.num_classes
    if probe.task is TaskKind.SA:
        if isinstance(label, SentimentLabel):
            label = SENTIMENT_CLASSES.index(label)
        if not 0 <= int(label) < c:
            raise SchemaError(f"sentiment class {label} out of range")
        y = np.zeros(c)
        y[int(label)] = 1.0
        return y
    y = np.zeros(c)
    for cls in label:
        if not 0 <= int(cls) < c:
            raise SchemaError(f"dialog act id {cls} out of range")
        y[int(cls)] = 1.0
    return y


def loss_and_grad(
    probe: LinearProbe,
    batch: Sequence[tuple[LayerStack, Any]],
    weight_decay: float = 0.0,
) -> tuple[float, ProbeGradients]:
    """Mean loss over the batch and exact gradients for every parameter block.

    Sentiment: cross-entropy. Dialog acts: binary cross-entropy averaged over
    the 18 classes. Weight decay (0.5 * wd * ||W||^2) applies to the head
    weights only.
    """
    if len(batch) == 0:
        raise SchemaError("empty batch")
    agg = AggregationWeights(probe.agg_logits)
    a = agg.weights
    c = probe.num_classes
    total_loss = 0.0
    d_w = np.zeros_like(probe.weights)
    d_b = np.zeros_like(probe.bias)
    d_a = np.zeros_like(a)
    for stack, label in batch:
        pooled = _pooled_layers(probe, stack)  # L x D
        h = a @ pooled
        z = probe.weights @ h + probe.bias
        y = _label_vector(probe, label)
        if probe.task is TaskKind.SA:
            log_norm = np.logaddexp.reduce(z)
            total_loss += log_norm - float(z @ y)
            dz = np.exp(z - log_norm) - y
        else:
            # softplus(z) - y*z == -[y log s + (1-y) log (1-s)] for s = sigmoid(z)
            total_loss += float(np.mean(np.logaddexp(0.0, z) - y * z))
            dz = (1.0 / (1.0 + np.exp(-z)) - y) / c
        d_w += np.outer(dz, h)
        d_b += dz
        d_a += pooled @ (probe.weights.T @ dz)
    n = len(batch)
    loss = total_loss / n
    d_w /= n
    d_b /= n
    d_a /= n
    # Chain through the softmax parameterization of the layer weights.
    d_logits = a * (d_a - float(a @ d_a))
    if weight_decay > 0:
        loss += 0.5 * weight_decay * float(np.sum(probe.weights**2))
        d_w = d_w + weight_decay * probe.weights
    return loss, ProbeGradients(d_w, d_b, d_logits)


def predict_sa(probe: LinearProbe, stack: LayerStack) -> SentimentLabel:
    probs = forward(probe, stack)
    return SENTIMENT_CLASSES[int(np.argmax(probs))]


def predict_dac(probe: LinearProbe, stack: LayerStack) -> frozenset[int]:
    """Class ids whose sigmoid score strictly exceeds 0.5."""
    probs = forward(probe, stack)
    return frozenset(int(i) for i in np.nonzero(probs > 0.5)[0])


def _dev_score(probe: LinearProbe, dev: Sequence[tuple[LayerStack, Any]]) -> float:
    if not dev:
        return 0.0
    if probe.task is TaskKind.SA:
        hyp = [predict_sa(probe, stack) for stack, _ in dev]
        ref = [
            lab if isinstance(lab, SentimentLabel) else SENTIMENT_CLASSES[int(lab)]
            for _, lab in dev
        ]
        return macro_f1(hyp, ref, SENTIMENT_CLASSES).value
    hyp = [predict_dac(probe, stack) for stack, _ in dev]
    ref = [frozenset(int(i) for i in lab) for _, lab in dev]
    return dac_f1(hyp, ref, probe.num_classes).value


def load_training_data(
    manifest: Manifest, features_dir: str | Path
) -> dict[str, list[tuple[LayerStack, Any]]]:
    """Read <id>.lstk for every train/dev utterance, keyed by split."""
    features_dir = Path(features_dir)
    out: dict[str, list[tuple[LayerStack, Any]]] = {"train": [], "dev": []}
    for split in out:
        for utt in manifest.split(split):
            path = features_dir / f"{utt.id}.lstk"
            if not path.exists():
                raise MissingFeatures(utt.id)
            out[split].append((read_layerstack(path), utt.ref))
    return out


def train(
    manifest: Manifest,
    features_dir: str | Path,
    config: TrainConfig = TrainConfig(),
) -> tuple[LinearProbe, list[dict[str, float]]]:
    """Full-batch gradient descent; returns the probe with the best dev score.

    Deterministic: zero initialization, fixed utterance order, ordered
    gradient reduction. The log holds one row per epoch with the pre-update
    training loss and the post-update dev score.
    """
    if manifest.task not in _TASK_CLASSES:
        raise SchemaError(f"train supports sa/dac, not {manifest.task.value}")
    data = load_training_data(manifest, features_dir)
    train_set, dev_set = data["train"], data["dev"]
    if not train_set:
        raise SchemaError("manifest has no train utterances")
    first = train_set[0][0]
    for stack, _ in train_set + dev_set:
        if (stack.layers, stack.dim) != (first.layers, first.dim):
            raise DimMismatch("feature files disagree on layer count or dim")

    probe = LinearProbe.zeros(manifest.task, first.layers, first.dim)
    best_probe = probe.copy()
    best_score = _dev_score(probe, dev_set)
    log: list[dict[str, float]] = []
    for epoch in range(1, config.epochs + 1):
        loss, grads = loss_and_grad(probe, train_set, config.weight_decay)
        probe.weights -= config.learning_rate * grads.weights
        probe.bias -= config.learning_rate * grads.bias
        probe.agg_logits -= config.learning_rate * grads.agg_logits
        dev_score = _dev_score(probe, dev_set)
        log.append({"epoch": epoch, "loss": float(loss), "dev_score": dev_score})
        if dev_score > best_score:
            best_score = dev_score
            best_probe = probe.copy()
    return best_probe, log


def save_probe(probe: LinearProbe, path: str | Path) -> None:
    doc = {
        "task": probe.task.value,
        "classes": probe.num_classes,
        "dim": probe.weights.shape[1],
        "layers": probe.agg_logits.size,
        "weights": probe.weights.ravel().tolist(),
        "bias": probe.bias.tolist(),
        "agg_logits": probe.agg_logits.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_probe(path: str | Path) -> LinearProbe:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    weights = np.array(doc["weights"], dtype=np.float64).reshape(
        doc["classes"], doc["dim"]
    )
    return LinearProbe(
        TaskKind(doc["task"]),
        weights,
        np.array(doc["bias"], dtype=np.float64),
        np.array(doc["agg_logits"], dtype=np.float64),
    )
