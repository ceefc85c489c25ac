"""Fully connected baseline network.

Same input and output layers as the transparent cascade, but the two middle
layers are plain hidden layers: dense weights, no link mask, no named
concepts. Trained end to end with backpropagation of the gradient on a
squared-error loss, so it can rank document classes but exposes no structure
output and no refinement hook.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .documents import DocumentInstance
from .features import ElementVector, build_extractors, extract_all
from .network import MODEL_FORMAT_VERSION, ModelFormatError, _element_array, sigmoid
from .topology import NetworkConfig, config_from_dict, config_to_dict


@dataclass(frozen=True)
class MlpTrainingStats:
    epochs: int
    samples: int
    backward_passes: int
    final_mse: float
    class_counts: Mapping[str, int] = field(default_factory=dict)


@dataclass
class MlpModel:
    """Dense 4-layer perceptron sized from the topology's layer counts."""

    config: NetworkConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    seed: int
    training: MlpTrainingStats | None = None

    @classmethod
    def create(cls, config: NetworkConfig, seed: int = 0) -> "MlpModel":
        rng = np.random.default_rng(seed)
        layers = config.topology.layers()
        sizes = [len(names) for names in layers]
        weights = [
            rng.uniform(-0.5, 0.5, size=(sizes[i], sizes[i + 1])) for i in range(3)
        ]
        biases = [np.zeros(sizes[i + 1]) for i in range(3)]
        return cls(config=config, weights=weights, biases=biases, seed=seed)

    @property
    def class_names(self) -> tuple[str, ...]:
        return self.config.topology.documents

    def build_extractors(self):
        return build_extractors(self.config.extractors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MlpModel):
            return NotImplemented
        return mlp_to_dict(self) == mlp_to_dict(other)

    def save(self, path: str | Path) -> None:
        save_mlp(self, path)

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        return load_mlp(path)


def _forward_all(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    a1 = sigmoid(x @ model.weights[0] + model.biases[0])
    a2 = sigmoid(a1 @ model.weights[1] + model.biases[1])
    a3 = sigmoid(a2 @ model.weights[2] + model.biases[2])
    return a1, a2, a3


def forward_mlp(model: MlpModel, elements: ElementVector | Mapping[str, float]) -> np.ndarray:
    """Class activation vector, ordered like the topology's document layer."""
    x = _element_array(model.config.topology, elements)
    return _forward_all(model, x)[2]


def gradients(
    model: MlpModel, x: np.ndarray, target: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray], np.ndarray, float]:
    """One backward pass: dLoss/dW and dLoss/db for loss = 0.5 * sum((y - t)^2)."""
    x = np.asarray(x, dtype=float)
    target = np.asarray(target, dtype=float)
    a1, a2, a3 = _forward_all(model, x)
    loss = 0.5 * float(np.sum((a3 - target) ** 2))
    d3 = (a3 - target) * a3 * (1.0 - a3)
    d2 = (model.weights[2] @ d3) * a2 * (1.0 - a2)
    d1 = (model.weights[1] @ d2) * a1 * (1.0 - a1)
    grad_w = [np.outer(x, d1), np.outer(a1, d2), np.outer(a2, d3)]
    grad_b = [d1, d2, d3]
    return grad_w, grad_b, a3, loss


def train_mlp(
    model: MlpModel,
    docs: Sequence[DocumentInstance],
    extractors: Mapping | None = None,
) -> MlpTrainingStats:
    """Online gradient descent on class labels only; hidden layers get no targets."""
    if not docs:
        raise ValueError("training corpus is empty")
    for doc in docs:
        if doc.labels is None:
            raise ValueError(f"document '{doc.id}' is missing labels")
    topo = model.config.topology
    ex = extractors if extractors is not None else model.build_extractors()
    xs = np.asarray(
        [_element_array(topo, extract_all(ex, doc)) for doc in docs], dtype=float
    )
    class_index = {name: i for i, name in enumerate(topo.documents)}
    ts = np.zeros((len(docs), len(topo.documents)))
    for row, doc in enumerate(docs):
        ts[row, class_index[doc.labels.document_class]] = 1.0
    counts: dict[str, int] = {name: 0 for name in topo.documents}
    for doc in docs:
        counts[doc.labels.document_class] += 1
    stats = train_mlp_on_samples(model, xs, ts, class_counts=counts)
    return stats


def train_mlp_on_samples(
    model: MlpModel,
    xs: np.ndarray,
    ts: np.ndarray,
    class_counts: Mapping[str, int] | None = None,
) -> MlpTrainingStats:
    """Backpropagation over raw (input, target) rows; one backward pass per sample."""
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if len(xs) == 0:
        raise ValueError("sample set is empty")
    hp = model.config.hyperparams
    backward = 0
    mse = float("inf")
    epoch = 0
    for epoch in range(1, hp.max_epochs + 1):
        squared = 0.0
        for x, t in zip(xs, ts):
            grad_w, grad_b, y, _ = gradients(model, x, t)
            squared += float(np.mean((t - y) ** 2))
            for i in range(3):
                model.weights[i] -= hp.mu * grad_w[i]
                model.biases[i] -= hp.mu * grad_b[i]
            backward += 1
        mse = squared / len(xs)
        if mse < hp.epsilon:
            break
    stats = MlpTrainingStats(
        epochs=epoch,
        samples=len(xs),
        backward_passes=backward,
        final_mse=mse,
        class_counts=dict(class_counts or {}),
    )
    model.training = stats
    return stats


def mlp_to_dict(model: MlpModel) -> dict:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "mlp",
        "config": config_to_dict(model.config),
        "seed": model.seed,
        "layers": [
            {"weights": w.tolist(), "biases": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
        "training": None,
    }
    if model.training is not None:
        payload["training"] = {
            "epochs": model.training.epochs,
            "samples": model.training.samples,
            "backward_passes": model.training.backward_passes,
            "final_mse": model.training.final_mse,
            "class_counts": dict(model.training.class_counts),
        }
    return payload


def mlp_from_dict(payload: Mapping) -> MlpModel:
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {payload.get('format_version')!r}"
        )
    if payload.get("kind") != "mlp":
        raise ModelFormatError(f"expected kind 'mlp', found {payload.get('kind')!r}")
    config = config_from_dict(payload["config"])
    sizes = [len(names) for names in config.topology.layers()]
    raw_layers = payload.get("layers", [])
    if len(raw_layers) != 3:
        raise ModelFormatError(f"expected 3 dense layers, found {len(raw_layers)}")
    weights = []
    biases = []
    for i, raw in enumerate(raw_layers):
        w = np.asarray(raw["weights"], dtype=float)
        b = np.asarray(raw["biases"], dtype=float)
        if w.shape != (sizes[i], sizes[i + 1]) or b.shape != (sizes[i + 1],):
            raise ModelFormatError(
                f"matrix shape {w.shape} disagrees with topology layers "
                f"({sizes[i]}, {sizes[i + 1]})"
            )
        weights.append(w)
        biases.append(b)
    training = None
    if payload.get("training") is not None:
        raw_training = payload["training"]
        training = MlpTrainingStats(
            epochs=int(raw_training["epochs"]),
            samples=int(raw_training["samples"]),
            backward_passes=int(raw_training["backward_passes"]),
            final_mse=float(raw_training["final_mse"]),
            class_counts={
                k: int(v) for k, v in raw_training.get("class_counts", {}).items()
            },
        )
    return MlpModel(
        config=config,
        weights=weights,
        biases=biases,
        seed=int(payload.get("seed", 0)),
        training=training,
    )


def save_mlp(model: MlpModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(mlp_to_dict(model), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_mlp(path: str | Path) -> MlpModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return mlp_from_dict(payload)
