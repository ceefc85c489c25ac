"""Cascaded monolayer networks with delta-rule training.

The four-layer transparent network is split into three monolayer networks,
one per adjacent layer pair, each trained separately on its own targets.
Per-sample online updates follow the plain delta rule

    delta_k = S_k * (1 - S_k) * (desired_k - S_k)
    dW_jk   = mu * S_j * delta_k
    W_jk(t+1) = W_jk(t) + dW_jk

with the activation threshold trained as a weight on a constant input of -1.
Weights for pairs that are not linked in the topology are pinned to zero and
never updated, which is what keeps every neuron's meaning intact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .documents import DocumentInstance
from .features import ElementVector, build_extractors, extract_all
from .topology import NetworkConfig, Topology, config_from_dict, config_to_dict

MODEL_FORMAT_VERSION = 1

_SIG_LO = np.nextafter(0.0, 1.0)
_SIG_HI = np.nextafter(1.0, 0.0)


class ModelFormatError(ValueError):
    """Raised for unreadable or inconsistent model files."""


def sigmoid(x):
    """Logistic function 1 / (1 + exp(-x)), kept strictly inside (0, 1)."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("sigmoid requires finite input")
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    out = np.clip(out, _SIG_LO, _SIG_HI)
    return float(out) if np.ndim(x) == 0 else out


def sigmoid_prime_from_output(s: float) -> float:
    """Derivative of the logistic expressed through its own output: s * (1 - s)."""
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"output value {s} outside the open interval (0, 1)")
    return s * (1.0 - s)


def neuron_activation(inputs, weights, threshold: float) -> float:
    """sigmoid(sum(W_ij * e_i) - theta) for one output neuron."""
    inputs = np.asarray(inputs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if inputs.shape != weights.shape:
        raise ValueError(f"dimension mismatch: {inputs.shape} inputs vs {weights.shape} weights")
    return float(sigmoid(float(inputs @ weights) - float(threshold)))


@dataclass
class LayerNetwork:
    """One input layer / output layer pair with a link mask."""

    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    weights: np.ndarray     # (n_in, n_out); entries for non-linked pairs stay 0
    thresholds: np.ndarray  # (n_out,)
    mask: np.ndarray        # bool (n_in, n_out)

    @classmethod
    def create(
        cls,
        input_names: Sequence[str],
        output_names: Sequence[str],
        links: Iterable[tuple[str, str]],
        rng: np.random.Generator,
    ) -> "LayerNetwork":
        input_names = tuple(input_names)
        output_names = tuple(output_names)
        in_index = {n: i for i, n in enumerate(input_names)}
        out_index = {n: i for i, n in enumerate(output_names)}
        mask = np.zeros((len(input_names), len(output_names)), dtype=bool)
        for src, dst in links:
            mask[in_index[src], out_index[dst]] = True
        weights = rng.uniform(-0.5, 0.5, size=mask.shape) * mask
        thresholds = np.zeros(len(output_names))
        return cls(input_names, output_names, weights, thresholds, mask)

    @property
    def linked_weight_count(self) -> int:
        return int(self.mask.sum())

    def forward(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.shape != (len(self.input_names),):
            raise ValueError(
                f"dimension mismatch: got {inputs.shape}, expected ({len(self.input_names)},)"
            )
        return sigmoid(inputs @ self.weights - self.thresholds)


def forward_layer(net: LayerNetwork, inputs) -> np.ndarray:
    """Apply one monolayer network to an input vector."""
    return net.forward(np.asarray(inputs, dtype=float))


@dataclass(frozen=True)
class TrainingStats:
    epochs: int
    samples: int
    update_passes: int    # one per sample per epoch
    weight_updates: int   # linked-weight applications, excludes thresholds
    final_mse: float


def train_nn1(
    net: LayerNetwork,
    samples: Sequence[tuple[Sequence[float], Sequence[float]]],
    mu: float = 0.5,
    epsilon: float = 0.01,
    max_epochs: int = 1000,
) -> TrainingStats:
    """Online delta-rule training of one monolayer network.

    Stops when an epoch's mean squared error drops below epsilon or the epoch
    cap is reached. Thresholds learn as bias weights on a constant -1 input.
    """
    if not samples:
        raise ValueError("sample list must be non-empty")
    xs = np.asarray([x for x, _ in samples], dtype=float)
    ts = np.asarray([t for _, t in samples], dtype=float)
    if xs.shape[1] != len(net.input_names) or ts.shape[1] != len(net.output_names):
        raise ValueError("sample dimensions do not match the network")
    if np.any(ts < 0.0) or np.any(ts > 1.0):
        raise ValueError("targets must lie in [0, 1]")
    linked = net.linked_weight_count
    passes = 0
    updates = 0
    mse = float("inf")
    epoch = 0
    for epoch in range(1, max_epochs + 1):
        squared = 0.0
        for x, t in zip(xs, ts):
            s = net.forward(x)
            err = t - s
            squared += float(np.mean(err * err))
            delta = s * (1.0 - s) * err
            net.weights += mu * np.outer(x, delta) * net.mask
            net.thresholds += mu * -1.0 * delta
            passes += 1
            updates += linked
        mse = squared / len(xs)
        if mse < epsilon:
            break
    return TrainingStats(
        epochs=epoch,
        samples=len(xs),
        update_passes=passes,
        weight_updates=updates,
        final_mse=mse,
    )


@dataclass(frozen=True)
class ActivationTrace:
    """Named activations of all four layers after one forward propagation."""

    elements: dict[str, float]
    substructures: dict[str, float]
    structures: dict[str, float]
    documents: dict[str, float]

    def layer(self, name: str) -> dict[str, float]:
        return getattr(self, name)


@dataclass(frozen=True)
class TnnTrainingSummary:
    stats: tuple[TrainingStats, TrainingStats, TrainingStats]
    class_counts: Mapping[str, int]

    @property
    def total_update_passes(self) -> int:
        return sum(s.update_passes for s in self.stats)

    @property
    def total_weight_updates(self) -> int:
        return sum(s.weight_updates for s in self.stats)

    @property
    def trained_documents(self) -> int:
        return sum(self.class_counts.values())


@dataclass
class TnnModel:
    """Topology-shaped cascade of three monolayer networks."""

    config: NetworkConfig
    nets: tuple[LayerNetwork, LayerNetwork, LayerNetwork]
    seed: int
    training: TnnTrainingSummary | None = None

    @classmethod
    def create(cls, config: NetworkConfig, seed: int = 0) -> "TnnModel":
        rng = np.random.default_rng(seed)
        topology = config.topology
        nets = tuple(
            LayerNetwork.create(inp, out, topology.links_between(inp, out), rng)
            for inp, out in topology.layer_pairs()
        )
        return cls(config=config, nets=nets, seed=seed)

    @property
    def topology(self) -> Topology:
        return self.config.topology

    def build_extractors(self):
        return build_extractors(self.config.extractors)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TnnModel):
            return NotImplemented
        return model_to_dict(self) == model_to_dict(other)

    def save(self, path: str | Path) -> None:
        save_model(self, path)

    @classmethod
    def load(cls, path: str | Path) -> "TnnModel":
        model = load_model(path)
        if not isinstance(model, cls):
            raise ModelFormatError(f"{path} does not hold a tnn model")
        return model


def _element_array(topology: Topology, vector: ElementVector | Mapping[str, float]) -> np.ndarray:
    values = vector.values if isinstance(vector, ElementVector) else vector
    missing = set(topology.elements) - set(values)
    if missing:
        raise ValueError(f"element vector incomplete, missing: {sorted(missing)}")
    extra = set(values) - set(topology.elements)
    if extra:
        raise ValueError(f"element vector has unknown entries: {sorted(extra)}")
    return np.asarray([values[name] for name in topology.elements], dtype=float)


def forward_tnn(model: TnnModel, elements: ElementVector | Mapping[str, float]) -> ActivationTrace:
    """Propagate element activations up through the three networks."""
    x = _element_array(model.topology, elements)
    sub = forward_layer(model.nets[0], x)
    struct = forward_layer(model.nets[1], sub)
    doc = forward_layer(model.nets[2], struct)
    topo = model.topology
    return ActivationTrace(
        elements=dict(zip(topo.elements, x.tolist())),
        substructures=dict(zip(topo.substructures, sub.tolist())),
        structures=dict(zip(topo.structures, struct.tolist())),
        documents=dict(zip(topo.documents, doc.tolist())),
    )


def _binary_targets(names: tuple[str, ...], present: frozenset[str]) -> list[float]:
    return [1.0 if name in present else 0.0 for name in names]


def train_tnn(
    model: TnnModel,
    docs: Sequence[DocumentInstance],
    extractors: Mapping | None = None,
) -> TnnTrainingSummary:
    """Train the three networks separately on fully labeled documents.

    Each network gets ground-truth inputs from the layer below (teacher
    forcing), so the three training problems stay independent; the learned
    weights then drive the full cascade.
    """
    if not docs:
        raise ValueError("training corpus is empty")
    for doc in docs:
        if doc.labels is None:
            raise ValueError(f"document '{doc.id}' is missing labels")
    topo = model.topology
    ex = extractors if extractors is not None else model.build_extractors()
    element_rows = [
        _element_array(topo, extract_all(ex, doc)).tolist() for doc in docs
    ]
    sub_rows = [_binary_targets(topo.substructures, doc.labels.substructures) for doc in docs]
    struct_rows = [_binary_targets(topo.structures, doc.labels.structures) for doc in docs]
    class_rows = [
        _binary_targets(topo.documents, frozenset([doc.labels.document_class]))
        for doc in docs
    ]
    hp = model.config.hyperparams
    stats = (
        train_nn1(model.nets[0], list(zip(element_rows, sub_rows)),
                  hp.mu, hp.epsilon, hp.max_epochs),
        train_nn1(model.nets[1], list(zip(sub_rows, struct_rows)),
                  hp.mu, hp.epsilon, hp.max_epochs),
        train_nn1(model.nets[2], list(zip(struct_rows, class_rows)),
                  hp.mu, hp.epsilon, hp.max_epochs),
    )
    counts: dict[str, int] = {name: 0 for name in topo.documents}
    for doc in docs:
        counts[doc.labels.document_class] += 1
    summary = TnnTrainingSummary(stats=stats, class_counts=counts)
    model.training = summary
    return summary


# --- serialization -----------------------------------------------------------

def _stats_to_dict(stats: TrainingStats) -> dict:
    return {
        "epochs": stats.epochs,
        "samples": stats.samples,
        "update_passes": stats.update_passes,
        "weight_updates": stats.weight_updates,
        "final_mse": stats.final_mse,
    }


def _stats_from_dict(payload: Mapping) -> TrainingStats:
    return TrainingStats(
        epochs=int(payload["epochs"]),
        samples=int(payload["samples"]),
        update_passes=int(payload["update_passes"]),
        weight_updates=int(payload["weight_updates"]),
        final_mse=float(payload["final_mse"]),
    )


def model_to_dict(model: TnnModel) -> dict:
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "tnn",
        "config": config_to_dict(model.config),
        "seed": model.seed,
        "layer_networks": [
            {
                "inputs": list(net.input_names),
                "outputs": list(net.output_names),
                "weights": net.weights.tolist(),
                "thresholds": net.thresholds.tolist(),
            }
            for net in model.nets
        ],
        "training": None,
    }
    if model.training is not None:
        payload["training"] = {
            "class_counts": dict(model.training.class_counts),
            "stats": [_stats_to_dict(s) for s in model.training.stats],
        }
    return payload


def model_from_dict(payload: Mapping) -> TnnModel:
    if payload.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {payload.get('format_version')!r}"
        )
    if payload.get("kind") != "tnn":
        raise ModelFormatError(f"expected kind 'tnn', found {payload.get('kind')!r}")
    config = config_from_dict(payload["config"])
    raw_nets = payload.get("layer_networks", [])
    pairs = config.topology.layer_pairs()
    if len(raw_nets) != len(pairs):
        raise ModelFormatError(f"expected {len(pairs)} layer networks, found {len(raw_nets)}")
    nets = []
    for raw, (inp, out) in zip(raw_nets, pairs):
        weights = np.asarray(raw["weights"], dtype=float)
        thresholds = np.asarray(raw["thresholds"], dtype=float)
        if tuple(raw["inputs"]) != inp or tuple(raw["outputs"]) != out:
            raise ModelFormatError("layer network names disagree with the topology")
        if weights.shape != (len(inp), len(out)) or thresholds.shape != (len(out),):
            raise ModelFormatError(
                f"matrix shape {weights.shape} disagrees with topology layers "
                f"({len(inp)}, {len(out)})"
            )
        in_index = {n: i for i, n in enumerate(inp)}
        out_index = {n: i for i, n in enumerate(out)}
        mask = np.zeros(weights.shape, dtype=bool)
        for src, dst in config.topology.links_between(inp, out):
            mask[in_index[src], out_index[dst]] = True
        if np.any(weights[~mask] != 0.0):
            raise ModelFormatError("non-zero weight on a pair the topology does not link")
        nets.append(LayerNetwork(inp, out, weights, thresholds, mask))
    training = None
    if payload.get("training") is not None:
        raw_training = payload["training"]
        training = TnnTrainingSummary(
            stats=tuple(_stats_from_dict(s) for s in raw_training["stats"]),
            class_counts={k: int(v) for k, v in raw_training["class_counts"].items()},
        )
    return TnnModel(
        config=config,
        nets=tuple(nets),
        seed=int(payload.get("seed", 0)),
        training=training,
    )


def save_model(model: TnnModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> TnnModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return model_from_dict(payload)
