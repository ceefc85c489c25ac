"""Four-layer topology and the network configuration file.

Neurons are named concepts arranged elements -> substructures -> structures
-> documents; links only join adjacent layers. The default inventory wires
ten layout extractors through mid-level groupings up to the three
administrative document classes. The last layer sees every structure so a
class can also learn counter-evidence (a totals line argues against
"letter" as much as a paragraph argues for it).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .features import EXTRACTOR_KINDS, ExtractorSpec

CONFIG_FORMAT_VERSION = 1

LAYER_NAMES = ("elements", "substructures", "structures", "documents")


class TopologyError(ValueError):
    """Raised when a topology or config file violates the layer/link rules."""


@dataclass(frozen=True)
class Topology:
    elements: tuple[str, ...]
    substructures: tuple[str, ...]
    structures: tuple[str, ...]
    documents: tuple[str, ...]
    links: frozenset[tuple[str, str]]

    def __post_init__(self) -> None:
        layers = self.layers()
        all_names: list[str] = []
        for layer_name, names in zip(LAYER_NAMES, layers):
            if len(set(names)) != len(names):
                raise TopologyError(f"duplicate neuron name in layer '{layer_name}'")
            all_names.extend(names)
        if len(set(all_names)) != len(all_names):
            raise TopologyError("neuron names must be unique across layers")
        layer_of = {name: i for i, names in enumerate(layers) for name in names}
        for src, dst in sorted(self.links):
            if src not in layer_of or dst not in layer_of:
                raise TopologyError(f"link ({src} -> {dst}) references unknown neuron")
            if layer_of[dst] != layer_of[src] + 1:
                raise TopologyError(f"link ({src} -> {dst}) does not join adjacent layers")
        has_in = {dst for _, dst in self.links}
        has_out = {src for src, _ in self.links}
        for names in layers[1:]:
            for name in names:
                if name not in has_in:
                    raise TopologyError(f"neuron '{name}' has no incoming link")
        for names in layers[:-1]:
            for name in names:
                if name not in has_out:
                    raise TopologyError(f"neuron '{name}' has no outgoing link")

    def layers(self) -> tuple[tuple[str, ...], ...]:
        return (self.elements, self.substructures, self.structures, self.documents)

    def layer_pairs(self) -> tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]:
        layers = self.layers()
        return tuple(zip(layers, layers[1:]))

    def links_between(self, inputs: tuple[str, ...], outputs: tuple[str, ...]) -> set[tuple[str, str]]:
        wanted_in, wanted_out = set(inputs), set(outputs)
        return {(s, d) for s, d in self.links if s in wanted_in and d in wanted_out}

    def upstream_elements(self, name: str) -> frozenset[str]:
        """Element neurons with a directed path to the given neuron."""
        incoming: dict[str, set[str]] = {}
        for src, dst in self.links:
            incoming.setdefault(dst, set()).add(src)
        frontier = {name}
        seen: set[str] = set()
        while frontier:
            node = frontier.pop()
            for src in incoming.get(node, ()):
                if src not in seen:
                    seen.add(src)
                    frontier.add(src)
        return frozenset(seen & set(self.elements))


@dataclass(frozen=True)
class Hyperparams:
    """Online training settings: correction step, stability threshold, epoch cap."""

    mu: float = 0.5
    epsilon: float = 0.01
    max_epochs: int = 1000


@dataclass(frozen=True)
class NetworkConfig:
    topology: Topology
    extractors: Mapping[str, ExtractorSpec]
    hyperparams: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self) -> None:
        missing = set(self.topology.elements) - set(self.extractors)
        if missing:
            raise TopologyError(f"element(s) without extractor spec: {sorted(missing)}")
        for name, spec in self.extractors.items():
            if spec.kind not in EXTRACTOR_KINDS:
                raise TopologyError(f"element '{name}': unknown extractor kind '{spec.kind}'")


DEFAULT_ELEMENTS = (
    "amount_area",
    "designation_zone",
    "code_area",
    "vertical_alignment",
    "horizontal_alignment",
    "keywords_total",
    "keywords_address",
    "text_block",
    "date_indicator",
    "isolated_block",
)

DEFAULT_SUBSTRUCTURES = (
    "numeric_column_group",
    "totals_line",
    "address_block",
    "date_line",
    "paragraph",
    "tabular_grid",
    "signature_block",
)

DEFAULT_STRUCTURES = (
    "invoice_body",
    "table",
    "total",
    "address",
    "signature",
    "letter_body",
    "header",
)

DEFAULT_DOCUMENTS = ("invoice", "form", "letter")

_ELEMENT_LINKS = {
    "amount_area": ("numeric_column_group", "totals_line"),
    "designation_zone": ("tabular_grid",),
    "code_area": ("tabular_grid",),
    "vertical_alignment": ("numeric_column_group", "tabular_grid", "address_block", "paragraph"),
    "horizontal_alignment": ("numeric_column_group", "totals_line", "tabular_grid"),
    "keywords_total": ("totals_line",),
    "keywords_address": ("address_block",),
    "text_block": ("paragraph", "address_block"),
    "date_indicator": ("date_line",),
    "isolated_block": ("signature_block",),
}

_SUBSTRUCTURE_LINKS = {
    "numeric_column_group": ("table", "total", "invoice_body"),
    # a letter body is prose *without* a totals line under it; the counter-link
    # lets the body neuron learn that distinction
    "totals_line": ("total", "invoice_body", "letter_body"),
    "address_block": ("address", "header"),
    "date_line": ("header",),
    "paragraph": ("letter_body",),
    "tabular_grid": ("table", "invoice_body"),
    "signature_block": ("signature",),
}


def default_topology() -> Topology:
    links: set[tuple[str, str]] = set()
    for src, dsts in _ELEMENT_LINKS.items():
        links.update((src, dst) for dst in dsts)
    for src, dsts in _SUBSTRUCTURE_LINKS.items():
        links.update((src, dst) for dst in dsts)
    for structure in DEFAULT_STRUCTURES:
        links.update((structure, doc) for doc in DEFAULT_DOCUMENTS)
    return Topology(
        elements=DEFAULT_ELEMENTS,
        substructures=DEFAULT_SUBSTRUCTURES,
        structures=DEFAULT_STRUCTURES,
        documents=DEFAULT_DOCUMENTS,
        links=frozenset(links),
    )


def default_config() -> NetworkConfig:
    # Each default element name doubles as its extractor kind.
    extractors = {name: ExtractorSpec(kind=name) for name in DEFAULT_ELEMENTS}
    return NetworkConfig(topology=default_topology(), extractors=extractors)


def config_to_dict(config: NetworkConfig) -> dict:
    return {
        "format_version": CONFIG_FORMAT_VERSION,
        "layers": {
            "elements": list(config.topology.elements),
            "substructures": list(config.topology.substructures),
            "structures": list(config.topology.structures),
            "documents": list(config.topology.documents),
        },
        "links": sorted([src, dst] for src, dst in config.topology.links),
        "extractors": {
            name: {"kind": spec.kind, "params": dict(spec.params)}
            for name, spec in sorted(config.extractors.items())
        },
        "hyperparams": {
            "mu": config.hyperparams.mu,
            "epsilon": config.hyperparams.epsilon,
            "max_epochs": config.hyperparams.max_epochs,
        },
    }


def config_from_dict(payload: Mapping) -> NetworkConfig:
    if payload.get("format_version") != CONFIG_FORMAT_VERSION:
        raise TopologyError(
            f"unsupported config format_version {payload.get('format_version')!r}"
        )
    layers = payload.get("layers")
    if not isinstance(layers, Mapping):
        raise TopologyError("config missing 'layers' section")
    try:
        topology = Topology(
            elements=tuple(layers["elements"]),
            substructures=tuple(layers["substructures"]),
            structures=tuple(layers["structures"]),
            documents=tuple(layers["documents"]),
            links=frozenset((src, dst) for src, dst in payload.get("links", [])),
        )
    except KeyError as exc:
        raise TopologyError(f"config layers missing {exc}") from exc
    extractors = {
        name: ExtractorSpec(kind=entry["kind"], params=dict(entry.get("params", {})))
        for name, entry in payload.get("extractors", {}).items()
    }
    hp = payload.get("hyperparams", {})
    hyperparams = Hyperparams(
        mu=float(hp.get("mu", 0.5)),
        epsilon=float(hp.get("epsilon", 0.01)),
        max_epochs=int(hp.get("max_epochs", 1000)),
    )
    return NetworkConfig(topology=topology, extractors=extractors, hyperparams=hyperparams)


def load_config(path: str | Path) -> NetworkConfig:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TopologyError(f"parse error in {path}: {exc}") from exc
    return config_from_dict(payload)


def save_config(config: NetworkConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
