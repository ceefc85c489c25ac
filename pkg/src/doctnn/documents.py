"""Token-layout document model and the labeled-corpus file format.

A document is a flat list of text tokens with normalized bounding boxes
(page fractions, top-left origin). Ground-truth labels, when present, name
the document class plus the structures and substructures that were actually
placed on the page.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .topology import Topology

_COORD_SLACK = 1e-9
_DECIMAL_SEPARATORS = frozenset(".,")


class CorpusError(ValueError):
    """Raised for malformed corpus files or invariant violations."""


class TokenKind(str, Enum):
    ALPHABETIC = "alphabetic"
    NUMERIC = "numeric"
    ALPHANUMERIC = "alphanumeric"
    SYMBOL = "symbol"


@lru_cache(maxsize=8192)
def token_kind(text: str) -> TokenKind:
    """Classify a token's content. Pure and total over non-empty strings."""
    if not text:
        raise ValueError("token text must be non-empty")
    has_digit = any(c.isdigit() for c in text)
    has_alpha = any(c.isalpha() for c in text)
    if has_digit and all(c.isdigit() or c in _DECIMAL_SEPARATORS for c in text):
        return TokenKind.NUMERIC
    if has_alpha and all(c.isalpha() for c in text):
        return TokenKind.ALPHABETIC
    if has_alpha and has_digit:
        return TokenKind.ALPHANUMERIC
    return TokenKind.SYMBOL


@dataclass(frozen=True)
class Token:
    """One text token with its bounding box in page fractions."""

    text: str
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("field 'text': must be non-empty")
        for name in ("x", "y"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"field '{name}': {v} outside [0, 1]")
        for name in ("width", "height"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"field '{name}': {v} outside (0, 1]")
        if self.x + self.width > 1.0 + _COORD_SLACK:
            raise ValueError(f"field 'x': x+width = {self.x + self.width} exceeds 1")
        if self.y + self.height > 1.0 + _COORD_SLACK:
            raise ValueError(f"field 'y': y+height = {self.y + self.height} exceeds 1")

    @property
    def kind(self) -> TokenKind:
        return token_kind(self.text)

    @property
    def right(self) -> float:
        return self.x + self.width

    @property
    def bottom(self) -> float:
        return self.y + self.height


@dataclass(frozen=True)
class GroundTruth:
    """Three-level labels: class name plus the structure/substructure sets present."""

    document_class: str
    structures: frozenset[str] = field(default_factory=frozenset)
    substructures: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class DocumentInstance:
    id: str
    tokens: tuple[Token, ...] = ()
    labels: GroundTruth | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")


def _validate_labels(labels: GroundTruth, doc_id: str, topology: "Topology") -> None:
    if labels.document_class not in topology.documents:
        raise CorpusError(
            f"document '{doc_id}' field 'class': unknown name '{labels.document_class}'"
        )
    for name in sorted(labels.structures):
        if name not in topology.structures:
            raise CorpusError(f"document '{doc_id}' field 'structures': unknown name '{name}'")
    for name in sorted(labels.substructures):
        if name not in topology.substructures:
            raise CorpusError(f"document '{doc_id}' field 'substructures': unknown name '{name}'")


def _parse_token(raw: object, doc_id: str, index: int) -> Token:
    if not isinstance(raw, dict):
        raise CorpusError(f"document '{doc_id}' token {index}: expected an object")
    missing = {"text", "x", "y", "w", "h"} - raw.keys()
    if missing:
        raise CorpusError(
            f"document '{doc_id}' token {index}: missing field(s) {sorted(missing)}"
        )
    try:
        return Token(
            text=str(raw["text"]),
            x=float(raw["x"]),
            y=float(raw["y"]),
            width=float(raw["w"]),
            height=float(raw["h"]),
        )
    except (TypeError, ValueError) as exc:
        raise CorpusError(f"document '{doc_id}' token {index}: {exc}") from exc


def _parse_document(raw: object, topology: "Topology") -> DocumentInstance:
    if not isinstance(raw, dict) or "id" not in raw:
        raise CorpusError("document entry missing 'id'")
    doc_id = str(raw["id"])
    if not doc_id:
        raise CorpusError("document entry has empty 'id'")
    tokens = tuple(
        _parse_token(t, doc_id, i) for i, t in enumerate(raw.get("tokens", []))
    )
    labels = None
    if raw.get("labels") is not None:
        lab = raw["labels"]
        if not isinstance(lab, dict) or "class" not in lab:
            raise CorpusError(f"document '{doc_id}' field 'labels': missing 'class'")
        labels = GroundTruth(
            document_class=str(lab["class"]),
            structures=frozenset(str(s) for s in lab.get("structures", [])),
            substructures=frozenset(str(s) for s in lab.get("substructures", [])),
        )
        _validate_labels(labels, doc_id, topology)
    return DocumentInstance(id=doc_id, tokens=tokens, labels=labels)


def load_corpus(path: str | Path, topology: "Topology") -> list[DocumentInstance]:
    """Load and validate a corpus file against the active topology."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusError(f"parse error in {path}: {exc}") from exc
    if not isinstance(payload, dict) or "documents" not in payload:
        raise CorpusError(f"parse error in {path}: top-level 'documents' key missing")
    docs = [_parse_document(raw, topology) for raw in payload["documents"]]
    seen: set[str] = set()
    for doc in docs:
        if doc.id in seen:
            raise CorpusError(f"document '{doc.id}': duplicate id")
        seen.add(doc.id)
    return docs


def corpus_to_dict(docs: Iterable[DocumentInstance]) -> dict:
    entries = []
    for doc in docs:
        entry: dict = {
            "id": doc.id,
            "tokens": [
                {"text": t.text, "x": t.x, "y": t.y, "w": t.width, "h": t.height}
                for t in doc.tokens
            ],
        }
        if doc.labels is not None:
            entry["labels"] = {
                "class": doc.labels.document_class,
                "structures": sorted(doc.labels.structures),
                "substructures": sorted(doc.labels.substructures),
            }
        entries.append(entry)
    return {"documents": entries}


def save_corpus(docs: Iterable[DocumentInstance], path: str | Path) -> None:
    """Write the corpus file format; loading it back yields an equal corpus."""
    Path(path).write_text(
        json.dumps(corpus_to_dict(docs), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
