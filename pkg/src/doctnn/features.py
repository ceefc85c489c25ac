"""Element-layer activation extractors.

Every input neuron is backed by one extractor with up to three refinement
levels. Level 1 is the cheapest scan and the least precise; higher levels
re-run the cheaper level and tighten it with extra evidence, so for the
gated extractors a refined value can only confirm or cancel what level 1
saw, never invent new evidence. Work is metered in token visits so the
cost ordering between levels stays measurable.
"""
from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .documents import DocumentInstance, Token, TokenKind

ALIGN_TOL = 0.01            # page fraction, shared by row and column grouping
RIGHT_REGION_X = 0.5        # tokens with left edge here or beyond form the amount region
MIDDLE_BAND = (0.28, 0.52)  # designation candidates sit in this x band
LEFT_BAND_X = 0.25          # code candidates sit left of this
SHORT_TOKEN_LEN = 5
QTY_PRICE_REL_TOL = 1e-6
BOTTOM_BAND_Y = 0.8
ISOLATED_MAX_TOKENS = 4
ISOLATED_MIN_GAP = 0.05
TOTAL_KEYWORDS = ("vat", "total")
TOTAL_KEYWORDS_EXTENDED = ("tax", "vat", "amount", "net pay", "total")
ADDRESS_KEYWORDS = (
    "mr", "mrs", "name", "postal code", "town", "country", "street", "codex", "bp",
)
DATE_PATTERN = re.compile(r"^(\d{2})([/-])(\d{2})\2(\d{2}|\d{4})$")

LevelFn = Callable[[DocumentInstance, "Tally"], float]


class Tally:
    """Token-visit meter; every scan of a token sequence is charged here."""

    __slots__ = ("visits",)

    def __init__(self) -> None:
        self.visits = 0

    def scan(self, tokens: Sequence[Token]) -> list[Token]:
        out = list(tokens)
        self.visits += len(out)
        return out


def _fold(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(c for c in decomposed if not unicodedata.combining(c)).casefold()


def _norm(text: str) -> str:
    return _fold(text).strip(".,:;!?()[]\"'")


def _numeric_value(text: str) -> float | None:
    try:
        return float(text.replace(",", "."))
    except ValueError:
        return None


def _cluster(tokens: Sequence[Token], key: Callable[[Token], float],
             tol: float = ALIGN_TOL) -> list[list[Token]]:
    """Single-linkage 1-D grouping: a gap above tol starts a new group."""
    ordered = sorted(tokens, key=key)
    groups: list[list[Token]] = []
    for tok in ordered:
        if groups and key(tok) - key(groups[-1][-1]) <= tol:
            groups[-1].append(tok)
        else:
            groups.append([tok])
    return groups


def _rows(tokens: Sequence[Token], tol: float = ALIGN_TOL) -> list[list[Token]]:
    return [sorted(g, key=lambda t: t.x) for g in _cluster(tokens, lambda t: t.y, tol)]


def _columns(tokens: Sequence[Token], tol: float = ALIGN_TOL) -> list[list[Token]]:
    return _cluster(tokens, lambda t: t.x, tol)


def _column_x(column: Sequence[Token]) -> float:
    return sum(t.x for t in column) / len(column)


def _is_short_wordlike(tok: Token) -> bool:
    return len(tok.text) <= SHORT_TOKEN_LEN and tok.kind in (
        TokenKind.ALPHABETIC, TokenKind.ALPHANUMERIC,
    )


# --- amount area ------------------------------------------------------------

def _amount_region(doc: DocumentInstance, tally: Tally, right_x: float) -> list[Token]:
    return [t for t in tally.scan(doc.tokens) if t.x >= right_x]


def _amount_levels(params: Mapping) -> tuple[LevelFn, ...]:
    right_x = float(params.get("right_region_x", RIGHT_REGION_X))
    tol = float(params.get("align_tol", ALIGN_TOL))
    rel_tol = float(params.get("product_rel_tol", QTY_PRICE_REL_TOL))

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        region = _amount_region(doc, tally, right_x)
        if not region:
            return 0.0
        numeric = [t for t in tally.scan(region) if t.kind is TokenKind.NUMERIC]
        return len(numeric) / len(region)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        base = level1(doc, tally)
        if base == 0.0:
            return 0.0
        numeric = [t for t in _amount_region(doc, tally, right_x)
                   if t.kind is TokenKind.NUMERIC]
        vertical_ok = any(len(g) >= 2 for g in _columns(tally.scan(numeric), tol))
        wide_rows = sum(1 for r in _rows(tally.scan(numeric), tol) if len(r) >= 2)
        return base if vertical_ok and wide_rows >= 2 else 0.0

    def level3(doc: DocumentInstance, tally: Tally) -> float:
        base = level2(doc, tally)
        if base == 0.0:
            return 0.0
        numeric = [t for t in _amount_region(doc, tally, right_x)
                   if t.kind is TokenKind.NUMERIC]
        cols = [g for g in _columns(tally.scan(numeric), tol) if len(g) >= 2]
        cols.sort(key=_column_x)
        row_of: dict[int, int] = {}
        for ri, row in enumerate(_rows(tally.scan(numeric), tol)):
            for tok in row:
                row_of[id(tok)] = ri
        per_col: list[dict[int, float]] = []
        for col in cols:
            values: dict[int, float] = {}
            for tok in col:
                v = _numeric_value(tok.text)
                if v is not None:
                    values.setdefault(row_of[id(tok)], v)
            per_col.append(values)
        # quantity * price = amount across any x-ordered column triple
        for i in range(len(cols)):
            for j in range(i + 1, len(cols)):
                for k in range(j + 1, len(cols)):
                    shared = per_col[i].keys() & per_col[j].keys() & per_col[k].keys()
                    if not shared:
                        continue
                    ok = sum(
                        1 for r in shared
                        if math.isclose(per_col[i][r] * per_col[j][r], per_col[k][r],
                                        rel_tol=rel_tol, abs_tol=1e-9)
                    )
                    if ok * 2 >= len(shared):
                        return base
        return 0.0

    return (level1, level2, level3)


# --- designation zone -------------------------------------------------------

def _designation_levels(params: Mapping) -> tuple[LevelFn, ...]:
    lo, hi = params.get("middle_band", MIDDLE_BAND)
    tol = float(params.get("align_tol", ALIGN_TOL))

    def band(doc: DocumentInstance, tally: Tally) -> list[Token]:
        return [t for t in tally.scan(doc.tokens) if lo <= t.x < hi]

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        tokens = band(doc, tally)
        if not tokens:
            return 0.0
        alpha = sum(1 for t in tokens if t.kind is TokenKind.ALPHABETIC)
        alnum = sum(1 for t in tokens if t.kind is TokenKind.ALPHANUMERIC)
        return (alpha + 0.5 * alnum) / len(tokens)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        base = level1(doc, tally)
        if base == 0.0:
            return 0.0
        aligned = any(len(g) >= 3 for g in _columns(band(doc, tally), tol))
        return base if aligned else 0.0

    def level3(doc: DocumentInstance, tally: Tally) -> float:
        base = level2(doc, tally)
        if base == 0.0:
            return 0.0
        tokens = band(doc, tally)
        band_lo = min(t.x for t in tokens)
        band_hi = max(t.x for t in tokens)
        code_left = False
        numeric_right = False
        for col in _columns(tally.scan(doc.tokens), tol):
            if len(col) < 2:
                continue
            cx = _column_x(col)
            if cx < band_lo - tol and all(_is_short_wordlike(t) for t in col):
                code_left = True
            if cx > band_hi + tol and all(t.kind is TokenKind.NUMERIC for t in col):
                numeric_right = True
        return base if code_left and numeric_right else 0.0

    return (level1, level2, level3)


# --- code area ----------------------------------------------------------------

def _code_levels(params: Mapping) -> tuple[LevelFn, ...]:
    left_x = float(params.get("left_band_x", LEFT_BAND_X))
    tol = float(params.get("align_tol", ALIGN_TOL))

    def band(doc: DocumentInstance, tally: Tally) -> list[Token]:
        return [t for t in tally.scan(doc.tokens) if t.x <= left_x]

    def candidate_column(doc: DocumentInstance, tally: Tally) -> list[Token]:
        short = [t for t in band(doc, tally) if _is_short_wordlike(t)]
        groups = [g for g in _columns(tally.scan(short), tol) if len(g) >= 3]
        return max(groups, key=len) if groups else []

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        tokens = band(doc, tally)
        if not tokens:
            return 0.0
        return sum(1 for t in tokens if _is_short_wordlike(t)) / len(tokens)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        base = level1(doc, tally)
        if base == 0.0:
            return 0.0
        return base if candidate_column(doc, tally) else 0.0

    def level3(doc: DocumentInstance, tally: Tally) -> float:
        base = level2(doc, tally)
        if base == 0.0:
            return 0.0
        column = candidate_column(doc, tally)
        cx = _column_x(column)
        for col in _columns(tally.scan(doc.tokens), tol):
            if len(col) >= 3 and _column_x(col) < cx - tol:
                return 0.0
        return base

    return (level1, level2, level3)


# --- alignment --------------------------------------------------------------

def _vertical_levels(params: Mapping) -> tuple[LevelFn, ...]:
    tol = float(params.get("align_tol", ALIGN_TOL))

    def justify_score(tokens: Sequence[Token], edge: Callable[[Token], float],
                      tally: Tally) -> float:
        scanned = tally.scan(tokens)
        if len(scanned) < 3:
            return 0.0
        best = 0
        for group in _cluster(scanned, edge, tol):
            if len(group) >= 3:
                best = max(best, len(group))
        return best / len(scanned)

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        return justify_score(doc.tokens, lambda t: t.x, tally)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        left = level1(doc, tally)
        right = justify_score(doc.tokens, lambda t: t.right, tally)
        return max(left, right)

    return (level1, level2)


def _horizontal_levels(params: Mapping) -> tuple[LevelFn, ...]:
    tol = float(params.get("align_tol", ALIGN_TOL))

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        scores = []
        for row in _rows(tally.scan(doc.tokens), tol):
            if len(row) < 3:
                continue
            gaps = [b.x - a.x for a, b in zip(row, row[1:])]
            mean = sum(gaps) / len(gaps)
            if mean <= 0.0:
                scores.append(0.0)
                continue
            var = sum((g - mean) ** 2 for g in gaps) / len(gaps)
            scores.append(max(0.0, 1.0 - var / (mean * mean)))
        return sum(scores) / len(scores) if scores else 0.0

    return (level1,)


# --- keyword groups -----------------------------------------------------------

def _keyword_hits(doc: DocumentInstance, keywords: Sequence[str],
                  tally: Tally, tol: float) -> dict[str, list[Token]]:
    """Map each matched keyword to the tokens anchoring it (bigrams use the first)."""
    singles = [k for k in keywords if " " not in k]
    bigrams = [k for k in keywords if " " in k]
    hits: dict[str, list[Token]] = {}
    for tok in tally.scan(doc.tokens):
        norm = _norm(tok.text)
        for kw in singles:
            if kw in norm:
                hits.setdefault(kw, []).append(tok)
    if bigrams:
        for row in _rows(tally.scan(doc.tokens), tol):
            for a, b in zip(row, row[1:]):
                joined = f"{_norm(a.text)} {_norm(b.text)}"
                for kw in bigrams:
                    if kw in joined:
                        hits.setdefault(kw, []).append(a)
    return hits


def _keywords_total_levels(params: Mapping) -> tuple[LevelFn, ...]:
    tol = float(params.get("align_tol", ALIGN_TOL))
    base_set = tuple(params.get("keywords", TOTAL_KEYWORDS))
    extended = tuple(params.get("keywords_extended", TOTAL_KEYWORDS_EXTENDED))

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        hits = _keyword_hits(doc, base_set, tally, tol)
        return 0.5 * len(hits)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        level1(doc, tally)
        hits = _keyword_hits(doc, extended, tally, tol)
        return min(1.0, len(hits) / 2.0)

    return (level1, level2)


def _keywords_address_levels(params: Mapping) -> tuple[LevelFn, ...]:
    tol = float(params.get("align_tol", ALIGN_TOL))
    keywords = tuple(params.get("keywords", ADDRESS_KEYWORDS))

    def is_keyword_token(tok: Token) -> bool:
        norm = _norm(tok.text)
        return any(kw in norm for kw in keywords if " " not in kw)

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        hits = _keyword_hits(doc, keywords, tally, tol)
        return min(1.0, len(hits) / 3.0)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        level1(doc, tally)
        hits = _keyword_hits(doc, keywords, tally, tol)
        if not hits:
            return 0.0
        rows = _rows(tally.scan(doc.tokens), tol)
        row_index = {id(t): i for i, row in enumerate(rows) for t in row}
        confirmed = 0
        for anchors in hits.values():
            found_value = False
            for anchor in anchors:
                ri = row_index[id(anchor)]
                nearby = rows[ri] + (rows[ri + 1] if ri + 1 < len(rows) else [])
                if any(t is not anchor and not is_keyword_token(t) for t in nearby):
                    found_value = True
                    break
            confirmed += 1 if found_value else 0
        return min(1.0, confirmed / 3.0)

    return (level1, level2)


# --- text block ----------------------------------------------------------------

def _text_block_levels(params: Mapping) -> tuple[LevelFn, ...]:
    tol = float(params.get("align_tol", ALIGN_TOL))
    min_rows = int(params.get("min_rows", 3))

    def majority_alpha(row: Sequence[Token]) -> bool:
        return sum(1 for t in row if t.kind is TokenKind.ALPHABETIC) * 2 > len(row)

    def best_run(doc: DocumentInstance, tally: Tally) -> list[list[Token]]:
        rows = _rows(tally.scan(doc.tokens), tol)
        best: list[list[Token]] = []
        run: list[list[Token]] = []
        for row in rows:
            if majority_alpha(row):
                run.append(row)
            else:
                run = []
                continue
            if len(run) >= min_rows and sum(map(len, run)) > sum(map(len, best)):
                best = list(run)
        return best

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        run = best_run(doc, tally)
        if not run:
            return 0.0
        tokens = [t for row in run for t in row]
        return sum(1 for t in tokens if t.kind is TokenKind.ALPHABETIC) / len(tokens)

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        base = level1(doc, tally)
        if base == 0.0:
            return 0.0
        run = best_run(doc, tally)
        lefts = sorted(row[0].x for row in run)
        biggest = 0
        count = 1
        for prev, cur in zip(lefts, lefts[1:]):
            count = count + 1 if cur - prev <= tol else 1
            biggest = max(biggest, count)
        biggest = max(biggest, 1)
        return base if biggest / len(run) >= 0.8 else 0.0

    return (level1, level2)


# --- date indicator -------------------------------------------------------------

def _date_levels(params: Mapping) -> tuple[LevelFn, ...]:
    def level1(doc: DocumentInstance, tally: Tally) -> float:
        for tok in tally.scan(doc.tokens):
            if DATE_PATTERN.match(tok.text):
                return 1.0
        return 0.0

    def level2(doc: DocumentInstance, tally: Tally) -> float:
        if level1(doc, tally) == 0.0:
            return 0.0
        for tok in tally.scan(doc.tokens):
            m = DATE_PATTERN.match(tok.text)
            if m and 1 <= int(m.group(1)) <= 31 and 1 <= int(m.group(3)) <= 12:
                return 1.0
        return 0.0

    return (level1, level2)


# --- isolated bottom cluster -----------------------------------------------------

def _isolated_levels(params: Mapping) -> tuple[LevelFn, ...]:
    band_y = float(params.get("bottom_band_y", BOTTOM_BAND_Y))
    max_tokens = int(params.get("max_tokens", ISOLATED_MAX_TOKENS))
    min_gap = float(params.get("min_gap", ISOLATED_MIN_GAP))

    def level1(doc: DocumentInstance, tally: Tally) -> float:
        tokens = tally.scan(doc.tokens)
        cluster = [t for t in tokens if t.y > band_y]
        if not cluster or len(cluster) > max_tokens:
            return 0.0
        above = [t for t in tokens if t.y <= band_y]
        if not above:
            return 1.0
        gap = min(t.y for t in cluster) - max(t.bottom for t in above)
        return 1.0 if gap >= min_gap else 0.0

    return (level1,)


# --- registry ----------------------------------------------------------------------

EXTRACTOR_KINDS: dict[str, Callable[[Mapping], tuple[LevelFn, ...]]] = {
    "amount_area": _amount_levels,
    "designation_zone": _designation_levels,
    "code_area": _code_levels,
    "vertical_alignment": _vertical_levels,
    "horizontal_alignment": _horizontal_levels,
    "keywords_total": _keywords_total_levels,
    "keywords_address": _keywords_address_levels,
    "text_block": _text_block_levels,
    "date_indicator": _date_levels,
    "isolated_block": _isolated_levels,
}


@dataclass(frozen=True)
class ExtractorSpec:
    """Config-file declaration: which extractor kind backs an element, with params."""

    kind: str
    params: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class ElementExtractor:
    name: str
    levels: tuple[LevelFn, ...]
    cost_rank: tuple[int, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.levels) <= 3:
            raise ValueError(f"extractor '{self.name}': 1 to 3 levels required")
        if len(self.cost_rank) != len(self.levels):
            raise ValueError(f"extractor '{self.name}': one cost rank per level")
        if any(b <= a for a, b in zip(self.cost_rank, self.cost_rank[1:])):
            raise ValueError(f"extractor '{self.name}': cost ranks must increase with level")

    @property
    def max_level(self) -> int:
        return len(self.levels)

    def evaluate(self, doc: DocumentInstance, level: int, tally: Tally | None = None) -> float:
        if not 1 <= level <= self.max_level:
            raise ValueError(
                f"extractor '{self.name}': level {level} not in 1..{self.max_level}"
            )
        value = self.levels[level - 1](doc, tally if tally is not None else Tally())
        return min(1.0, max(0.0, float(value)))

    def measure(self, doc: DocumentInstance, level: int) -> tuple[float, int]:
        """Evaluate and report the token-visit cost of doing so."""
        tally = Tally()
        value = self.evaluate(doc, level, tally)
        return value, tally.visits


def build_extractor(name: str, spec: ExtractorSpec) -> ElementExtractor:
    if spec.kind not in EXTRACTOR_KINDS:
        raise ValueError(f"unknown extractor kind '{spec.kind}' for element '{name}'")
    levels = EXTRACTOR_KINDS[spec.kind](spec.params)
    return ElementExtractor(name=name, levels=levels, cost_rank=tuple(range(1, len(levels) + 1)))


def build_extractors(specs: Mapping[str, ExtractorSpec]) -> dict[str, ElementExtractor]:
    return {name: build_extractor(name, spec) for name, spec in specs.items()}


@dataclass(frozen=True)
class ElementVector:
    """Activation in [0, 1] per element, plus the refinement level that produced it."""

    values: dict[str, float]
    level_used: dict[str, int]


def extract_all(
    extractors: Mapping[str, ElementExtractor],
    doc: DocumentInstance,
    level_overrides: Mapping[str, int] | None = None,
) -> ElementVector:
    """Evaluate every element at level 1 unless overridden."""
    overrides = dict(level_overrides or {})
    unknown = set(overrides) - set(extractors)
    if unknown:
        raise ValueError(f"unknown element name(s) in overrides: {sorted(unknown)}")
    values: dict[str, float] = {}
    levels: dict[str, int] = {}
    for name, extractor in extractors.items():
        level = overrides.get(name, 1)
        values[name] = extractor.evaluate(doc, level)
        levels[name] = level
    return ElementVector(values=values, level_used=levels)
