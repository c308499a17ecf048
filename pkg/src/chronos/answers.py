"""Typed answer values and the normalization rules used to compare them.

An answer is one of six value kinds (entity reference, date, number,
number with unit, free text, boolean). Annotations additionally use the
eight answer-type labels; the mapping between the two lives here so every
comparison in the system goes through one code path.
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass
from datetime import date

from .errors import ParseError

ANSWER_KINDS = ("entity", "date", "number", "number_unit", "text", "boolean")

# Annotation-facing answer type labels.
ANSWER_TYPES = (
    "Entity",
    "LongAnswer",
    "Unanswerable",
    "Date",
    "Number",
    "NumberWithUnit",
    "ShortPhrase",
    "Binary",
)

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def normalize_surface(text: str) -> str:
    """Canonical form for alias and text matching.

    Lowercases, folds diacritics (NFKD, combining marks stripped) and
    collapses any run of whitespace or punctuation into a single space, so
    "EIFFEL  Tower", "eiffel tower" and "Éiffel-tower" all coincide while
    "Tourde France" stays distinct from "Tour de France".
    """
    decomposed = unicodedata.normalize("NFKD", text)
    stripped = "".join(ch for ch in decomposed if not unicodedata.combining(ch))
    return " ".join(_WORD_RE.findall(stripped.casefold()))


def canonical_unit(unit: str) -> str:
    return " ".join(_WORD_RE.findall(unit.casefold()))


@dataclass(frozen=True)
class AnswerValue:
    """One answer object: an entity id, date, number, number+unit, text, or bool."""

    kind: str
    value: object
    unit: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ANSWER_KINDS:
            raise ValueError(f"unknown answer kind {self.kind!r}")
        if self.kind == "number_unit" and not self.unit:
            raise ValueError("number_unit answers require a unit")

    def canonical(self) -> tuple:
        """Hashable key; equal keys mean equal answers under `answers_equal`."""
        if self.kind == "date":
            return ("date", _as_date(self.value).isoformat())
        if self.kind == "number":
            return ("number", float(self.value))  # type: ignore[arg-type]
        if self.kind == "number_unit":
            return ("number_unit", float(self.value), canonical_unit(self.unit or ""))  # type: ignore[arg-type]
        if self.kind == "text":
            return ("text", normalize_surface(str(self.value)))
        if self.kind == "boolean":
            return ("boolean", bool(self.value))
        return ("entity", str(self.value))

    def sort_key(self) -> tuple[str, str]:
        return (self.kind, str(self.canonical()))


def _as_date(value: object) -> date:
    if isinstance(value, date):
        return value
    if isinstance(value, str):
        return date.fromisoformat(value)
    raise ValueError(f"cannot interpret {value!r} as a date")


def _numbers_close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-12)


def answers_equal(a: AnswerValue | None, b: AnswerValue | None) -> bool:
    """Type-aware equality: ids for entities, day precision for dates,
    relative tolerance 1e-9 for numbers, canonical units, normalized text."""
    if a is None or b is None:
        return a is None and b is None
    if a.kind != b.kind:
        return False
    if a.kind == "number":
        return _numbers_close(float(a.value), float(b.value))  # type: ignore[arg-type]
    if a.kind == "number_unit":
        return canonical_unit(a.unit or "") == canonical_unit(b.unit or "") and _numbers_close(
            float(a.value), float(b.value)  # type: ignore[arg-type]
        )
    return a.canonical() == b.canonical()


def answer_type_for(value: AnswerValue | None) -> str:
    """Default answer-type label for a value; None means Unanswerable."""
    if value is None:
        return "Unanswerable"
    return {
        "entity": "Entity",
        "date": "Date",
        "number": "Number",
        "number_unit": "NumberWithUnit",
        "text": "ShortPhrase",
        "boolean": "Binary",
    }[value.kind]


def answer_to_json(value: AnswerValue | None) -> dict | None:
    if value is None:
        return None
    raw = value.value
    if value.kind == "date":
        raw = _as_date(raw).isoformat()
    elif value.kind in ("number", "number_unit"):
        raw = float(raw)  # type: ignore[arg-type]
    payload: dict = {"kind": value.kind, "value": raw}
    if value.unit is not None:
        payload["unit"] = value.unit
    return payload


def answer_from_json(obj: dict | None, where: str = "answer") -> AnswerValue | None:
    if obj is None:
        return None
    try:
        kind = obj["kind"]
        raw = obj["value"]
    except (TypeError, KeyError) as exc:
        raise ParseError(f"{where}: answer object needs 'kind' and 'value'") from exc
    if kind not in ANSWER_KINDS:
        raise ParseError(f"{where}: unknown answer kind {kind!r}")
    if kind == "date":
        try:
            raw = _as_date(raw)
        except ValueError as exc:
            raise ParseError(f"{where}: bad date {raw!r}") from exc
    if kind in ("number", "number_unit"):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ParseError(f"{where}: {kind} answer needs a numeric value")
        raw = float(raw)
    if kind == "boolean" and not isinstance(raw, bool):
        raise ParseError(f"{where}: boolean answer needs true/false")
    unit = obj.get("unit")
    if kind == "number_unit" and not unit:
        raise ParseError(f"{where}: number_unit answer needs a unit")
    try:
        return AnswerValue(kind=kind, value=raw, unit=unit)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from exc
