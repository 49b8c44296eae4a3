"""Answer values: extraction from model output, normalization, and equality.

Answers come in three kinds:

* numeric   -- stored as an exact ``decimal.Decimal``, rounded half-away-from-zero
               to three decimal places and canonicalized (no trailing zeros, no
               exponent notation), so ``0.066666`` and ``0.0670`` both normalize
               to ``0.067`` and compare equal.
* choice    -- a single uppercase letter ``A``-``E``.
* text      -- trimmed, internal whitespace collapsed to single spaces,
               case-preserved; no further canonicalization.

Extraction scans a completion for answer declarations of the form
``The answer is ...`` (case-insensitive). The *last* declaration wins, because
refinement prompts restate hints early in the text. If no declaration parses,
numeric extraction falls back to the last number in the text and choice
extraction to the last standalone option letter; text answers have no fallback.
Currency symbols, comma thousands separators, and trailing units are stripped
from numeric candidates. If nothing parses the result is ``None`` (absent).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP
from enum import Enum

from .errors import RadkitError


class InvalidValue(RadkitError):
    """A raw value that cannot be parsed under the requested task kind."""


class TaskKind(Enum):
    """What shape of answer a task expects."""

    NUMERIC = "numeric"
    MULTIPLE_CHOICE = "multiple_choice"
    TEXT = "text"


CHOICE_LETTERS = "ABCDE"

_THREE_PLACES = Decimal("0.001")


def _canonical_decimal(value: Decimal) -> Decimal:
    """Round to 3 decimal places (ties away from zero) and canonicalize."""
    if not value.is_finite():
        raise InvalidValue(f"non-finite numeric value: {value}")
    try:
        rounded = value.quantize(_THREE_PLACES, rounding=ROUND_HALF_UP)
    except InvalidOperation as exc:
        raise InvalidValue(f"numeric value {value} is too large to normalize") from exc
    if rounded == 0:
        return Decimal(0)
    rounded = rounded.normalize()
    if rounded.as_tuple().exponent > 0:
        # normalize() turns 2500000 into 2.5E+6; undo that for integers.
        rounded = rounded.quantize(Decimal(1))
    return rounded


@dataclass(frozen=True)
class Answer:
    """One normalized answer value of a given kind."""

    kind: TaskKind
    value: Decimal | str

    def __post_init__(self) -> None:
        if self.kind is TaskKind.NUMERIC:
            if not isinstance(self.value, Decimal):
                raise InvalidValue("numeric answers store a Decimal payload")
            try:
                exact = self.value == self.value.quantize(_THREE_PLACES)
            except InvalidOperation as exc:
                raise InvalidValue(f"numeric answer {self.value} is too large") from exc
            if not exact:
                raise InvalidValue(
                    f"numeric answer {self.value} has more than 3 decimal places"
                )
        elif self.kind is TaskKind.MULTIPLE_CHOICE:
            if not (isinstance(self.value, str) and self.value in CHOICE_LETTERS):
                raise InvalidValue(f"choice answers are single letters A-E, got {self.value!r}")
        elif self.kind is TaskKind.TEXT:
            if not isinstance(self.value, str) or not self.value:
                raise InvalidValue("text answers are non-empty strings")
            if self.value != " ".join(self.value.split()):
                raise InvalidValue("text answers must be trimmed and single-spaced")
        else:  # pragma: no cover - enum is closed
            raise InvalidValue(f"unknown task kind {self.kind!r}")

    @property
    def numeric_value(self) -> Decimal:
        if self.kind is not TaskKind.NUMERIC:
            raise InvalidValue("not a numeric answer")
        assert isinstance(self.value, Decimal)
        return self.value

    def render(self) -> str:
        """Display string: numeric without trailing zeros, letter, or text."""
        return str(self.value)

    @staticmethod
    def numeric(raw: Decimal | int | float | str) -> "Answer":
        return normalize(raw, TaskKind.NUMERIC)

    @staticmethod
    def choice(raw: str) -> "Answer":
        return normalize(raw, TaskKind.MULTIPLE_CHOICE)

    @staticmethod
    def text(raw: str) -> "Answer":
        return normalize(raw, TaskKind.TEXT)


@dataclass(frozen=True)
class RawCompletion:
    """One raw model completion plus generation metadata."""

    text: str
    finish_reason: str = "stop"
    token_count: int = 0

    def __post_init__(self) -> None:
        if self.token_count < 0:
            raise ValueError("token_count must be nonnegative")
        if not self.text and self.finish_reason == "stop":
            raise ValueError(
                "empty completion text requires a truncation/error finish_reason"
            )


_CURRENCY = "$€£"

_NUMBER_RE = re.compile(r"[-+]?(?:\d[\d,]*(?:\.\d+)?|\.\d+)")
_DECLARATION_RE = re.compile(r"the answer is", re.IGNORECASE)
# A single option letter, optionally parenthesized, followed by a break.
_CHOICE_TAIL_RE = re.compile(r"\(?\s*([A-Ea-e])\s*\)?(?=[\s.,:;!?)]|$)")
_CHOICE_ANY_RE = re.compile(r"\(([A-Ea-e])\)|\b([A-E])\b")


def _clean_numeric_token(token: str) -> str:
    token = token.strip()
    sign = ""
    if token[:1] in "+-":
        sign, token = token[:1], token[1:]
    token = token.lstrip(_CURRENCY).replace(",", "")
    token = token.rstrip("%").rstrip(".")
    return sign + token


def normalize(raw_value: Decimal | int | float | str, kind: TaskKind) -> Answer:
    """Parse and canonicalize a raw value under ``kind``.

    Raises :class:`InvalidValue` when the value does not parse. Numeric strings
    tolerate surrounding whitespace, a currency symbol, comma separators, and a
    trailing percent sign or period.
    """
    if kind is TaskKind.NUMERIC:
        if isinstance(raw_value, Decimal):
            candidate = raw_value
        elif isinstance(raw_value, bool):
            raise InvalidValue("booleans are not numeric answers")
        elif isinstance(raw_value, int):
            candidate = Decimal(raw_value)
        elif isinstance(raw_value, float):
            candidate = Decimal(str(raw_value))
        elif isinstance(raw_value, str):
            cleaned = _clean_numeric_token(raw_value)
            if not cleaned:
                raise InvalidValue(f"cannot parse numeric answer from {raw_value!r}")
            try:
                candidate = Decimal(cleaned)
            except InvalidOperation as exc:
                raise InvalidValue(
                    f"cannot parse numeric answer from {raw_value!r}"
                ) from exc
        else:
            raise InvalidValue(f"unsupported numeric raw value {raw_value!r}")
        return Answer(TaskKind.NUMERIC, _canonical_decimal(candidate))

    if not isinstance(raw_value, str):
        raise InvalidValue(f"{kind.value} answers are parsed from strings")

    if kind is TaskKind.MULTIPLE_CHOICE:
        letter = raw_value.strip().strip("().").strip()
        if len(letter) == 1 and letter.upper() in CHOICE_LETTERS:
            return Answer(TaskKind.MULTIPLE_CHOICE, letter.upper())
        raise InvalidValue(f"cannot parse option letter from {raw_value!r}")

    # TEXT
    collapsed = " ".join(raw_value.split())
    if not collapsed:
        raise InvalidValue("text answer is empty after trimming")
    return Answer(TaskKind.TEXT, collapsed)


def answers_equal(a: Answer | None, b: Answer | None) -> bool:
    """Equality on normalized answers; ``None`` (absent) equals nothing."""
    if a is None or b is None:
        return False
    return a.kind is b.kind and a.value == b.value


def _try_numeric(token: str) -> Answer | None:
    try:
        return normalize(token, TaskKind.NUMERIC)
    except InvalidValue:
        return None


def _try_choice(token: str) -> Answer | None:
    try:
        return normalize(token, TaskKind.MULTIPLE_CHOICE)
    except InvalidValue:
        return None


def _declaration_tail(text: str) -> str | None:
    last = None
    for match in _DECLARATION_RE.finditer(text):
        last = match
    return text[last.end():] if last is not None else None


def _extract_numeric(text: str) -> Answer | None:
    tail = _declaration_tail(text)
    if tail is not None:
        match = _NUMBER_RE.search(tail)
        if match:
            parsed = _try_numeric(match.group())
            if parsed is not None:
                return parsed
    for match in reversed(_NUMBER_RE.findall(text)):
        parsed = _try_numeric(match)
        if parsed is not None:
            return parsed
    return None


def _extract_choice(text: str) -> Answer | None:
    tail = _declaration_tail(text)
    if tail is not None:
        match = _CHOICE_TAIL_RE.search(tail)
        if match:
            parsed = _try_choice(match.group(1))
            if parsed is not None:
                return parsed
    last: str | None = None
    for match in _CHOICE_ANY_RE.finditer(text):
        last = match.group(1) or match.group(2)
    return _try_choice(last) if last is not None else None


def _extract_text(text: str) -> Answer | None:
    tail = _declaration_tail(text)
    if tail is None:
        return None
    clause = tail.splitlines()[0] if tail.splitlines() else ""
    clause = clause.strip()
    if clause.endswith("."):
        clause = clause[:-1]
    try:
        return normalize(clause, TaskKind.TEXT)
    except InvalidValue:
        return None


def extract_answer(completion: RawCompletion, kind: TaskKind) -> Answer | None:
    """Extract the declared answer from a completion, or ``None`` if absent."""
    text = completion.text
    if not text:
        return None
    if kind is TaskKind.NUMERIC:
        return _extract_numeric(text)
    if kind is TaskKind.MULTIPLE_CHOICE:
        return _extract_choice(text)
    return _extract_text(text)


def answer_to_json(answer: Answer) -> dict:
    """JSON-friendly record for an answer."""
    return {"kind": answer.kind.value, "value": answer.render()}


def answer_from_json(record: dict) -> Answer:
    kind = TaskKind(record["kind"])
    return normalize(record["value"], kind)
