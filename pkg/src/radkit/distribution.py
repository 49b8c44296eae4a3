"""Ordered, exact-rational probability distributions over answers.

An :class:`AnswerDistribution` keeps ``(answer, weight)`` entries in first-seen
insertion order with ``fractions.Fraction`` weights, so distributions born from
sample counts stay exact (e.g. a weight of 5/12 is the rational 5/12, not a
float). Entry order is semantic: it breaks mode ties in favor of the earliest
inserted answer.

``marginalize`` implements the one-step refinement update

    new_weight(y) = sum over previous answers y' of prior(y') * row[y'](y)

where each conditional row is itself an answer distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext, ROUND_HALF_UP
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .answers import Answer, answer_from_json, answer_to_json
from .errors import RadkitError


class EmptySampleSet(RadkitError):
    """No samples were provided to build a distribution from."""


class EmptyDistribution(RadkitError):
    """A distribution with no entries was constructed or queried."""


class MissingConditionalRow(RadkitError):
    """A prior answer has no conditional row in the table."""

    def __init__(self, answer: Answer):
        super().__init__(f"no conditional row for answer {answer.render()!r}")
        self.answer = answer


WeightLike = Fraction | int | str | Decimal | float

_SUM_SLACK = Fraction(1, 10**9)


def as_weight(value: WeightLike) -> Fraction:
    """Coerce a weight to an exact Fraction.

    Strings accept both "p/q" and decimal forms. Floats are read through their
    shortest decimal representation, so a literal ``0.4`` means exactly 2/5.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not weights")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, Decimal):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(str(value))
    raise TypeError(f"cannot interpret {value!r} as a weight")


@dataclass(frozen=True)
class AnswerDistribution:
    """Normalized weights over distinct answers, in insertion order."""

    entries: tuple[tuple[Answer, Fraction], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise EmptyDistribution("a distribution needs at least one entry")
        seen: set[Answer] = set()
        total = Fraction(0)
        for answer, weight in self.entries:
            if answer in seen:
                raise ValueError(f"duplicate answer {answer.render()!r}")
            seen.add(answer)
            if weight <= 0:
                raise ValueError(f"non-positive weight {weight} for {answer.render()!r}")
            total += weight
        if abs(total - 1) > _SUM_SLACK:
            raise ValueError(f"weights sum to {total}, not 1")

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[tuple[Answer, WeightLike]]
    ) -> "AnswerDistribution":
        """Build from (answer, weight) pairs, merging equal answers by summing."""
        merged: dict[Answer, Fraction] = {}
        for answer, weight in pairs:
            merged[answer] = merged.get(answer, Fraction(0)) + as_weight(weight)
        return cls(tuple(merged.items()))

    @property
    def support(self) -> tuple[Answer, ...]:
        return tuple(answer for answer, _ in self.entries)

    def weight(self, answer: Answer) -> Fraction:
        for candidate, weight in self.entries:
            if candidate == answer:
                return weight
        return Fraction(0)

    def as_dict(self) -> dict[Answer, Fraction]:
        return dict(self.entries)

    def restrict(self, keep: Sequence[Answer]) -> "AnswerDistribution":
        """Drop answers outside ``keep`` and renormalize, preserving order."""
        keep_set = set(keep)
        kept = [(a, w) for a, w in self.entries if a in keep_set]
        if not kept:
            raise EmptyDistribution("restriction removed every entry")
        total = sum(w for _, w in kept)
        return AnswerDistribution(tuple((a, w / total) for a, w in kept))


def from_samples(samples: Sequence[Answer]) -> AnswerDistribution:
    """Empirical distribution of a sample list, first-seen order, exact counts."""
    if not samples:
        raise EmptySampleSet("cannot form a distribution from zero samples")
    counts: dict[Answer, int] = {}
    for answer in samples:
        counts[answer] = counts.get(answer, 0) + 1
    n = len(samples)
    return AnswerDistribution(
        tuple((answer, Fraction(count, n)) for answer, count in counts.items())
    )


def mode(dist: AnswerDistribution) -> Answer:
    """Highest-weight answer; ties go to the earliest inserted."""
    best_answer, best_weight = dist.entries[0]
    for answer, weight in dist.entries[1:]:
        if weight > best_weight:
            best_answer, best_weight = answer, weight
    return best_answer


def prob_of(dist: AnswerDistribution, answer: Answer) -> Fraction:
    """Weight of ``answer`` in ``dist`` (zero when absent)."""
    return dist.weight(answer)


class ConditionalTable:
    """Map from previous answer to the conditional next-answer distribution."""

    def __init__(self, rows: Mapping[Answer, AnswerDistribution]):
        self._rows = dict(rows)

    def row(self, answer: Answer) -> AnswerDistribution:
        try:
            return self._rows[answer]
        except KeyError:
            raise MissingConditionalRow(answer) from None

    def answers(self) -> tuple[Answer, ...]:
        return tuple(self._rows)

    def items(self) -> tuple[tuple[Answer, AnswerDistribution], ...]:
        return tuple(self._rows.items())

    def __contains__(self, answer: Answer) -> bool:
        return answer in self._rows

    def __len__(self) -> int:
        return len(self._rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConditionalTable):
            return NotImplemented
        return self._rows == other._rows


def marginalize(
    prior: AnswerDistribution, conditionals: ConditionalTable
) -> AnswerDistribution:
    """One refinement step: mix the conditional rows by the prior weights.

    Output entries appear in first-appearance order: prior support first (for
    answers that receive mass), then new answers in the order the rows introduce
    them. Raises :class:`MissingConditionalRow` if a prior answer has no row.
    """
    weights: dict[Answer, Fraction] = {}
    for previous, prior_weight in prior.entries:
        row = conditionals.row(previous)
        for answer, conditional in row.entries:
            weights[answer] = weights.get(answer, Fraction(0)) + prior_weight * conditional
    return AnswerDistribution(tuple(weights.items()))


def total_variation(p: AnswerDistribution, q: AnswerDistribution) -> Fraction:
    """Total-variation distance: half the L1 gap over the union support."""
    p_support = set(p.support)
    union = list(p.support)
    union.extend(a for a in q.support if a not in p_support)
    gap = sum((abs(p.weight(a) - q.weight(a)) for a in union), Fraction(0))
    return gap / 2


def weight_decimal_string(weight: Fraction, places: int = 12) -> str:
    """Render a rational weight as a fixed-point decimal string."""
    with localcontext() as ctx:
        ctx.prec = places + 20
        value = Decimal(weight.numerator) / Decimal(weight.denominator)
        return str(value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def distribution_to_records(dist: AnswerDistribution) -> list[dict]:
    """Serialize entries as answer + decimal + rational weight records."""
    return [
        {
            "answer": answer_to_json(answer),
            "weight": weight_decimal_string(weight),
            "weight_rational": f"{weight.numerator}/{weight.denominator}",
        }
        for answer, weight in dist.entries
    ]


def distribution_from_records(records: Sequence[Mapping]) -> AnswerDistribution:
    """Inverse of :func:`distribution_to_records` (reads the rational field)."""
    return AnswerDistribution.from_pairs(
        (answer_from_json(rec["answer"]), Fraction(rec["weight_rational"]))
        for rec in records
    )
