"""Exact simulation of answer-probability flow under a refinement kernel.

A :class:`TransitionKernel` is a row-stochastic matrix over a fixed answer
space: row ``y`` is the distribution of the refined answer given previous
answer ``y``. All arithmetic is exact rational (``fractions.Fraction``), so a
simulated run can be compared bit-for-bit against an engine run that used
exact-quota sampling.

``flow_condition`` decomposes one update step at a designated answer into

    flow_out = p(y) * (1 - K[y](y))            mass leaving y
    flow_in  = sum_{y' != y} p(y') * K[y'](y)  mass arriving at y

and reports whether the answer's mass increases (flow_in > flow_out).
``required_self_refine_prob(p1, c)`` returns ``1 - c*(1 - p1)``, the
self-retention weight needed for the correct answer's mass to grow when every
wrong answer moves to it with conditional weight at least ``c * p1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .answers import Answer
from .distribution import (
    AnswerDistribution,
    ConditionalTable,
    WeightLike,
    as_weight,
)
from .errors import RadkitError


class UnknownAnswer(RadkitError):
    """An answer outside the kernel's answer space was referenced."""


_ROW_SLACK = Fraction(1, 10**12)


@dataclass(frozen=True)
class TransitionKernel:
    """Row-stochastic refinement matrix over a fixed, ordered answer space."""

    answers: tuple[Answer, ...]
    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.answers)
        if n == 0:
            raise ValueError("kernel needs at least one answer")
        if len(set(self.answers)) != n:
            raise ValueError("kernel answers must be distinct")
        if len(self.rows) != n or any(len(row) != n for row in self.rows):
            raise ValueError("kernel matrix must be square over the answer space")
        for answer, row in zip(self.answers, self.rows):
            if any(w < 0 for w in row):
                raise ValueError(f"negative weight in row {answer.render()!r}")
            if abs(sum(row) - 1) > _ROW_SLACK:
                raise ValueError(f"row {answer.render()!r} sums to {sum(row)}, not 1")

    def index(self, answer: Answer) -> int:
        try:
            return self.answers.index(answer)
        except ValueError:
            raise UnknownAnswer(f"{answer.render()!r} is not in the kernel") from None

    def entry(self, previous: Answer, refined: Answer) -> Fraction:
        return self.rows[self.index(previous)][self.index(refined)]

    @classmethod
    def from_row_map(
        cls,
        answers: Sequence[Answer],
        row_map: Mapping[Answer, Mapping[Answer, WeightLike]],
    ) -> "TransitionKernel":
        """Build from a nested mapping; absent cells are zero."""
        answer_tuple = tuple(answers)
        rows = []
        for a in answer_tuple:
            try:
                row = row_map[a]
            except KeyError:
                raise UnknownAnswer(f"no row for {a.render()!r}") from None
            rows.append(tuple(as_weight(row.get(b, 0)) for b in answer_tuple))
        return cls(answer_tuple, tuple(rows))

    @classmethod
    def from_conditionals(
        cls, answers: Sequence[Answer], conditionals: ConditionalTable
    ) -> "TransitionKernel":
        """Build from conditional-row distributions over ``answers``."""
        answer_tuple = tuple(answers)
        rows = tuple(
            tuple(conditionals.row(a).weight(b) for b in answer_tuple)
            for a in answer_tuple
        )
        return cls(answer_tuple, rows)


@dataclass(frozen=True)
class FlowReport:
    """Mass flow at one answer across a single update step."""

    answer: Answer
    flow_in: Fraction
    flow_out: Fraction
    net: Fraction
    increases: bool

    def __post_init__(self) -> None:
        if self.net != self.flow_in - self.flow_out:
            raise ValueError("net flow must equal flow_in - flow_out")
        if self.increases != (self.net > 0):
            raise ValueError("increases flag must match the sign of net flow")


def _check_support(p: AnswerDistribution, kernel: TransitionKernel) -> None:
    known = set(kernel.answers)
    for answer in p.support:
        if answer not in known:
            raise UnknownAnswer(f"{answer.render()!r} is not in the kernel")


def exact_update(p: AnswerDistribution, kernel: TransitionKernel) -> AnswerDistribution:
    """One exact refinement step: p' = p K, zero-weight answers pruned."""
    _check_support(p, kernel)
    weights = [Fraction(0)] * len(kernel.answers)
    for answer, mass in p.entries:
        row = kernel.rows[kernel.index(answer)]
        for j, w in enumerate(row):
            if w:
                weights[j] += mass * w
    entries = tuple(
        (answer, weight)
        for answer, weight in zip(kernel.answers, weights)
        if weight > 0
    )
    return AnswerDistribution(entries)


def flow_condition(
    p: AnswerDistribution, kernel: TransitionKernel, correct: Answer
) -> FlowReport:
    """Decompose one step's mass change at ``correct`` into in/out flows."""
    _check_support(p, kernel)
    j = kernel.index(correct)
    self_weight = kernel.rows[j][j]
    flow_out = p.weight(correct) * (1 - self_weight)
    flow_in = Fraction(0)
    for answer, mass in p.entries:
        if answer != correct:
            flow_in += mass * kernel.rows[kernel.index(answer)][j]
    net = flow_in - flow_out
    return FlowReport(correct, flow_in, flow_out, net, net > 0)


def required_self_refine_prob(p1_correct: WeightLike, c: WeightLike) -> Fraction:
    """Self-retention weight above which the correct answer's mass grows.

    ``p1_correct`` is the correct answer's current mass and ``c`` scales the
    minimum wrong-to-correct conditional weight ``c * p1_correct``.
    """
    p = as_weight(p1_correct)
    scale = as_weight(c)
    if not 0 <= p <= 1:
        raise ValueError("p1_correct must lie in [0, 1]")
    if not 0 < scale < 1:
        raise ValueError("c must lie strictly between 0 and 1")
    return 1 - scale * (1 - p)


def iterate(
    p1: AnswerDistribution, kernel: TransitionKernel, steps: int
) -> list[AnswerDistribution]:
    """Distributions [p_1, ..., p_steps] under repeated exact updates."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    out = [p1]
    current = p1
    for _ in range(steps - 1):
        current = exact_update(current, kernel)
        out.append(current)
    return out
