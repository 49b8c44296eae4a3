"""Per-run results and accuracy metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from ..answers import Answer
from ..distribution import AnswerDistribution


@dataclass(frozen=True)
class ItemResult:
    """Outcome of one algorithm on one dataset item."""

    item_id: str
    predicted: Answer | None
    correct: bool
    distribution: AnswerDistribution | None
    llm_calls: int

    def __post_init__(self) -> None:
        if self.llm_calls < 0:
            raise ValueError("llm_calls must be nonnegative")


@dataclass(frozen=True)
class RunRecord:
    """One algorithm's results over a whole dataset."""

    dataset: str
    algorithm: str
    per_item: tuple[ItemResult, ...]
    config_echo: Mapping = field(default_factory=dict)

    def __post_init__(self) -> None:
        ids = [result.item_id for result in self.per_item]
        if len(set(ids)) != len(ids):
            raise ValueError("per-item results must have distinct item ids")

    def ids(self) -> frozenset[str]:
        return frozenset(result.item_id for result in self.per_item)

    def by_id(self) -> dict[str, ItemResult]:
        return {result.item_id: result for result in self.per_item}


@dataclass(frozen=True)
class Metrics:
    """Accuracy with its binomial standard error."""

    accuracy: float
    stderr: float
    n: int


def score(run: RunRecord) -> Metrics:
    """Accuracy over the run; stderr is sqrt(acc * (1 - acc) / n)."""
    n = len(run.per_item)
    if n == 0:
        raise ValueError("cannot score an empty run")
    correct = sum(1 for result in run.per_item if result.correct)
    accuracy = correct / n
    stderr = math.sqrt(accuracy * (1.0 - accuracy) / n)
    return Metrics(accuracy=accuracy, stderr=stderr, n=n)
