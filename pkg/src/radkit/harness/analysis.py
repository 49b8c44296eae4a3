"""Cross-algorithm analysis: difficult questions, gold-probability ranks, and
the top-two significance comparison."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import RadkitError
from .dataset import Dataset
from .metrics import Metrics, RunRecord, score
from .wilcoxon import AllZeroDifferences, wilcoxon_signed_rank


class MismatchedItemSets(RadkitError):
    """Runs being compared do not cover identical question ids."""


class MissingDistribution(RadkitError):
    """A run has no answer distribution for a question that needs ranking."""

    def __init__(self, item_id: str, algorithm: str):
        super().__init__(f"run {algorithm!r} has no distribution for item {item_id!r}")
        self.item_id = item_id
        self.algorithm = algorithm


def _common_ids(runs: Sequence[RunRecord]) -> frozenset[str]:
    if not runs:
        raise ValueError("at least one run is required")
    first = runs[0].ids()
    for run in runs[1:]:
        if run.ids() != first:
            raise MismatchedItemSets(
                f"run {run.algorithm!r} covers different items than {runs[0].algorithm!r}"
            )
    return first


def difficult_filter(runs: Sequence[RunRecord]) -> set[str]:
    """Ids answered incorrectly by at least one of the runs."""
    ids = _common_ids(runs)
    difficult: set[str] = set()
    for run in runs:
        for result in run.per_item:
            if not result.correct:
                difficult.add(result.item_id)
    return set(ids) & difficult


def rank_histogram(
    runs: Sequence[RunRecord], gold: Dataset, ids: Sequence[str]
) -> dict[str, list[int]]:
    """Histogram of per-question ranks of each run's gold-answer probability.

    For each id, runs are ranked by the probability their final distribution
    assigns to the gold answer, descending; equal probabilities share the
    smallest (best) rank. The result maps algorithm to a list of counts indexed
    by rank - 1. Raises :class:`MissingDistribution` if a run lacks a
    distribution for any requested id.
    """
    _common_ids(runs)
    k = len(runs)
    histograms = {run.algorithm: [0] * k for run in runs}
    lookup = [run.by_id() for run in runs]
    for item_id in ids:
        item = gold.item(item_id)
        probs = []
        for run, results in zip(runs, lookup):
            result = results.get(item_id)
            if result is None or result.distribution is None:
                raise MissingDistribution(item_id, run.algorithm)
            probs.append(result.distribution.weight(item.gold))
        for run, own in zip(runs, probs):
            rank = 1 + sum(1 for other in probs if other > own)
            histograms[run.algorithm][rank - 1] += 1
    return histograms


def gold_probability_series(
    run: RunRecord, gold: Dataset, ids: Sequence[str]
) -> list[float]:
    """Per-item probability the run's distribution puts on the gold answer."""
    results = run.by_id()
    series = []
    for item_id in ids:
        result = results.get(item_id)
        if result is None or result.distribution is None:
            raise MissingDistribution(item_id, run.algorithm)
        series.append(float(result.distribution.weight(gold.item(item_id).gold)))
    return series


@dataclass(frozen=True)
class AlgorithmSummary:
    algorithm: str
    metrics: Metrics
    mean_llm_calls: float


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the analyze command reports for a set of runs."""

    dataset: str
    summaries: tuple[AlgorithmSummary, ...]
    top_two: tuple[str, str] | None
    wilcoxon_p_correctness: float | None
    wilcoxon_note: str
    difficult_ids: tuple[str, ...]
    rank_histograms: dict[str, list[int]]
    gold_prob_wilcoxon_p: float | None


def analyze_runs(runs: Sequence[RunRecord], gold: Dataset) -> AnalysisReport:
    """Compare runs on one dataset; see :class:`AnalysisReport` for contents."""
    ids = sorted(_common_ids(runs))
    summaries = tuple(
        sorted(
            (
                AlgorithmSummary(
                    algorithm=run.algorithm,
                    metrics=score(run),
                    mean_llm_calls=(
                        sum(r.llm_calls for r in run.per_item) / len(run.per_item)
                    ),
                )
                for run in runs
            ),
            key=lambda s: (-s.metrics.accuracy, s.algorithm),
        )
    )

    top_two = None
    p_correct: float | None = None
    note = ""
    gold_prob_p: float | None = None
    if len(runs) >= 2:
        first, second = summaries[0].algorithm, summaries[1].algorithm
        top_two = (first, second)
        by_name = {run.algorithm: run for run in runs}
        x = [1.0 if by_name[first].by_id()[i].correct else 0.0 for i in ids]
        y = [1.0 if by_name[second].by_id()[i].correct else 0.0 for i in ids]
        try:
            p_correct = wilcoxon_signed_rank(x, y)
        except AllZeroDifferences:
            note = "top-two runs agree on every item; correctness test undefined"
        try:
            gx = gold_probability_series(by_name[first], gold, ids)
            gy = gold_probability_series(by_name[second], gold, ids)
            gold_prob_p = wilcoxon_signed_rank(gx, gy)
        except (MissingDistribution, AllZeroDifferences):
            gold_prob_p = None

    difficult = tuple(sorted(difficult_filter(runs)))
    histograms: dict[str, list[int]] = {}
    if difficult:
        rankable = [
            run
            for run in runs
            if all(
                run.by_id()[i].distribution is not None
                for i in difficult
                if i in run.by_id()
            )
        ]
        if len(rankable) == len(runs):
            histograms = rank_histogram(runs, gold, difficult)
        elif len(rankable) >= 2:
            histograms = rank_histogram(rankable, gold, difficult)
    return AnalysisReport(
        dataset=gold.name,
        summaries=summaries,
        top_two=top_two,
        wilcoxon_p_correctness=p_correct,
        wilcoxon_note=note,
        difficult_ids=difficult,
        rank_histograms=histograms,
        gold_prob_wilcoxon_p=gold_prob_p,
    )
