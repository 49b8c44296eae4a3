"""Evaluation harness: datasets, metrics, significance tests, and the CLI."""

from .dataset import Dataset, DatasetItem, DuplicateId, MalformedRecord, load_dataset
from .metrics import ItemResult, Metrics, RunRecord, score
from .wilcoxon import AllZeroDifferences, wilcoxon_signed_rank
from .analysis import (
    MismatchedItemSets,
    MissingDistribution,
    difficult_filter,
    rank_histogram,
)

__all__ = [
    "AllZeroDifferences",
    "Dataset",
    "DatasetItem",
    "DuplicateId",
    "ItemResult",
    "MalformedRecord",
    "Metrics",
    "MismatchedItemSets",
    "MissingDistribution",
    "RunRecord",
    "difficult_filter",
    "load_dataset",
    "rank_histogram",
    "score",
    "wilcoxon_signed_rank",
]
