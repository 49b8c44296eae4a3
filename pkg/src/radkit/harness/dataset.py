"""Benchmark datasets: line-delimited JSON records with normalized gold answers.

Each line is an object with ``question`` and ``answer`` fields and an optional
``id``; missing ids are synthesized from zero-padded 1-based line numbers.
Multiple-choice records may carry an ``options`` list, which is rendered into
the question text as lettered choices. Gold answers are normalized under the
dataset's task kind at load time, so scoring compares canonical values.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..answers import Answer, InvalidValue, TaskKind, normalize
from ..errors import RadkitError

OPTION_LETTERS = "ABCDE"


class MalformedRecord(RadkitError):
    """A dataset line that could not be parsed into an item."""

    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line


class DuplicateId(RadkitError):
    """Two dataset records share an id."""


@dataclass(frozen=True)
class DatasetItem:
    id: str
    question: str
    gold: Answer

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("item id is empty")
        if not self.question.strip():
            raise ValueError("item question is empty")


@dataclass(frozen=True)
class Dataset:
    name: str
    kind: TaskKind
    items: tuple[DatasetItem, ...]

    def __post_init__(self) -> None:
        ids = [item.id for item in self.items]
        if len(set(ids)) != len(ids):
            raise DuplicateId("dataset items must have distinct ids")

    def ids(self) -> tuple[str, ...]:
        return tuple(item.id for item in self.items)

    def item(self, item_id: str) -> DatasetItem:
        for candidate in self.items:
            if candidate.id == item_id:
                return candidate
        raise KeyError(item_id)


def render_options(question: str, options: Sequence[str]) -> str:
    """Append lettered answer choices to a question."""
    rendered = " ".join(
        f"({letter}) {option}" for letter, option in zip(OPTION_LETTERS, options)
    )
    return f"{question} Answer Choices: {rendered}"


def load_dataset(path: str | Path, kind: TaskKind, name: str | None = None) -> Dataset:
    """Load a line-delimited JSON dataset, normalizing gold answers."""
    path = Path(path)
    items: list[DatasetItem] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except ValueError as exc:
                raise MalformedRecord(line_number, f"invalid JSON ({exc})") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(line_number, "record is not an object")
            try:
                question = record["question"]
                raw_answer = record["answer"]
            except KeyError as exc:
                raise MalformedRecord(line_number, f"missing field {exc}") from exc
            if not isinstance(question, str) or not question.strip():
                raise MalformedRecord(line_number, "question is not a non-empty string")
            options = record.get("options")
            if options is not None:
                if not isinstance(options, list) or not all(
                    isinstance(o, str) for o in options
                ):
                    raise MalformedRecord(line_number, "options is not a string list")
                question = render_options(question, options)
            try:
                gold = normalize(raw_answer, kind)
            except InvalidValue as exc:
                raise MalformedRecord(line_number, f"bad gold answer ({exc})") from exc
            item_id = str(record.get("id") or f"{line_number:04d}")
            if item_id in seen:
                raise DuplicateId(f"duplicate item id {item_id!r} at line {line_number}")
            seen.add(item_id)
            items.append(DatasetItem(id=item_id, question=question, gold=gold))
    return Dataset(name=name or path.stem, kind=kind, items=tuple(items))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset back out as line-delimited JSON."""
    lines = [
        json.dumps(
            {
                "id": item.id,
                "question": item.question,
                "answer": item.gold.render(),
            },
            ensure_ascii=False,
        )
        for item in dataset.items
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
