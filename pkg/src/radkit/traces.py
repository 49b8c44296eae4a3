"""On-disk run traces: one JSON record per task plus a per-run manifest.

Trace layout under an output root:

    <out>/<dataset>/<algorithm>/manifest.json
    <out>/<dataset>/<algorithm>/<item_id>.json

Item records carry the configuration echo, the final answer distribution
(weights as both 12-digit decimal strings and exact rationals), per-iteration
records for refinement runs, correctness against gold, and the realized LLM
call count. Serialization is canonical (sorted keys, fixed indentation, no
timestamps), so identical runs produce bit-identical trace directories.
"""

from __future__ import annotations

import json
import os
import subprocess
import tempfile
from pathlib import Path
from typing import Iterable, Mapping

from .answers import Answer, answer_from_json, answer_to_json
from .distribution import (
    AnswerDistribution,
    distribution_from_records,
    distribution_to_records,
)
from .engine import IterationRecord, RadTrace

TRACE_SCHEMA = "radkit-trace-v1"
MANIFEST_SCHEMA = "radkit-manifest-v1"
MANIFEST_NAME = "manifest.json"


def build_version() -> str:
    """git describe of the working tree, or the package version if unavailable."""
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
        )
    except (OSError, subprocess.TimeoutExpired):
        result = None
    if result is not None and result.returncode == 0 and result.stdout.strip():
        return result.stdout.strip()
    from . import __version__

    return __version__


def _iteration_payload(record: IterationRecord) -> dict:
    return {
        "r": record.r,
        "distribution": distribution_to_records(record.distribution),
        "mode": answer_to_json(record.mode_answer),
        "samples_used": record.samples_used,
        "per_hint_counts": [
            [answer_to_json(answer), count]
            for answer, count in record.per_hint_counts
        ],
    }


def item_trace_payload(
    *,
    dataset: str,
    algorithm: str,
    item_id: str,
    question: str,
    gold: Answer,
    predicted: Answer | None,
    correct: bool,
    llm_calls: int,
    distribution: AnswerDistribution | None,
    config_echo: Mapping,
    rad_trace: RadTrace | None = None,
) -> dict:
    payload = {
        "schema": TRACE_SCHEMA,
        "dataset": dataset,
        "algorithm": algorithm,
        "item_id": item_id,
        "question": question,
        "gold": answer_to_json(gold),
        "predicted": None if predicted is None else answer_to_json(predicted),
        "correct": correct,
        "llm_calls": llm_calls,
        "distribution": (
            None if distribution is None else distribution_to_records(distribution)
        ),
        "config": dict(config_echo),
    }
    if rad_trace is not None:
        payload["iterations"] = [
            _iteration_payload(rec) for rec in rad_trace.iterations
        ]
    return payload


def _atomic_write_json(path: Path, payload: dict) -> None:
    body = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(body)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def write_item_trace(run_dir: str | Path, payload: dict) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / f"{payload['item_id']}.json"
    _atomic_write_json(path, payload)
    return path


def write_manifest(
    run_dir: str | Path,
    *,
    dataset: str,
    algorithm: str,
    config_echo: Mapping,
    item_count: int,
) -> Path:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema": MANIFEST_SCHEMA,
        "dataset": dataset,
        "algorithm": algorithm,
        "config": dict(config_echo),
        "items": item_count,
        "build": build_version(),
    }
    path = run_dir / MANIFEST_NAME
    _atomic_write_json(path, payload)
    return path


def read_item_trace(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def read_run_dir(run_dir: str | Path) -> tuple[dict, list[dict]]:
    """Read a run directory: (manifest, item records sorted by item id)."""
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / MANIFEST_NAME).read_text(encoding="utf-8"))
    items = [
        read_item_trace(path)
        for path in sorted(run_dir.glob("*.json"))
        if path.name != MANIFEST_NAME
    ]
    return manifest, items


def trace_distribution(record: Mapping) -> AnswerDistribution | None:
    if record.get("distribution") is None:
        return None
    return distribution_from_records(record["distribution"])


def trace_predicted(record: Mapping) -> Answer | None:
    if record.get("predicted") is None:
        return None
    return answer_from_json(record["predicted"])


def trace_gold(record: Mapping) -> Answer:
    return answer_from_json(record["gold"])


def iter_trace_items(run_dirs: Iterable[str | Path]) -> list[tuple[dict, list[dict]]]:
    return [read_run_dir(d) for d in run_dirs]
