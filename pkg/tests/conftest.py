"""Shared fixtures: reference kernels, prompt packs, and small builders."""

from __future__ import annotations

from fractions import Fraction
from importlib.resources import files
from pathlib import Path

import pytest

from radkit.answers import Answer
from radkit.backends.scripted import ScriptedKernel, load_kernel
from radkit.distribution import AnswerDistribution, ConditionalTable
from radkit.prompting import PromptPack, builtin_pack, load_prompt_pack

GOLDEN_DIR = Path(__file__).parent / "golden"
FIXTURE_DIR = Path(__file__).parent / "fixtures"


def golden_text(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8")


def num(value) -> Answer:
    return Answer.numeric(value)


def dist(pairs) -> AnswerDistribution:
    return AnswerDistribution.from_pairs([(num(a), w) for a, w in pairs])


@pytest.fixture(scope="session")
def binary_kernel_path() -> Path:
    return Path(str(files("radkit.data") / "kernel_binary.json"))


@pytest.fixture(scope="session")
def three_kernel_path() -> Path:
    return Path(str(files("radkit.data") / "kernel_three_answers.json"))


@pytest.fixture(scope="session")
def binary_kernel(binary_kernel_path) -> ScriptedKernel:
    return load_kernel(binary_kernel_path)


@pytest.fixture(scope="session")
def three_kernel(three_kernel_path) -> ScriptedKernel:
    return load_kernel(three_kernel_path)


@pytest.fixture(scope="session")
def arith_pack() -> PromptPack:
    return builtin_pack("arith4")


@pytest.fixture(scope="session")
def decimals_pack() -> PromptPack:
    return load_prompt_pack(FIXTURE_DIR / "pack_decimals.json")


def make_kernel(
    task_id: str,
    initial_pairs,
    row_map,
    emit_mode,
    seed: int = 0,
) -> ScriptedKernel:
    """Build a numeric scripted kernel from plain (value, weight) structures."""
    from radkit.backends.scripted import EmitMode

    initial = dist(initial_pairs)
    rows = {num(key): dist(pairs) for key, pairs in row_map.items()}
    return ScriptedKernel(
        task_id=task_id,
        kind=initial.entries[0][0].kind,
        initial=initial,
        refine_rows=ConditionalTable(rows),
        emit_mode=emit_mode if isinstance(emit_mode, EmitMode) else EmitMode(emit_mode),
        seed=seed,
    )


def random_closed_kernel(rng, n_answers: int, denominator: int, task_id: str,
                         emit_mode) -> ScriptedKernel:
    """Random closed-world kernel with all weights multiples of 1/denominator."""

    def random_weights(k: int) -> list[Fraction]:
        cuts = sorted(rng.sample(range(1, denominator), k - 1)) if k > 1 else []
        edges = [0, *cuts, denominator]
        return [Fraction(edges[i + 1] - edges[i], denominator) for i in range(k)]

    values = rng.sample(range(1, 200), n_answers)
    initial_pairs = list(zip(values, random_weights(n_answers)))
    row_map = {v: list(zip(values, random_weights(n_answers))) for v in values}
    # Drop zero-weight entries (random_weights never emits zeros, but guard).
    initial_pairs = [(v, w) for v, w in initial_pairs if w > 0]
    row_map = {
        key: [(v, w) for v, w in pairs if w > 0] for key, pairs in row_map.items()
    }
    return make_kernel(task_id, initial_pairs, row_map, emit_mode)
