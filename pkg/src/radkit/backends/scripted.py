"""Deterministic scripted backend: completions drawn from a declared kernel.

A :class:`ScriptedKernel` fixes, for one task, the initial answer distribution
and one conditional refinement row per answer (a closed world: every answer
that can ever appear has a row). The sampler routes each prompt bundle by
family -- chain-of-thought prompts draw from the initial distribution, hint and
refinement prompts draw from the row keyed by the most recent hint -- and wraps
each drawn answer into a completion string, so the full extraction pipeline is
exercised rather than short-circuited.

Two emission modes:

* exact quota: for ``n`` draws, emit each answer exactly its largest-remainder
  share of ``n`` (deterministic, no randomness at all);
* seeded random: each draw is a pure function of
  ``(seed, task_id, hint, draw index)`` via sha256, so replays reproduce every
  sample regardless of concurrency or draw order.

Greedy requests (temperature 0) return the routed row's mode.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from ..answers import Answer, RawCompletion, TaskKind, normalize
from ..distribution import AnswerDistribution, ConditionalTable, mode
from ..errors import RadkitError
from ..prompting import PromptBundle, PromptFamily
from .base import SampleRequest


class UnknownHint(RadkitError):
    """A hinted prompt referenced an answer the kernel has no row for."""


class EmitMode(Enum):
    EXACT_QUOTA = "exact_quota"
    SEEDED_RANDOM = "seeded_random"


@dataclass(frozen=True)
class ScriptedKernel:
    """One task's scripted behavior: initial distribution plus refinement rows."""

    task_id: str
    kind: TaskKind
    initial: AnswerDistribution
    refine_rows: ConditionalTable
    emit_mode: EmitMode = EmitMode.EXACT_QUOTA
    rationale_template: str = "Let's think step by step."
    seed: int = 0

    def __post_init__(self) -> None:
        missing = [a.render() for a in self.answer_space() if a not in self.refine_rows]
        if missing:
            raise ValueError(f"kernel is not a closed world; rows missing for {missing}")

    def answer_space(self) -> tuple[Answer, ...]:
        """Every reachable answer: initial support first, then row-introduced."""
        seen: dict[Answer, None] = {a: None for a in self.initial.support}
        for _, row in self.refine_rows.items():
            for a in row.support:
                seen.setdefault(a)
        return tuple(seen)


def route(bundle: PromptBundle, kernel: ScriptedKernel) -> AnswerDistribution:
    """Pick the kernel distribution a prompt draws from.

    Chain-of-thought prompts draw from the initial distribution; hint and
    refinement prompts draw from the row keyed by the last (most recent) hint.
    """
    if bundle.family is PromptFamily.COT:
        return kernel.initial
    if not bundle.hint_answers:
        raise UnknownHint("hinted prompt carried no hints")
    last = bundle.hint_answers[-1]
    if last not in kernel.refine_rows:
        raise UnknownHint(f"kernel has no row for hint {last.render()!r}")
    return kernel.refine_rows.row(last)


def largest_remainder(n: int, weights: Sequence[Fraction]) -> list[int]:
    """Apportion ``n`` draws to weights: floors first, remainders break ties.

    Equal remainders go to earlier entries, so the result is deterministic.
    """
    if n < 0:
        raise ValueError("cannot apportion a negative count")
    quotas = [n * w for w in weights]
    counts = [int(q) for q in quotas]  # int() floors nonnegative rationals
    leftover = n - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def _keyed_unit(seed: int, task_id: str, hint_key: str, index: int) -> Fraction:
    payload = f"{seed}|{task_id}|{hint_key}|{index}".encode("utf-8")
    numerator = int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")
    return Fraction(numerator, 1 << 64)


def _draw_from(row: AnswerDistribution, unit: Fraction) -> Answer:
    acc = Fraction(0)
    for answer, weight in row.entries:
        acc += weight
        if unit < acc:
            return answer
    return row.entries[-1][0]


class ScriptedSampler:
    """Sampler that serves completions from a scripted kernel."""

    def __init__(self, kernel: ScriptedKernel):
        self.kernel = kernel

    def sample(self, request: SampleRequest) -> list[RawCompletion]:
        bundle = request.bundle
        row = route(bundle, self.kernel)
        if request.temperature == 0:
            answers = [mode(row)]
        elif self.kernel.emit_mode is EmitMode.EXACT_QUOTA:
            counts = largest_remainder(request.n, [w for _, w in row.entries])
            answers = []
            for (answer, _), count in zip(row.entries, counts):
                answers.extend([answer] * count)
        else:
            seed = request.seed if request.seed is not None else self.kernel.seed
            hint_key = (
                bundle.hint_answers[-1].render() if bundle.hint_answers else "<initial>"
            )
            answers = [
                _draw_from(
                    row, _keyed_unit(seed, self.kernel.task_id, hint_key, i)
                )
                for i in range(request.n)
            ]
        return [self._completion(a) for a in answers]

    def _completion(self, answer: Answer) -> RawCompletion:
        text = f"{self.kernel.rationale_template} The answer is {answer.render()}."
        return RawCompletion(text=text, finish_reason="stop", token_count=len(text.split()))


def _parse_row(pairs: Sequence[Sequence], kind: TaskKind) -> AnswerDistribution:
    return AnswerDistribution.from_pairs(
        (normalize(value, kind), Fraction(weight)) for value, weight in pairs
    )


def load_kernel(path: str | Path) -> ScriptedKernel:
    """Read a scripted kernel from its JSON file (weights as "p/q" strings)."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = TaskKind(payload["kind"])
    initial = _parse_row(payload["initial"], kind)
    rows = {
        normalize(key, kind): _parse_row(pairs, kind)
        for key, pairs in payload["refine_rows"].items()
    }
    return ScriptedKernel(
        task_id=payload["task_id"],
        kind=kind,
        initial=initial,
        refine_rows=ConditionalTable(rows),
        emit_mode=EmitMode(payload.get("emit_mode", "exact_quota")),
        rationale_template=payload.get(
            "rationale_template", "Let's think step by step."
        ),
        seed=payload.get("seed", 0),
    )


def _row_payload(dist: AnswerDistribution) -> list[list[str]]:
    return [
        [a.render(), f"{w.numerator}/{w.denominator}"] for a, w in dist.entries
    ]


def save_kernel(kernel: ScriptedKernel, path: str | Path) -> None:
    payload = {
        "task_id": kernel.task_id,
        "kind": kernel.kind.value,
        "emit_mode": kernel.emit_mode.value,
        "seed": kernel.seed,
        "rationale_template": kernel.rationale_template,
        "initial": _row_payload(kernel.initial),
        "refine_rows": {
            a.render(): _row_payload(row) for a, row in kernel.refine_rows.items()
        },
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
