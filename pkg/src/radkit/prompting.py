"""Prompt construction for the three prompting families.

All builders are pure string assembly with byte-stable output:

* chain-of-thought: ``Q: <question>\\n\\nA: <rationale> The answer is <y>.``
  blocks joined by blank lines, ending with a terminal ``Q: <question>\\n\\nA: ``
  block (note the trailing space) that the model continues.
* progressive hints: every question line carries a hint clause
  ``(Hint: The answer is near to <h1>, <h2>, ...).`` and each shot's rationale
  is prefixed with the hint-acknowledgement sentence.
* refinement: identical to the hint family with exactly one hint (the previous
  answer being reconsidered).

Hint values render without trailing zeros (``8``, not ``8.000``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from .answers import Answer, TaskKind, answer_to_json, normalize
from .errors import RadkitError


class EmptyHints(RadkitError):
    """A hint-family prompt was requested with no hints."""


class PromptFamily(Enum):
    COT = "cot"
    PHP_HINT = "php_hint"
    RAD_REFINE = "rad_refine"


HINT_CLAUSE_OPEN = "(Hint: The answer is near to "


@dataclass(frozen=True)
class FewShotExample:
    """One worked example: question, reasoning chain, and final answer."""

    question: str
    rationale: str
    answer: Answer

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValueError("example question is empty")
        if not self.rationale.strip():
            raise ValueError("example rationale is empty")


@dataclass(frozen=True)
class PromptBundle:
    """A fully assembled prompt plus the metadata backends route on."""

    user_text: str
    family: PromptFamily
    hint_answers: tuple[Answer, ...] = ()
    system_text: str | None = None

    def __post_init__(self) -> None:
        if self.family is not PromptFamily.COT and not self.hint_answers:
            raise EmptyHints(f"{self.family.value} prompts carry at least one hint")
        has_clause = HINT_CLAUSE_OPEN in self.user_text
        if has_clause != bool(self.hint_answers):
            raise ValueError("hint clause presence must match hint_answers")


def _hint_list(hints: Sequence[Answer]) -> str:
    return ", ".join(h.render() for h in hints)


def _require_shots(shots: Sequence[FewShotExample]) -> None:
    if not shots:
        raise ValueError("at least one few-shot example is required")


def build_cot_prompt(
    shots: Sequence[FewShotExample],
    question: str,
    system_text: str | None = None,
) -> PromptBundle:
    """Plain chain-of-thought prompt: worked examples, then the open question."""
    _require_shots(shots)
    blocks = [
        f"Q: {s.question}\n\nA: {s.rationale} The answer is {s.answer.render()}."
        for s in shots
    ]
    blocks.append(f"Q: {question}\n\nA: ")
    return PromptBundle("\n\n".join(blocks), PromptFamily.COT, (), system_text)


def build_php_prompt(
    shots: Sequence[FewShotExample],
    question: str,
    hints: Sequence[Answer],
    system_text: str | None = None,
    family: PromptFamily = PromptFamily.PHP_HINT,
) -> PromptBundle:
    """Progressive-hint prompt: every question line restates the hint history."""
    _require_shots(shots)
    if not hints:
        raise EmptyHints("progressive-hint prompts need at least one hint")
    blocks = []
    for s in shots:
        h = s.answer.render()
        blocks.append(
            f"Q: {s.question} {HINT_CLAUSE_OPEN}{h}).\n\n"
            f"A: We know the Answer Hints: {h}. With the Answer Hints: {h}, "
            f"we will answer the question. {s.rationale} The answer is {h}."
        )
    blocks.append(f"Q: {question} {HINT_CLAUSE_OPEN}{_hint_list(hints)}).\n\nA: ")
    return PromptBundle("\n\n".join(blocks), family, tuple(hints), system_text)


def build_rad_refine_prompt(
    shots: Sequence[FewShotExample],
    question: str,
    previous: Answer,
    system_text: str | None = None,
) -> PromptBundle:
    """Refinement prompt: the hint format with exactly one previous answer."""
    return build_php_prompt(
        shots, question, [previous], system_text, family=PromptFamily.RAD_REFINE
    )


@dataclass(frozen=True)
class PromptPack:
    """A named, committed set of few-shot examples for one task kind."""

    name: str
    kind: TaskKind
    shots: tuple[FewShotExample, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not self.shots:
            raise ValueError("a prompt pack needs at least one shot")


def _pack_from_payload(payload: dict) -> PromptPack:
    kind = TaskKind(payload["kind"])
    shots = tuple(
        FewShotExample(
            question=rec["question"],
            rationale=rec["rationale"],
            answer=normalize(rec["answer"], kind),
        )
        for rec in payload["shots"]
    )
    return PromptPack(name=payload["name"], kind=kind, shots=shots)


def load_prompt_pack(path: str | Path) -> PromptPack:
    """Read a prompt pack from its JSON record file."""
    return _pack_from_payload(json.loads(Path(path).read_text(encoding="utf-8")))


def save_prompt_pack(pack: PromptPack, path: str | Path) -> None:
    payload = {
        "name": pack.name,
        "kind": pack.kind.value,
        "shots": [
            {
                "question": s.question,
                "rationale": s.rationale,
                "answer": answer_to_json(s.answer)["value"],
            }
            for s in pack.shots
        ],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def builtin_pack(name: str) -> PromptPack:
    """Load one of the prompt packs shipped with the package."""
    from importlib.resources import files

    resource = files("radkit.data").joinpath(f"pack_{name}.json")
    with resource.open("r", encoding="utf-8") as handle:
        return _pack_from_payload(json.load(handle))
