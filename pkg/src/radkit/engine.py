"""Iterative answer-distribution refinement and the prompting baselines.

``run_rad`` maintains a distribution over answers across iterations. Iteration
1 samples the initial prompt ``B_1`` times (or accumulates progressive-hint
runs worth ``B_1`` calls). Each later iteration ``r`` splits its budget evenly
across the current support (``floor(B_r / M)`` draws per answer), asks the
model to reconsider the question once per support answer as hint, builds one
empirical conditional row per hint, and mixes the rows by the prior weights
(marginalization). The final answer is the mode of the last distribution.

Baselines: ``run_cot_sc`` (sample n chains, majority vote), ``run_php``
(greedy progressive hinting until two consecutive answers agree), and
``run_php_sc`` (repeat progressive hinting within a call budget and majority
vote the final answers).

All sampling is driven through seeds derived deterministically from the
configured base seed, so identical configurations replay identically.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .answers import Answer, TaskKind, extract_answer
from .backends.base import SampleRequest, Sampler
from .distribution import (
    AnswerDistribution,
    ConditionalTable,
    from_samples,
    marginalize,
    mode,
)
from .errors import RadkitError
from .prompting import (
    FewShotExample,
    build_cot_prompt,
    build_php_prompt,
    build_rad_refine_prompt,
)


class AllExtractionsFailed(RadkitError):
    """Every completion of an iteration failed to parse, twice in a row."""

    def __init__(self, iteration: int):
        super().__init__(f"no completion parsed in iteration {iteration}, even after a retry")
        self.iteration = iteration


@dataclass(frozen=True)
class Task:
    """One question to be answered."""

    question: str
    kind: TaskKind
    task_id: str = "task"

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValueError("task question is empty")


@dataclass(frozen=True)
class BudgetPlan:
    """Per-iteration sample budgets; ``b_max`` is their total."""

    per_iteration: tuple[int, ...]
    b_max: int

    def __post_init__(self) -> None:
        if not self.per_iteration:
            raise ValueError("budget plan needs at least one iteration")
        if any(b < 1 for b in self.per_iteration):
            raise ValueError("per-iteration budgets must be positive")
        if sum(self.per_iteration) != self.b_max:
            raise ValueError("b_max must equal the sum of per-iteration budgets")

    @classmethod
    def of(cls, amounts: Sequence[int]) -> "BudgetPlan":
        amounts = tuple(int(a) for a in amounts)
        return cls(amounts, sum(amounts))


@dataclass(frozen=True)
class FixedIterations:
    """Stop after exactly ``rounds`` iterations."""

    rounds: int

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")


@dataclass(frozen=True)
class BudgetExhausted:
    """Stop before any iteration whose budget would push past ``b_max`` calls."""

    b_max: int


@dataclass(frozen=True)
class ModeStable:
    """Stop once two consecutive iterations share the same mode."""


StoppingRule = FixedIterations | BudgetExhausted | ModeStable


class InitStrategy(Enum):
    COT_SC = "cot_sc"
    PHP_SC = "php_sc"


@dataclass(frozen=True)
class RadConfig:
    """Everything that determines a refinement run besides the task itself."""

    budget: BudgetPlan
    init_strategy: InitStrategy = InitStrategy.COT_SC
    stopping: StoppingRule | None = None
    temperature: float = 0.7
    seed: int | None = None
    min_samples_per_hint: int = 1
    redistribute_leftover: bool = False
    model_id: str = "default"
    max_tokens: int = 1024
    php_max_rounds: int = 10
    php_greedy_base: bool = False

    def __post_init__(self) -> None:
        if self.min_samples_per_hint < 1:
            raise ValueError("min_samples_per_hint must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    """One iteration's outcome inside a refinement trace."""

    r: int
    distribution: AnswerDistribution
    mode_answer: Answer
    samples_used: int
    per_hint_counts: tuple[tuple[Answer, int], ...]


@dataclass(frozen=True)
class RadTrace:
    """Full refinement run: per-iteration records plus the final answer."""

    iterations: tuple[IterationRecord, ...]
    final_answer: Answer
    total_llm_calls: int

    def __post_init__(self) -> None:
        if not self.iterations:
            raise ValueError("a trace records at least one iteration")
        if self.final_answer != self.iterations[-1].mode_answer:
            raise ValueError("final answer must be the last iteration's mode")


def derive_seed(*parts: object) -> int:
    """Deterministic 63-bit seed from any hashable description."""
    payload = "|".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big") >> 1


def allocate(
    budget_r: int,
    support: AnswerDistribution,
    min_samples_per_hint: int = 1,
    redistribute_leftover: bool = False,
) -> dict[Answer, int]:
    """Split an iteration budget across the support, insertion order preserved.

    Normally every answer gets ``floor(budget_r / M)`` draws. When that floor
    falls below ``min_samples_per_hint``, only the ``floor(budget_r /
    min_samples_per_hint)`` highest-weight answers are kept (ties broken toward
    earlier insertion) and each gets ``min_samples_per_hint`` draws; the caller
    is expected to renormalize the prior over the returned keys. With
    ``redistribute_leftover``, unspent draws go one each to the highest-weight
    answers; otherwise they stay unspent.
    """
    if budget_r < 0:
        raise ValueError("budget must be nonnegative")
    entries = support.entries
    m = len(entries)
    per = budget_r // m
    if per >= min_samples_per_hint:
        counts = {answer: per for answer, _ in entries}
        if redistribute_leftover:
            leftover = budget_r - per * m
            by_weight = sorted(range(m), key=lambda i: (-entries[i][1], i))
            for i in by_weight[:leftover]:
                counts[entries[i][0]] += 1
        return counts
    keep_n = budget_r // min_samples_per_hint
    if keep_n == 0:
        return {}
    by_weight = sorted(range(m), key=lambda i: (-entries[i][1], i))
    keep_indices = sorted(by_weight[:keep_n])
    return {entries[i][0]: min_samples_per_hint for i in keep_indices}


def _parse_all(completions, kind: TaskKind) -> list[Answer]:
    answers = []
    for completion in completions:
        answer = extract_answer(completion, kind)
        if answer is not None:
            answers.append(answer)
    return answers


def _draw_answers(
    sampler: Sampler,
    bundle,
    n: int,
    temperature: float,
    seed: int,
    model_id: str,
    max_tokens: int,
    kind: TaskKind,
) -> tuple[list[Answer], int]:
    """Sample ``n`` completions and return (parsed answers, completions drawn)."""
    request = SampleRequest(
        bundle=bundle,
        temperature=temperature,
        n=n,
        max_tokens=max_tokens,
        model_id=model_id,
        seed=seed,
    )
    completions = sampler.sample(request)
    return _parse_all(completions, kind), len(completions)


def _cot_sc_init(
    task: Task,
    sampler: Sampler,
    shots: Sequence[FewShotExample],
    n: int,
    temperature: float,
    base_seed: int,
    model_id: str,
    max_tokens: int,
) -> tuple[AnswerDistribution, int]:
    bundle = build_cot_prompt(shots, task.question)
    answers, drawn = _draw_answers(
        sampler, bundle, n, temperature,
        derive_seed(base_seed, "iter", 1), model_id, max_tokens, task.kind,
    )
    if not answers:
        more, extra = _draw_answers(
            sampler, bundle, n, temperature,
            derive_seed(base_seed, "iter", 1, "retry"), model_id, max_tokens, task.kind,
        )
        drawn += extra
        if not more:
            raise AllExtractionsFailed(1)
        answers = more
    return from_samples(answers), drawn


def run_cot_sc(
    task: Task,
    sampler: Sampler,
    shots: Sequence[FewShotExample],
    n: int,
    *,
    temperature: float = 0.7,
    seed: int | None = None,
    model_id: str = "default",
    max_tokens: int = 1024,
) -> tuple[Answer, AnswerDistribution]:
    """Sample ``n`` chains and majority-vote: returns (mode, distribution)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    dist, _ = _cot_sc_init(
        task, sampler, shots, n, temperature,
        seed if seed is not None else 0, model_id, max_tokens,
    )
    return mode(dist), dist


def _single_answer(
    task: Task,
    sampler: Sampler,
    bundle,
    temperature: float,
    seed: int,
    model_id: str,
    max_tokens: int,
    round_number: int,
) -> tuple[Answer, int]:
    """One draw with a one-shot retry if the completion does not parse."""
    answers, drawn = _draw_answers(
        sampler, bundle, 1, temperature, seed, model_id, max_tokens, task.kind
    )
    if not answers:
        answers, extra = _draw_answers(
            sampler, bundle, 1, temperature, derive_seed(seed, "retry"),
            model_id, max_tokens, task.kind,
        )
        drawn += extra
        if not answers:
            raise AllExtractionsFailed(round_number)
    return answers[0], drawn


def run_php(
    task: Task,
    sampler: Sampler,
    shots: Sequence[FewShotExample],
    max_rounds: int = 10,
    *,
    base_temperature: float = 0.0,
    hint_temperature: float = 0.0,
    seed: int | None = None,
    model_id: str = "default",
    max_tokens: int = 1024,
) -> tuple[Answer, int]:
    """Progressive hinting: answer, re-ask with the hint history, stop on
    agreement between consecutive answers (or at ``max_rounds`` interactions).

    Returns (final answer, interactions used); always at least 2 interactions.
    """
    if max_rounds < 2:
        raise ValueError("progressive hinting needs at least 2 interactions")
    base_seed = seed if seed is not None else 0
    answer, _ = _single_answer(
        task, sampler, build_cot_prompt(shots, task.question),
        base_temperature, derive_seed(base_seed, "round", 1),
        model_id, max_tokens, 1,
    )
    hints = [answer]
    interactions = 1
    while True:
        round_number = interactions + 1
        bundle = build_php_prompt(shots, task.question, hints)
        answer, _ = _single_answer(
            task, sampler, bundle, hint_temperature,
            derive_seed(base_seed, "round", round_number),
            model_id, max_tokens, round_number,
        )
        interactions += 1
        agreed = answer == hints[-1]
        hints.append(answer)
        if agreed or interactions >= max_rounds:
            return answer, interactions


def run_php_sc(
    task: Task,
    sampler: Sampler,
    shots: Sequence[FewShotExample],
    call_budget: int,
    *,
    temperature: float = 0.7,
    max_rounds: int = 10,
    greedy_base: bool = False,
    seed: int | None = None,
    model_id: str = "default",
    max_tokens: int = 1024,
) -> tuple[Answer, AnswerDistribution, int]:
    """Repeat progressive hinting until the next run could not fit the budget.

    Each run costs at least 2 calls and is capped so the budget is never
    exceeded. Returns (majority answer, distribution of finals, calls used).
    """
    if call_budget < 2:
        raise ValueError("call_budget must cover at least one 2-interaction run")
    base_seed = seed if seed is not None else 0
    finals: list[Answer] = []
    spent = 0
    run_index = 0
    while call_budget - spent >= 2:
        cap = min(max_rounds, call_budget - spent)
        answer, used = run_php(
            task, sampler, shots, max_rounds=cap,
            base_temperature=0.0 if greedy_base else temperature,
            hint_temperature=temperature,
            seed=derive_seed(base_seed, "php-run", run_index),
            model_id=model_id, max_tokens=max_tokens,
        )
        finals.append(answer)
        spent += used
        run_index += 1
    dist = from_samples(finals)
    return mode(dist), dist, spent


def _refine_rows(
    task: Task,
    sampler: Sampler,
    shots: Sequence[FewShotExample],
    alloc: dict[Answer, int],
    temperature: float,
    seed: int,
    model_id: str,
    max_tokens: int,
) -> tuple[dict[Answer, AnswerDistribution], int, int]:
    """Build one empirical conditional row per hint.

    Unparseable draws are dropped and the row renormalizes over what parsed; a
    row with nothing parsed keeps its hint as a self-loop with weight 1.
    Returns (rows, completions drawn, completions parsed).
    """
    rows: dict[Answer, AnswerDistribution] = {}
    drawn = 0
    parsed = 0
    for hint, count in alloc.items():
        bundle = build_rad_refine_prompt(shots, task.question, hint)
        answers, used = _draw_answers(
            sampler, bundle, count, temperature, seed, model_id, max_tokens, task.kind
        )
        drawn += used
        parsed += len(answers)
        if answers:
            rows[hint] = from_samples(answers)
        else:
            rows[hint] = AnswerDistribution.from_pairs([(hint, 1)])
    return rows, drawn, parsed


def run_rad(
    task: Task,
    sampler: Sampler,
    shots: Sequence[FewShotExample],
    config: RadConfig,
) -> RadTrace:
    """Run the full refinement loop and return its trace."""
    plan = list(config.budget.per_iteration)
    stopping = config.stopping
    if isinstance(stopping, FixedIterations):
        plan = plan[: stopping.rounds]
    base_seed = config.seed if config.seed is not None else 0

    if config.init_strategy is InitStrategy.COT_SC:
        dist, used = _cot_sc_init(
            task, sampler, shots, plan[0], config.temperature,
            base_seed, config.model_id, config.max_tokens,
        )
    else:
        _, dist, used = run_php_sc(
            task, sampler, shots, call_budget=plan[0],
            temperature=config.temperature, max_rounds=config.php_max_rounds,
            greedy_base=config.php_greedy_base,
            seed=derive_seed(base_seed, "init"),
            model_id=config.model_id, max_tokens=config.max_tokens,
        )
    records = [IterationRecord(1, dist, mode(dist), used, ())]
    total_calls = used
    planned_spend = plan[0]

    for r in range(2, len(plan) + 1):
        b_r = plan[r - 1]
        if isinstance(stopping, BudgetExhausted) and planned_spend + b_r > stopping.b_max:
            break
        alloc = allocate(
            b_r, dist, config.min_samples_per_hint, config.redistribute_leftover
        )
        if not alloc:
            break
        prior = dist if len(alloc) == len(dist.entries) else dist.restrict(list(alloc))
        iter_seed = derive_seed(base_seed, "iter", r)
        rows, drawn, parsed = _refine_rows(
            task, sampler, shots, alloc, config.temperature,
            iter_seed, config.model_id, config.max_tokens,
        )
        if parsed == 0:
            rows, extra, parsed = _refine_rows(
                task, sampler, shots, alloc, config.temperature,
                derive_seed(iter_seed, "retry"), config.model_id, config.max_tokens,
            )
            drawn += extra
            if parsed == 0:
                raise AllExtractionsFailed(r)
        dist = marginalize(prior, ConditionalTable(rows))
        records.append(
            IterationRecord(r, dist, mode(dist), drawn, tuple(alloc.items()))
        )
        total_calls += drawn
        planned_spend += b_r
        if isinstance(stopping, ModeStable):
            if records[-1].mode_answer == records[-2].mode_answer:
                break

    return RadTrace(tuple(records), records[-1].mode_answer, total_calls)
