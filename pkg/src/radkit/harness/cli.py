"""Command-line interface: run evaluations, simulate kernels, analyze traces,
and manage the completion cache."""

from __future__ import annotations

import functools
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import click

from ..answers import TaskKind, extract_answer, normalize
from ..backends.base import SampleRequest, Sampler
from ..backends.cache import ResponseCache
from ..backends.http import HttpConfig, HttpSampler
from ..backends.scripted import ScriptedSampler, load_kernel
from ..distribution import (
    AnswerDistribution,
    mode,
    weight_decimal_string,
)
from ..engine import (
    BudgetPlan,
    InitStrategy,
    ModeStable,
    RadConfig,
    Task,
    derive_seed,
    run_cot_sc,
    run_php,
    run_php_sc,
    run_rad,
)
from ..errors import RadkitError
from ..flowsim import TransitionKernel, flow_condition, iterate
from ..prompting import build_cot_prompt, builtin_pack, load_prompt_pack
from ..traces import (
    item_trace_payload,
    read_run_dir,
    trace_distribution,
    trace_gold,
    trace_predicted,
    write_item_trace,
    write_manifest,
)
from .analysis import analyze_runs
from .dataset import Dataset, DatasetItem, load_dataset
from .metrics import ItemResult, RunRecord

ALGORITHMS = ("cot", "cot-sc", "php", "php-sc", "cot-rad", "php-rad")

DEFAULT_BUDGETS = {
    "cot": "1",
    "cot-sc": "40",
    "php": "10",
    "php-sc": "40",
    "cot-rad": "5,15,20",
    "php-rad": "20,20",
}


def _friendly(fn):
    """Turn domain errors into clean CLI failures with a nonzero exit code."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RadkitError as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


@click.group()
def main() -> None:
    """Answer-distribution refinement: evaluation, simulation, and analysis."""


def _parse_budget(text: str) -> list[int]:
    try:
        amounts = [int(part.strip()) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"budget must be comma-separated integers: {text!r}") from exc
    if not amounts:
        raise click.BadParameter("budget is empty")
    return amounts


def _single_answer_dist(answer) -> AnswerDistribution | None:
    if answer is None:
        return None
    return AnswerDistribution.from_pairs([(answer, 1)])


def _run_one_item(
    item: DatasetItem,
    kind: TaskKind,
    algorithm: str,
    sampler: Sampler,
    shots,
    budget: list[int],
    temperature: float,
    seed: int,
    model_id: str,
    max_tokens: int,
    min_samples_per_hint: int,
    php_max_rounds: int,
    stop_on_stable_mode: bool,
):
    """Returns (predicted, distribution, llm_calls, rad_trace_or_None)."""
    task = Task(question=item.question, kind=kind, task_id=item.id)
    item_seed = derive_seed(seed, item.id)
    if algorithm == "cot":
        bundle = build_cot_prompt(shots, task.question)
        request = SampleRequest(
            bundle=bundle, temperature=0.0, n=1,
            max_tokens=max_tokens, model_id=model_id, seed=item_seed,
        )
        completions = sampler.sample(request)
        predicted = extract_answer(completions[0], kind)
        return predicted, _single_answer_dist(predicted), 1, None
    if algorithm == "cot-sc":
        n = sum(budget)
        predicted, dist = run_cot_sc(
            task, sampler, shots, n, temperature=temperature,
            seed=item_seed, model_id=model_id, max_tokens=max_tokens,
        )
        return predicted, dist, n, None
    if algorithm == "php":
        predicted, interactions = run_php(
            task, sampler, shots, max_rounds=php_max_rounds,
            seed=item_seed, model_id=model_id, max_tokens=max_tokens,
        )
        return predicted, _single_answer_dist(predicted), interactions, None
    if algorithm == "php-sc":
        predicted, dist, calls = run_php_sc(
            task, sampler, shots, call_budget=sum(budget),
            temperature=temperature, max_rounds=php_max_rounds,
            seed=item_seed, model_id=model_id, max_tokens=max_tokens,
        )
        return predicted, dist, calls, None
    # cot-rad / php-rad
    config = RadConfig(
        budget=BudgetPlan.of(budget),
        init_strategy=(
            InitStrategy.COT_SC if algorithm == "cot-rad" else InitStrategy.PHP_SC
        ),
        stopping=ModeStable() if stop_on_stable_mode else None,
        temperature=temperature,
        seed=item_seed,
        min_samples_per_hint=min_samples_per_hint,
        model_id=model_id,
        max_tokens=max_tokens,
        php_max_rounds=php_max_rounds,
    )
    trace = run_rad(task, sampler, shots, config)
    final_dist = trace.iterations[-1].distribution
    return trace.final_answer, final_dist, trace.total_llm_calls, trace


@main.command()
@click.option("--dataset", "dataset_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Line-delimited JSON dataset file.")
@click.option("--kind", type=click.Choice([k.value for k in TaskKind]),
              default="numeric", show_default=True, help="Answer kind of the dataset.")
@click.option("--algorithm", required=True, type=click.Choice(ALGORITHMS))
@click.option("--backend", type=click.Choice(["scripted", "http"]),
              default="scripted", show_default=True)
@click.option("--kernel", "kernel_path", type=click.Path(exists=True, dir_okay=False),
              help="Scripted kernel file (required with --backend scripted).")
@click.option("--pack", "pack_path", type=click.Path(exists=True, dir_okay=False),
              help="Prompt pack JSON file; defaults to the built-in arithmetic pack.")
@click.option("--budget", "budget_text", default=None,
              help='Comma-separated per-iteration budgets, e.g. "5,15,20".')
@click.option("--temperature", default=0.7, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Trace output root; traces go to <out>/<dataset>/<algorithm>/.")
@click.option("--max-concurrency", default=4, show_default=True, type=int)
@click.option("--spend-cap", default=None, type=int,
              help="Hard cap on completions sent to the network (http backend).")
@click.option("--model", "model_id", default="default", show_default=True)
@click.option("--max-tokens", default=1024, show_default=True, type=int)
@click.option("--base-url", default="https://api.openai.com/v1", show_default=True,
              help="OpenAI-compatible endpoint root (http backend).")
@click.option("--api-key-env", default="OPENAI_API_KEY", show_default=True)
@click.option("--cache-dir", default=None, type=click.Path(file_okay=False),
              help="Completion cache directory (http backend); enables resume.")
@click.option("--min-samples-per-hint", default=1, show_default=True, type=int)
@click.option("--php-max-rounds", default=10, show_default=True, type=int)
@click.option("--stop-on-stable-mode", is_flag=True, default=False,
              help="Stop refining once two consecutive iterations share a mode.")
@_friendly
def run(
    dataset_path, kind, algorithm, backend, kernel_path, pack_path, budget_text,
    temperature, seed, out_dir, max_concurrency, spend_cap, model_id, max_tokens,
    base_url, api_key_env, cache_dir, min_samples_per_hint, php_max_rounds,
    stop_on_stable_mode,
):
    """Evaluate one algorithm over a dataset and write per-item traces."""
    task_kind = TaskKind(kind)
    dataset = load_dataset(dataset_path, task_kind)
    pack = load_prompt_pack(pack_path) if pack_path else builtin_pack("arith4")
    budget = _parse_budget(budget_text or DEFAULT_BUDGETS[algorithm])

    if backend == "scripted":
        if not kernel_path:
            raise click.UsageError("--kernel is required with --backend scripted")
        kernel = load_kernel(kernel_path)
        sampler: Sampler = ScriptedSampler(kernel)
        kernel_name = kernel.task_id
    else:
        sampler = HttpSampler(
            HttpConfig(
                base_url=base_url,
                api_key_env=api_key_env,
                max_concurrency=max_concurrency,
                spend_cap=spend_cap,
                cache_dir=cache_dir,
            )
        )
        kernel_name = None

    config_echo = {
        "algorithm": algorithm,
        "backend": backend,
        "budget": budget,
        "temperature": temperature,
        "seed": seed,
        "kind": task_kind.value,
        "model": model_id,
        "max_tokens": max_tokens,
        "pack": pack.name,
        "kernel": kernel_name,
        "min_samples_per_hint": min_samples_per_hint,
        "php_max_rounds": php_max_rounds,
        "stop_on_stable_mode": stop_on_stable_mode,
    }
    run_dir = Path(out_dir) / dataset.name / algorithm

    def work(item: DatasetItem):
        predicted, dist, llm_calls, rad_trace = _run_one_item(
            item, task_kind, algorithm, sampler, pack.shots, budget, temperature,
            seed, model_id, max_tokens, min_samples_per_hint, php_max_rounds,
            stop_on_stable_mode,
        )
        correct = predicted is not None and predicted == item.gold
        payload = item_trace_payload(
            dataset=dataset.name,
            algorithm=algorithm,
            item_id=item.id,
            question=item.question,
            gold=item.gold,
            predicted=predicted,
            correct=correct,
            llm_calls=llm_calls,
            distribution=dist,
            config_echo=config_echo,
            rad_trace=rad_trace,
        )
        write_item_trace(run_dir, payload)
        return correct

    with ThreadPoolExecutor(max_workers=max_concurrency) as pool:
        outcomes = list(pool.map(work, dataset.items))

    write_manifest(
        run_dir,
        dataset=dataset.name,
        algorithm=algorithm,
        config_echo=config_echo,
        item_count=len(dataset.items),
    )
    accuracy = sum(outcomes) / len(outcomes) if outcomes else 0.0
    click.echo(
        f"{algorithm} on {dataset.name}: {sum(outcomes)}/{len(outcomes)} correct "
        f"({accuracy:.1%}); traces in {run_dir}"
    )


@main.command()
@click.option("--kernel", "kernel_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--steps", default=3, show_default=True, type=int)
@click.option("--correct", "correct_text", default=None,
              help="Answer whose probability flow to report per step.")
@_friendly
def simulate(kernel_path, steps, correct_text):
    """Exactly simulate a scripted kernel's refinement dynamics."""
    kernel = load_kernel(kernel_path)
    matrix = TransitionKernel.from_conditionals(
        kernel.answer_space(), kernel.refine_rows
    )
    sequence = iterate(kernel.initial, matrix, steps)
    for r, dist in enumerate(sequence, start=1):
        parts = [
            f"{answer.render()}={weight_decimal_string(weight)}"
            f" ({weight.numerator}/{weight.denominator})"
            for answer, weight in dist.entries
        ]
        click.echo(f"r={r}: " + "  ".join(parts) + f"  mode={mode(dist).render()}")
    if correct_text is not None:
        answer = normalize(correct_text, kernel.kind)
        for r in range(len(sequence) - 1):
            report = flow_condition(sequence[r], matrix, answer)
            click.echo(
                f"step {r + 1}->{r + 2} at {answer.render()}: "
                f"flow_in={weight_decimal_string(report.flow_in)} "
                f"flow_out={weight_decimal_string(report.flow_out)} "
                f"net={weight_decimal_string(report.net)} "
                f"increases={'yes' if report.increases else 'no'}"
            )


def _load_runs(trace_dirs) -> tuple[list[RunRecord], Dataset]:
    runs = []
    gold_items: dict[str, DatasetItem] = {}
    dataset_names = set()
    kind: TaskKind | None = None
    for directory in trace_dirs:
        manifest, records = read_run_dir(directory)
        dataset_names.add(manifest["dataset"])
        per_item = []
        for record in records:
            gold = trace_gold(record)
            if kind is None:
                kind = gold.kind
            gold_items.setdefault(
                record["item_id"],
                DatasetItem(
                    id=record["item_id"],
                    question=record.get("question", "(question unavailable)"),
                    gold=gold,
                ),
            )
            per_item.append(
                ItemResult(
                    item_id=record["item_id"],
                    predicted=trace_predicted(record),
                    correct=bool(record["correct"]),
                    distribution=trace_distribution(record),
                    llm_calls=int(record["llm_calls"]),
                )
            )
        runs.append(
            RunRecord(
                dataset=manifest["dataset"],
                algorithm=manifest["algorithm"],
                per_item=tuple(per_item),
                config_echo=manifest.get("config", {}),
            )
        )
    if len(dataset_names) != 1:
        raise click.ClickException(
            f"trace directories span multiple datasets: {sorted(dataset_names)}"
        )
    if kind is None:
        raise click.ClickException("trace directories contain no items")
    gold = Dataset(
        name=next(iter(dataset_names)),
        kind=kind,
        items=tuple(gold_items[i] for i in sorted(gold_items)),
    )
    return runs, gold


def _write_analysis_files(report, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_lines = ["algorithm\taccuracy\tstderr\tn\tmean_llm_calls"]
    for summary in report.summaries:
        m = summary.metrics
        metrics_lines.append(
            f"{summary.algorithm}\t{m.accuracy:.6f}\t{m.stderr:.6f}\t{m.n}"
            f"\t{summary.mean_llm_calls:.3f}"
        )
    (out_dir / "metrics.tsv").write_text("\n".join(metrics_lines) + "\n", "utf-8")

    rank_lines = ["algorithm\trank\tcount"]
    for algorithm, counts in sorted(report.rank_histograms.items()):
        for rank, count in enumerate(counts, start=1):
            rank_lines.append(f"{algorithm}\t{rank}\t{count}")
    (out_dir / "ranks.tsv").write_text("\n".join(rank_lines) + "\n", "utf-8")

    if report.rank_histograms:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        algorithms = sorted(report.rank_histograms)
        k = len(next(iter(report.rank_histograms.values())))
        width = 0.8 / len(algorithms)
        fig, ax = plt.subplots(figsize=(7, 4))
        for idx, algorithm in enumerate(algorithms):
            xs = [rank + idx * width for rank in range(1, k + 1)]
            ax.bar(xs, report.rank_histograms[algorithm], width=width, label=algorithm)
        ax.set_xlabel("rank of gold-answer probability (1 = best)")
        ax.set_ylabel("difficult questions")
        ax.set_xticks([rank + 0.4 - width / 2 for rank in range(1, k + 1)])
        ax.set_xticklabels([str(rank) for rank in range(1, k + 1)])
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "ranks.png", dpi=120)
        plt.close(fig)


@main.command()
@click.option("--traces", "trace_dirs", multiple=True, required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Run directory (<out>/<dataset>/<algorithm>); repeatable.")
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Also write metrics.tsv, ranks.tsv, and ranks.png here.")
@_friendly
def analyze(trace_dirs, out_dir):
    """Compare trace directories: metrics, significance, and rank histograms."""
    runs, gold = _load_runs(trace_dirs)
    report = analyze_runs(runs, gold)

    click.echo(f"dataset: {report.dataset}")
    click.echo("algorithm            accuracy             n    mean calls")
    for summary in report.summaries:
        m = summary.metrics
        click.echo(
            f"{summary.algorithm:<20} {m.accuracy * 100:5.1f}% ± {m.stderr * 100:4.1f}%"
            f"   {m.n:5d}   {summary.mean_llm_calls:8.2f}"
        )
    if report.top_two is not None:
        first, second = report.top_two
        if report.wilcoxon_p_correctness is not None:
            click.echo(
                f"wilcoxon (correctness) {first} vs {second}: "
                f"p={report.wilcoxon_p_correctness:.6f}"
            )
        else:
            click.echo(f"wilcoxon {first} vs {second}: {report.wilcoxon_note}")
        if report.gold_prob_wilcoxon_p is not None:
            click.echo(
                f"wilcoxon (gold probability) {first} vs {second}: "
                f"p={report.gold_prob_wilcoxon_p:.6f}"
            )
    click.echo(f"difficult questions: {len(report.difficult_ids)}")
    for algorithm, counts in sorted(report.rank_histograms.items()):
        rendered = "  ".join(
            f"rank{rank}={count}" for rank, count in enumerate(counts, start=1)
        )
        click.echo(f"ranks {algorithm:<16} {rendered}")
    if out_dir is not None:
        _write_analysis_files(report, Path(out_dir))
        click.echo(f"analysis files written to {out_dir}")


@main.group()
def cache() -> None:
    """Inspect or clear the completion cache."""


@cache.command("stats")
@click.option("--cache-dir", required=True, type=click.Path(file_okay=False))
@_friendly
def cache_stats(cache_dir):
    """Print entry count and total size of a cache directory."""
    stats = ResponseCache(cache_dir).stats()
    click.echo(json.dumps(stats, indent=2, sort_keys=True))


@cache.command("purge")
@click.option("--cache-dir", required=True, type=click.Path(file_okay=False))
@_friendly
def cache_purge(cache_dir):
    """Delete every entry in a cache directory."""
    removed = ResponseCache(cache_dir).purge()
    click.echo(f"removed {removed} entries from {cache_dir}")


if __name__ == "__main__":
    main()
