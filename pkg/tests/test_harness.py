"""Dataset loading, scoring, the signed-rank test, and cross-run analysis.

Hand-derived fixtures frozen before running the code:

* signed-rank on differences [1, -2, 3, -4, 5, 6]: |d| ranks 1..6, positive
  rank sum 1+3+5+6 = 15 of total 21, tails at 6 and 15 each hold 14 of the 64
  sign assignments, so p = 28/64 = 0.4375
* differences [1, -1, 2, 2, -3] (ties): doubled average ranks [3, 3, 7, 7, 10],
  positive doubled sum 17 of 30, each tail holds 15 of the 32 sign
  assignments (only sums 14 and 16 fall between): p = 30/32 = 0.9375
* differences [0, 1, 2, 3, -4]: dropping the zero gives p = 14/16 = 0.875;
  ranking the zero first and then discarding it (pratt) gives p = 12/16 = 0.75
* accuracy 3/4 has standard error sqrt(0.75 * 0.25 / 4) = 0.2165063...;
  accuracy 1154/1319 = 0.874905... has standard error 0.0091091...
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest

from radkit.answers import Answer, TaskKind
from radkit.harness.analysis import (
    MismatchedItemSets,
    MissingDistribution,
    analyze_runs,
    difficult_filter,
    gold_probability_series,
    rank_histogram,
)
from radkit.harness.dataset import (
    Dataset,
    DatasetItem,
    DuplicateId,
    MalformedRecord,
    load_dataset,
    render_options,
    save_dataset,
)
from radkit.harness.metrics import ItemResult, Metrics, RunRecord, score
from radkit.harness.wilcoxon import (
    EXACT_LIMIT,
    AllZeroDifferences,
    wilcoxon_signed_rank,
)

from conftest import dist, num


# ---------------------------------------------------------------------------
# Dataset loading
# ---------------------------------------------------------------------------

def write_lines(tmp_path, lines, name="data.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_load_numeric_dataset(tmp_path):
    path = write_lines(
        tmp_path,
        [
            '{"question": "What is 2 + 2?", "answer": "4"}',
            "",
            '{"id": "q7", "question": "Share of the pie?", "answer": "0.066666"}',
            '{"question": "How many?", "answer": 2500000}',
        ],
    )
    ds = load_dataset(path, TaskKind.NUMERIC)
    assert ds.name == "data"
    assert ds.kind is TaskKind.NUMERIC
    # Synthesized ids are zero-padded physical line numbers.
    assert ds.ids() == ("0001", "q7", "0004")
    assert ds.item("q7").gold == num("0.067")
    assert ds.item("0004").gold == num(2500000)
    assert ds.item("0001").question == "What is 2 + 2?"


def test_load_multiple_choice_renders_options(tmp_path):
    path = write_lines(
        tmp_path,
        ['{"question": "Which color?", "answer": "b", '
         '"options": ["red", "blue", "green"]}'],
    )
    ds = load_dataset(path, TaskKind.MULTIPLE_CHOICE, name="colors")
    assert ds.name == "colors"
    item = ds.item("0001")
    assert item.question == (
        "Which color? Answer Choices: (A) red (B) blue (C) green"
    )
    assert item.gold == Answer.choice("B")


def test_render_options_caps_at_five_letters():
    text = render_options("Pick one.", ["a", "b", "c", "d", "e", "f"])
    assert text == "Pick one. Answer Choices: (A) a (B) b (C) c (D) d (E) e"


@pytest.mark.parametrize(
    "line,fragment",
    [
        ("{not json", "invalid JSON"),
        ("[1, 2]", "not an object"),
        ('{"answer": "4"}', "missing field"),
        ('{"question": "q"}', "missing field"),
        ('{"question": "  ", "answer": "4"}', "non-empty string"),
        ('{"question": "q", "answer": "abc"}', "bad gold answer"),
        ('{"question": "q", "answer": "4", "options": "oops"}', "string list"),
    ],
)
def test_load_rejects_malformed_records(tmp_path, line, fragment):
    path = write_lines(tmp_path, ['{"question": "ok", "answer": "1"}', line])
    with pytest.raises(MalformedRecord) as err:
        load_dataset(path, TaskKind.NUMERIC)
    assert err.value.line == 2
    assert fragment in str(err.value)


def test_load_rejects_duplicate_ids(tmp_path):
    path = write_lines(
        tmp_path,
        [
            '{"id": "a", "question": "q1", "answer": "1"}',
            '{"id": "a", "question": "q2", "answer": "2"}',
        ],
    )
    with pytest.raises(DuplicateId):
        load_dataset(path, TaskKind.NUMERIC)


def test_dataset_round_trip(tmp_path):
    ds = Dataset(
        name="mini",
        kind=TaskKind.NUMERIC,
        items=(
            DatasetItem("0001", "What is 2 + 2?", num(4)),
            DatasetItem("0002", "Half of 9?", num("4.5")),
        ),
    )
    path = tmp_path / "mini.jsonl"
    save_dataset(ds, path)
    again = load_dataset(path, TaskKind.NUMERIC, name="mini")
    assert again == ds
    with pytest.raises(KeyError):
        again.item("missing")


def test_dataset_rejects_duplicate_items():
    item = DatasetItem("0001", "q", num(1))
    with pytest.raises(DuplicateId):
        Dataset(name="bad", kind=TaskKind.NUMERIC, items=(item, item))


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def result(item_id, correct, gold_prob=None, llm_calls=1):
    distribution = None
    if gold_prob is not None:
        leftover = 1 - Fraction(gold_prob)
        pairs = [(999, gold_prob)] if leftover == 0 else [
            (999, gold_prob), (111, leftover)
        ]
        distribution = dist(pairs)
    return ItemResult(
        item_id=item_id,
        predicted=num(999) if correct else num(111),
        correct=correct,
        distribution=distribution,
        llm_calls=llm_calls,
    )


def test_score_three_of_four():
    run = RunRecord(
        dataset="d", algorithm="a",
        per_item=tuple(result(f"{i:04d}", i < 3) for i in range(4)),
    )
    metrics = score(run)
    assert metrics.accuracy == 0.75
    assert metrics.n == 4
    assert metrics.stderr == pytest.approx(0.21650635094610965, abs=1e-12)


def test_score_large_run():
    per_item = tuple(result(f"{i:05d}", i < 1154) for i in range(1319))
    metrics = score(RunRecord(dataset="d", algorithm="a", per_item=per_item))
    assert metrics.accuracy == pytest.approx(0.874905231, abs=1e-9)
    assert metrics.stderr == pytest.approx(0.0091, abs=5e-5)


def test_score_validation():
    with pytest.raises(ValueError):
        score(RunRecord(dataset="d", algorithm="a", per_item=()))
    with pytest.raises(ValueError):
        ItemResult("x", None, False, None, llm_calls=-1)
    with pytest.raises(ValueError):
        RunRecord(
            dataset="d", algorithm="a",
            per_item=(result("same", True), result("same", False)),
        )


# ---------------------------------------------------------------------------
# Signed-rank test: brute-force oracle first
# ---------------------------------------------------------------------------

def brute_force_signed_rank(diffs):
    """Exact two-sided p by enumerating all 2^n sign assignments.

    Independent of the implementation: ranks are exact fractions and the tail
    mass comes from explicit enumeration, not dynamic programming.
    """
    nonzero = [d for d in diffs if d != 0]
    if not nonzero:
        raise AllZeroDifferences("no nonzero differences")
    magnitudes = sorted(abs(d) for d in nonzero)
    ranks = []
    for d in nonzero:
        positions = [i + 1 for i, m in enumerate(magnitudes) if m == abs(d)]
        ranks.append(Fraction(sum(positions), len(positions)))
    observed = sum((r for r, d in zip(ranks, nonzero) if d > 0), Fraction(0))
    total = sum(ranks)
    lo, hi = min(observed, total - observed), max(observed, total - observed)
    mass = 0
    for signs in itertools.product((0, 1), repeat=len(nonzero)):
        w = sum((r for r, s in zip(ranks, signs) if s), Fraction(0))
        if w <= lo or w >= hi:
            mass += 1
    return min(1.0, float(Fraction(mass, 2 ** len(nonzero))))


def pairs_from_diffs(diffs):
    return [float(d) for d in diffs], [0.0] * len(diffs)


def test_signed_rank_known_value_without_ties():
    x, y = pairs_from_diffs([1, -2, 3, -4, 5, 6])
    p = wilcoxon_signed_rank(x, y)
    assert p == 0.4375
    assert brute_force_signed_rank([1, -2, 3, -4, 5, 6]) == 0.4375


def test_signed_rank_known_value_with_ties():
    diffs = [1, -1, 2, 2, -3]
    p = wilcoxon_signed_rank(*pairs_from_diffs(diffs))
    assert p == 0.9375
    assert brute_force_signed_rank(diffs) == 0.9375


def test_signed_rank_zero_methods_differ():
    diffs = [0, 1, 2, 3, -4]
    assert wilcoxon_signed_rank(*pairs_from_diffs(diffs)) == 0.875
    assert (
        wilcoxon_signed_rank(*pairs_from_diffs(diffs), zero_method="pratt") == 0.75
    )


def test_signed_rank_matches_brute_force_on_random_vectors():
    # 100 random difference vectors, n <= 10, with deliberate ties and zeros
    # removed (the oracle drops zeros the same way the default method does).
    rng = random.Random(77)
    checked = 0
    while checked < 100:
        n = rng.randint(1, 10)
        diffs = [
            rng.choice([-3, -2, -1, 1, 2, 3]) * rng.choice([1, 1, 2])
            for _ in range(n)
        ]
        x, y = pairs_from_diffs(diffs)
        p_impl = wilcoxon_signed_rank(x, y)
        p_oracle = brute_force_signed_rank(diffs)
        assert abs(p_impl - p_oracle) <= 1e-12, (diffs, p_impl, p_oracle)
        checked += 1


def test_signed_rank_scale_invariance():
    rng = random.Random(3)
    for _ in range(20):
        diffs = [rng.uniform(-2, 2) for _ in range(12)]
        if all(d == 0 for d in diffs):
            continue
        x, y = pairs_from_diffs(diffs)
        scaled = [d * 37.5 for d in diffs]
        assert wilcoxon_signed_rank(x, y) == wilcoxon_signed_rank(
            *pairs_from_diffs(scaled)
        )


def test_signed_rank_approximation_formula():
    # 30 pairs, all differences +1 or -1 (one shared rank): the statistic
    # follows the stated normal approximation with tie-corrected variance.
    diffs = [1.0] * 20 + [-1.0] * 10
    p = wilcoxon_signed_rank(*pairs_from_diffs(diffs))
    doubled_rank = 31  # doubled average of ranks 1..30
    observed = 20 * doubled_rank
    mean = 30 * doubled_rank / 2
    variance = 30 * doubled_rank**2 / 4
    expected = math.erfc(abs(observed - mean) / math.sqrt(variance) / math.sqrt(2))
    assert len(diffs) > EXACT_LIMIT
    assert p == pytest.approx(expected, abs=1e-15)


def test_signed_rank_power_under_shift():
    # A 0.5 shift on 50 pairs should be detected at the 5% level nearly always.
    rng = random.Random(2718)
    rejections = 0
    for _ in range(100):
        y = [rng.gauss(0, 1) for _ in range(50)]
        x = [v + 0.5 + rng.gauss(0, 0.5) for v in y]
        if wilcoxon_signed_rank(x, y) < 0.05:
            rejections += 1
    assert rejections >= 95


def test_signed_rank_level_under_null():
    # With no true shift, rejections at the 5% level should be rare.
    rng = random.Random(1414)
    rejections = 0
    for _ in range(200):
        y = [rng.gauss(0, 1) for _ in range(40)]
        x = [v + rng.gauss(0, 1) for v in y]
        if wilcoxon_signed_rank(x, y) < 0.05:
            rejections += 1
    assert rejections <= 24


def test_signed_rank_validation():
    with pytest.raises(AllZeroDifferences):
        wilcoxon_signed_rank([1.0, 2.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([], [])
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0], [0.0], zero_method="mystery")


# ---------------------------------------------------------------------------
# Cross-run analysis
# ---------------------------------------------------------------------------

def gold_dataset() -> Dataset:
    return Dataset(
        name="mini",
        kind=TaskKind.NUMERIC,
        items=tuple(
            DatasetItem(f"{i:04d}", f"Question {i}?", num(999)) for i in range(1, 5)
        ),
    )


def analysis_runs():
    # alpha: correct on 0001-0003; beta: correct only on 0001.
    # Gold-probability design: 0001 tie at 0.9, 0002 alpha ahead (0.6 vs 0.2),
    # 0003 tie at 0.5, 0004 beta ahead (0.3 vs 0.1).
    alpha = RunRecord(
        dataset="mini", algorithm="alpha",
        per_item=(
            result("0001", True, "9/10"),
            result("0002", True, "3/5"),
            result("0003", True, "1/2"),
            result("0004", False, "1/10"),
        ),
    )
    beta = RunRecord(
        dataset="mini", algorithm="beta",
        per_item=(
            result("0001", True, "9/10"),
            result("0002", False, "1/5"),
            result("0003", False, "1/2"),
            result("0004", False, "3/10"),
        ),
    )
    return alpha, beta


def test_difficult_filter():
    alpha, beta = analysis_runs()
    assert difficult_filter([alpha, beta]) == {"0002", "0003", "0004"}


def test_difficult_filter_requires_matching_ids():
    alpha, _ = analysis_runs()
    other = RunRecord(
        dataset="mini", algorithm="gamma", per_item=(result("9999", True),)
    )
    with pytest.raises(MismatchedItemSets):
        difficult_filter([alpha, other])


def test_rank_histogram_with_ties():
    alpha, beta = analysis_runs()
    ids = ["0002", "0003", "0004"]
    histograms = rank_histogram([alpha, beta], gold_dataset(), ids)
    # 0002: alpha first. 0003: exact tie, both take rank 1. 0004: beta first.
    assert histograms == {"alpha": [2, 1], "beta": [2, 1]}
    for counts in histograms.values():
        assert sum(counts) == len(ids)


def test_rank_histogram_missing_distribution():
    alpha, beta = analysis_runs()
    no_dist = RunRecord(
        dataset="mini", algorithm="gamma",
        per_item=tuple(result(f"{i:04d}", True) for i in range(1, 5)),
    )
    with pytest.raises(MissingDistribution) as err:
        rank_histogram([alpha, beta, no_dist], gold_dataset(), ["0002"])
    assert err.value.algorithm == "gamma"
    assert err.value.item_id == "0002"


def test_gold_probability_series():
    alpha, _ = analysis_runs()
    series = gold_probability_series(alpha, gold_dataset(), ["0001", "0004"])
    assert series == [0.9, 0.1]


def test_analyze_runs_report():
    alpha, beta = analysis_runs()
    report = analyze_runs([alpha, beta], gold_dataset())
    assert report.dataset == "mini"
    assert [s.algorithm for s in report.summaries] == ["alpha", "beta"]
    assert report.summaries[0].metrics.accuracy == 0.75
    assert report.summaries[1].metrics.accuracy == 0.25
    assert report.summaries[0].mean_llm_calls == 1.0
    assert report.top_two == ("alpha", "beta")
    # Correctness differences: two items favor alpha (tied ranks), p = 4/8... =
    # both tails of two equal positive ranks: 2 of 4 assignments in each tail.
    assert report.wilcoxon_p_correctness == 0.5
    assert report.wilcoxon_note == ""
    # Gold-probability differences [0.4, -0.2]: tails at doubled sums 2 and 4
    # cover all four assignments: p = 1.0.
    assert report.gold_prob_wilcoxon_p == 1.0
    assert report.difficult_ids == ("0002", "0003", "0004")
    assert report.rank_histograms == {"alpha": [2, 1], "beta": [2, 1]}


def test_analyze_runs_identical_correctness_sets_note():
    alpha, _ = analysis_runs()
    clone = RunRecord(
        dataset="mini", algorithm="alpha-clone", per_item=alpha.per_item
    )
    report = analyze_runs([alpha, clone], gold_dataset())
    assert report.wilcoxon_p_correctness is None
    assert "undefined" in report.wilcoxon_note
    # Distributions are identical too, so the gold-probability test is also
    # undefined and reported as None.
    assert report.gold_prob_wilcoxon_p is None


def test_analyze_runs_tolerates_distribution_free_runs():
    alpha, beta = analysis_runs()
    greedy = RunRecord(
        dataset="mini", algorithm="greedy",
        per_item=tuple(result(f"{i:04d}", i == 1) for i in range(1, 5)),
    )
    report = analyze_runs([alpha, beta, greedy], gold_dataset())
    # The distribution-free run drops out of ranking; the other two remain.
    assert set(report.rank_histograms) == {"alpha", "beta"}
    assert [s.algorithm for s in report.summaries] == ["alpha", "beta", "greedy"]


def test_analyze_single_run():
    alpha, _ = analysis_runs()
    report = analyze_runs([alpha], gold_dataset())
    assert report.top_two is None
    assert report.wilcoxon_p_correctness is None
    assert report.difficult_ids == ("0004",)
