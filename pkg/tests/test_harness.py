"""Harness tests: dataset loading, grading, benchmark runs and reports."""

from __future__ import annotations

import json

import pytest

from agentfirm.config import RuntimeConfig
from agentfirm.errors import MalformedItem
from agentfirm.harness import (
    BenchmarkItem,
    GradingRule,
    format_console,
    grade_answer,
    load_dataset,
    run_benchmark,
)

from conftest import single_subtask_decomposition


# --- grading rules ---


def test_grading_rule_parsing() -> None:
    rule = GradingRule.from_dict({"rule": "numeric", "value": "5", "tolerance": 0.1})
    assert rule.value == "5" and rule.tolerance == 0.1
    pm = GradingRule.from_dict({"rule": "numeric", "value": "3.14 ± 0.01"})
    assert pm.value == "3.14" and pm.tolerance == 0.01
    ascii_pm = GradingRule.from_dict({"rule": "numeric", "value": "10 +/- 2"})
    assert ascii_pm.value == "10" and ascii_pm.tolerance == 2.0
    with pytest.raises(MalformedItem):
        GradingRule.from_dict({"rule": "fuzzy", "value": "x"})
    with pytest.raises(MalformedItem):
        GradingRule.from_dict({"rule": "exact", "value": ""})
    with pytest.raises(MalformedItem):
        GradingRule.from_dict({"rule": "numeric", "value": "not a number"})
    with pytest.raises(MalformedItem):
        GradingRule.from_dict({"rule": "regex", "value": "(unclosed"})
    with pytest.raises(MalformedItem):
        GradingRule.from_dict({"rule": "numeric", "value": "5", "tolerance": -1})


def test_grade_answer_exact_contains_regex() -> None:
    assert grade_answer("  Paris  ", GradingRule("exact", "Paris"))
    assert not grade_answer("paris", GradingRule("exact", "Paris"))
    assert grade_answer("The answer is Paris, France.", GradingRule("contains", "Paris"))
    assert not grade_answer("Lyon", GradingRule("contains", "Paris"))
    assert grade_answer("total: 42 units", GradingRule("regex", r"\b42\b"))
    assert not grade_answer("total: 420 units", GradingRule("regex", r"\b42\b"))


def test_grade_answer_numeric_uses_last_number() -> None:
    rule = GradingRule("numeric", "7", tolerance=0.0)
    assert grade_answer("first 3, then 5, finally 7", rule)
    assert not grade_answer("7 at the start but 9 at the end", rule)
    assert not grade_answer("no numbers here", rule)
    assert grade_answer("roughly 7.3", GradingRule("numeric", "7", tolerance=0.5))
    assert not grade_answer("roughly 7.6", GradingRule("numeric", "7", tolerance=0.5))
    assert grade_answer("about 1.5e2 total", GradingRule("numeric", "150", tolerance=0))
    assert grade_answer("drops to -4 degrees", GradingRule("numeric", "-4", tolerance=0))


def test_grade_answer_is_pure() -> None:
    rule = GradingRule("numeric", "12", tolerance=1.0)
    verdicts = {grade_answer("the count is 12.5", rule) for _ in range(50)}
    assert verdicts == {True}


# --- dataset loading ---


def test_load_dataset_happy_and_sad_paths(tmp_path) -> None:
    path = tmp_path / "data.jsonl"
    path.write_text(
        "\n".join(
            [
                json.dumps(
                    {
                        "id": "q1",
                        "prompt": "What is 2 plus 3?",
                        "answer": {"rule": "numeric", "value": "5"},
                        "category": "arithmetic",
                    }
                ),
                "",
                json.dumps(
                    {
                        "id": "q2",
                        "prompt": "Name the capital of France.",
                        "answer": {"rule": "contains", "value": "Paris"},
                    }
                ),
            ]
        )
    )
    items = load_dataset(path)
    assert [i.item_id for i in items] == ["q1", "q2"]
    assert items[0].category == "arithmetic"
    assert items[1].category == "default"

    path.write_text('{"id": "q1"}\n')
    with pytest.raises(MalformedItem) as err:
        load_dataset(path)
    assert err.value.line_no == 1

    path.write_text(
        json.dumps({"id": "a", "prompt": "p", "answer": {"rule": "exact", "value": "x"}})
        + "\n"
        + json.dumps({"id": "a", "prompt": "p2", "answer": {"rule": "exact", "value": "y"}})
        + "\n"
    )
    with pytest.raises(MalformedItem) as err:
        load_dataset(path)
    assert err.value.line_no == 2
    assert "duplicate" in str(err.value)

    path.write_text("this is not json\n")
    with pytest.raises(MalformedItem):
        load_dataset(path)


# --- end-to-end benchmark runs ---


def bench_config(write_script, answers):
    """A mock config that answers prompts from a phrase -> response mapping.

    The script never produces a parseable decomposition, so the pipeline
    falls back to one direct task carrying the full user prompt; that is
    what lets per-item rules see the item's own phrase. The synthesis
    prompt embeds the original request, so a matching synthesis rule
    echoes the answer through."""
    ceo_rules = []
    for match_text, response in answers.items():
        ceo_rules.append({"match": f"(?s)Task: .*{match_text}", "response": response})
        ceo_rules.append(
            {
                "match": f"(?s)Combine the following sub-task results.*{match_text}",
                "response": response,
            }
        )
    ceo_rules.append(
        {"match": "Combine the following sub-task results", "response": "synth fallback"}
    )
    return RuntimeConfig.from_dict(
        {
            "budget": {"expense_limit_credits": 50, "vram_capacity_gib": 16},
            "cost_policy": {"bonus_rate": 1.0, "salary_rate": 0.1},
            "backends": [
                {
                    "backend_id": "ceo",
                    "kind": "mock",
                    "script_path": write_script(ceo_rules, name="bench-ceo.jsonl"),
                }
            ],
            "catalog": [],
            "ceo": {"backend_id": "ceo"},
        }
    )


def test_run_benchmark_grades_and_attributes(tmp_path, write_script) -> None:
    # direct answers keyed by a phrase from each prompt; synthesis combines,
    # so "contains" rules grade robustly
    config = bench_config(
        write_script,
        {
            "2 plus 3": "the total is 5",
            "capital of France": "Paris is the capital",
            "square root of 16": "it is 3",  # deliberately wrong
        },
    )
    items = [
        BenchmarkItem("q1", "What is 2 plus 3?", GradingRule("contains", "5"), "math"),
        BenchmarkItem(
            "q2", "Name the capital of France.", GradingRule("contains", "Paris"), "geo"
        ),
        BenchmarkItem(
            "q3", "What is the square root of 16?", GradingRule("contains", "4"), "math"
        ),
    ]
    out = tmp_path / "report.json"
    report = run_benchmark(config, items, out_path=out)

    assert [r.item_id for r in report.items] == ["q1", "q2", "q3"]
    assert [r.correct for r in report.items] == [True, True, False]
    assert report.success_rate_pct == pytest.approx(100.0 * 2 / 3)
    assert report.average_seconds >= 0
    # the mock ceo backend is unpriced, so nothing is ever charged
    assert report.total_microcredits == 0
    assert report.config_digest == config.digest()
    assert "ceo" in report.backend_ids

    written = json.loads(out.read_text())
    assert written["success_rate_pct"] == report.success_rate_pct
    assert len(written["items"]) == 3

    console = format_console(report)
    assert "q1" in console and "success" in console


def test_run_benchmark_rejects_bad_parallel(write_script) -> None:
    config = bench_config(write_script, {})
    with pytest.raises(ValueError):
        run_benchmark(config, [], parallel=0)


def test_run_benchmark_parallel_matches_serial(write_script) -> None:
    answers = {f"question {i} ": f"answer number {i}" for i in range(8)}
    items = [
        BenchmarkItem(
            f"q{i}",
            f"please handle question {i} now",
            GradingRule("contains", f"answer number {i}"),
        )
        for i in range(8)
    ]
    serial = run_benchmark(bench_config(write_script, answers), items, parallel=1)
    concurrent = run_benchmark(bench_config(write_script, answers), items, parallel=4)
    assert [r.correct for r in serial.items] == [r.correct for r in concurrent.items]
    assert [r.response for r in serial.items] == [r.response for r in concurrent.items]
    assert serial.success_rate_pct == concurrent.success_rate_pct == 100.0
    assert serial.total_microcredits == concurrent.total_microcredits


def test_run_benchmark_fresh_runtime_each_call(write_script) -> None:
    # a failure critique recorded in run one must not leak into run two
    config = bench_config(write_script, {"lonely question": "wrong on purpose"})
    items = [
        BenchmarkItem("q1", "this is a lonely question", GradingRule("contains", "right"))
    ]
    first = run_benchmark(config, items)
    second = run_benchmark(config, items)
    assert first.items[0].correct is False
    assert second.items[0].response == first.items[0].response
