"""Benchmark harness: run a JSONL dataset through the pipeline and report.

Dataset lines look like:

    {"id": "q1", "prompt": "What is 2 plus 3?",
     "answer": {"rule": "numeric", "value": "5", "tolerance": 0},
     "category": "arithmetic"}

Grading rules: exact (stripped string equality), numeric (last number in
the response within tolerance), contains (substring), regex (search).
The report carries per-item records plus aggregates that can be recomputed
from the records; charges are attributed per item from that item's trace,
which stays exact even when items run in parallel.
"""

from __future__ import annotations

import json
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import RuntimeConfig
from .errors import MalformedItem
from .ledger import CATEGORIES
from .runtime import Runtime, build_runtime

RULE_EXACT = "exact"
RULE_NUMERIC = "numeric"
RULE_CONTAINS = "contains"
RULE_REGEX = "regex"
RULES = (RULE_EXACT, RULE_NUMERIC, RULE_CONTAINS, RULE_REGEX)

_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_PM_RE = re.compile(r"^\s*(-?\d+(?:\.\d+)?)\s*(?:\+/-|±)\s*(\d+(?:\.\d+)?)\s*$")


@dataclass(frozen=True)
class GradingRule:
    rule: str
    value: str
    tolerance: float = 0.0

    @classmethod
    def from_dict(cls, raw: dict, line_no: int = 0) -> "GradingRule":
        rule = raw.get("rule")
        if rule not in RULES:
            raise MalformedItem(line_no, f"unknown grading rule {rule!r}")
        value = raw.get("value")
        if not isinstance(value, str) or value == "":
            raise MalformedItem(line_no, "answer.value must be a nonempty string")
        tolerance = float(raw.get("tolerance", 0.0))
        if rule == RULE_NUMERIC:
            pm = _PM_RE.match(value)
            if pm:
                value, tolerance = pm.group(1), float(pm.group(2))
            try:
                float(value)
            except ValueError:
                raise MalformedItem(line_no, f"numeric rule needs a numeric value, got {value!r}")
        if rule == RULE_REGEX:
            try:
                re.compile(value)
            except re.error as exc:
                raise MalformedItem(line_no, f"bad regex: {exc}")
        if tolerance < 0:
            raise MalformedItem(line_no, "tolerance must be nonnegative")
        return cls(rule=rule, value=value, tolerance=tolerance)


@dataclass(frozen=True)
class BenchmarkItem:
    item_id: str
    prompt: str
    answer: GradingRule
    category: str = "default"


def load_dataset(path) -> list:
    """Parse a JSONL dataset, failing loudly with the offending line number."""
    items = []
    seen_ids = set()
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedItem(line_no, f"invalid JSON: {exc}")
        if not isinstance(raw, dict):
            raise MalformedItem(line_no, "item must be a JSON object")
        item_id = raw.get("id")
        if not item_id or not isinstance(item_id, str):
            raise MalformedItem(line_no, "item needs a string id")
        if item_id in seen_ids:
            raise MalformedItem(line_no, f"duplicate id {item_id!r}")
        seen_ids.add(item_id)
        prompt = raw.get("prompt")
        if not prompt or not isinstance(prompt, str):
            raise MalformedItem(line_no, "item needs a nonempty prompt")
        answer = raw.get("answer")
        if not isinstance(answer, dict):
            raise MalformedItem(line_no, "item needs an answer object")
        items.append(
            BenchmarkItem(
                item_id=item_id,
                prompt=prompt,
                answer=GradingRule.from_dict(answer, line_no),
                category=str(raw.get("category", "default")),
            )
        )
    return items


def grade_answer(response: str, rule: GradingRule) -> bool:
    """Pure grading function; identical inputs always grade identically."""
    if rule.rule == RULE_EXACT:
        return response.strip() == rule.value
    if rule.rule == RULE_CONTAINS:
        return rule.value in response
    if rule.rule == RULE_REGEX:
        return re.search(rule.value, response) is not None
    numbers = _NUMBER_RE.findall(response)
    if not numbers:
        return False
    return abs(float(numbers[-1]) - float(rule.value)) <= rule.tolerance


@dataclass(frozen=True)
class ItemRecord:
    item_id: str
    category: str
    response: str
    correct: bool
    wall_seconds: float
    charges_by_category: dict  # microcredits

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "category": self.category,
            "response": self.response,
            "correct": self.correct,
            "wall_seconds": self.wall_seconds,
            "charges_by_category_microcredits": dict(self.charges_by_category),
        }


@dataclass(frozen=True)
class BenchReport:
    items: tuple
    success_rate_pct: float
    average_seconds: float
    total_microcredits: int
    by_category_microcredits: dict
    peak_vram_pct: float
    config_digest: str
    backend_ids: tuple
    started_at: float
    finished_at: float

    def to_dict(self) -> dict:
        return {
            "items": [r.to_dict() for r in self.items],
            "success_rate_pct": self.success_rate_pct,
            "average_seconds": self.average_seconds,
            "total_microcredits": self.total_microcredits,
            "by_category_microcredits": dict(self.by_category_microcredits),
            "peak_vram_pct": self.peak_vram_pct,
            "config_digest": self.config_digest,
            "backend_ids": list(self.backend_ids),
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


def _item_charges(trace) -> dict:
    charges = {c: 0 for c in CATEGORIES}
    for event in trace:
        if event.kind == "charge":
            charges[event.detail["category"]] += event.detail["amount_microcredits"]
    return charges


def _run_item(runtime: Runtime, item: BenchmarkItem) -> ItemRecord:
    session = runtime.orchestrator.open_session(f"bench-{item.item_id}")
    grader = lambda text: grade_answer(text, item.answer)
    start = time.perf_counter()
    response = runtime.orchestrator.handle_query(session, item.prompt, grader=grader)
    elapsed = time.perf_counter() - start
    return ItemRecord(
        item_id=item.item_id,
        category=item.category,
        response=response.text,
        correct=grade_answer(response.text, item.answer),
        wall_seconds=elapsed,
        charges_by_category=_item_charges(response.trace),
    )


def run_benchmark(
    config: RuntimeConfig,
    items: list,
    parallel: int = 1,
    out_path=None,
    console: bool = False,
) -> BenchReport:
    """Run every item against a fresh runtime built from `config`.

    With parallel > 1 items run concurrently on the shared runtime; the
    ledger stays consistent and per-item charge attribution comes from
    each item's own trace. Everything except wall-clock timings is
    deterministic for a deterministic (mock) configuration.
    """
    if parallel < 1:
        raise ValueError("parallel must be at least 1")
    runtime = build_runtime(config)
    started_at = time.time()
    if parallel == 1:
        records = [_run_item(runtime, item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(lambda item: _run_item(runtime, item), items))
    finished_at = time.time()

    n = len(records)
    correct = sum(1 for r in records if r.correct)
    by_category = {c: 0 for c in CATEGORIES}
    for record in records:
        for category, amount in record.charges_by_category.items():
            by_category[category] += amount
    snapshot = runtime.ledger.snapshot()
    report = BenchReport(
        items=tuple(records),
        success_rate_pct=(100.0 * correct / n) if n else 0.0,
        average_seconds=(sum(r.wall_seconds for r in records) / n) if n else 0.0,
        total_microcredits=sum(by_category.values()),
        by_category_microcredits=by_category,
        peak_vram_pct=snapshot.peak_utilization_pct,
        config_digest=config.digest(),
        backend_ids=tuple(runtime.hub.ids()),
        started_at=started_at,
        finished_at=finished_at,
    )
    if out_path is not None:
        Path(out_path).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    if console:
        print(format_console(report))
    return report


def format_console(report: BenchReport) -> str:
    lines = [
        f"{'item':<16} {'cat':<12} {'ok':<3} {'seconds':>8} {'ucr':>12}",
        "-" * 56,
    ]
    for record in report.items:
        total = sum(record.charges_by_category.values())
        lines.append(
            f"{record.item_id:<16} {record.category:<12} "
            f"{'yes' if record.correct else 'no':<3} "
            f"{record.wall_seconds:>8.3f} {total:>12}"
        )
    lines.append("-" * 56)
    lines.append(
        f"success {report.success_rate_pct:.1f}%  avg {report.average_seconds:.3f}s  "
        f"total {report.total_microcredits} ucr  peak VRAM {report.peak_vram_pct:.1f}%"
    )
    lines.append(f"config {report.config_digest[:12]}  backends {', '.join(report.backend_ids)}")
    return "\n".join(lines)
