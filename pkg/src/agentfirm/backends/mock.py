"""Scripted mock backend.

A script is a JSONL file of rules:

    {"match": "substring or regex", "response": "...",
     "in_tokens": 12, "out_tokens": 34, "delay_ms": 5}

The first rule whose pattern matches the rendered request wins; the last
rule must be a catch-all ("" or ".*") so a mock can never fall through.
delay_ms is reported as the completion latency without actually sleeping;
token fields default to whitespace counts of the request/response.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import InvalidEndpoint
from .base import BackendEndpoint, ChatMessage, Completion, count_tokens

CATCH_ALL_PATTERNS = ("", ".*")


@dataclass(frozen=True)
class MockRule:
    match: str
    response: str
    in_tokens: int | None = None
    out_tokens: int | None = None
    delay_ms: int = 0


def load_script(path) -> tuple:
    """Parse and validate a mock script. Raises InvalidEndpoint on any
    structural problem, including a missing final catch-all."""
    script_path = Path(path)
    if not script_path.exists():
        raise InvalidEndpoint(f"mock script not found: {script_path}")
    rules = []
    for line_no, line in enumerate(script_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidEndpoint(f"mock script line {line_no}: invalid JSON ({exc})")
        if not isinstance(raw, dict) or "match" not in raw or "response" not in raw:
            raise InvalidEndpoint(
                f"mock script line {line_no}: each rule needs match and response"
            )
        rules.append(
            MockRule(
                match=str(raw["match"]),
                response=str(raw["response"]),
                in_tokens=None if raw.get("in_tokens") is None else int(raw["in_tokens"]),
                out_tokens=None if raw.get("out_tokens") is None else int(raw["out_tokens"]),
                delay_ms=int(raw.get("delay_ms", 0)),
            )
        )
    if not rules:
        raise InvalidEndpoint(f"mock script {script_path} is empty")
    if rules[-1].match not in CATCH_ALL_PATTERNS:
        raise InvalidEndpoint(
            f"mock script {script_path} must end with a catch-all rule "
            f'(match "" or ".*")'
        )
    return tuple(rules)


def render_request_text(system_prompt: str, messages: list) -> str:
    lines = [system_prompt]
    for message in messages:
        lines.append(f"{message.role}: {message.content}")
    return "\n".join(lines)


def _matches(pattern: str, text: str) -> bool:
    if pattern == "":
        return True
    try:
        return re.search(pattern, text, re.DOTALL) is not None
    except re.error:
        return pattern in text


def run_mock(rules, endpoint: BackendEndpoint, system_prompt: str, messages: list) -> Completion:
    text = render_request_text(system_prompt, messages)
    for rule in rules:
        if _matches(rule.match, text):
            in_tokens = rule.in_tokens if rule.in_tokens is not None else count_tokens(text)
            out_tokens = (
                rule.out_tokens if rule.out_tokens is not None else count_tokens(rule.response)
            )
            return Completion(
                text=rule.response,
                input_tokens=in_tokens,
                output_tokens=out_tokens,
                latency=rule.delay_ms / 1000.0,
                backend_id=endpoint.backend_id,
            )
    # unreachable: load_script guarantees a catch-all
    raise AssertionError("mock script had no matching rule")
