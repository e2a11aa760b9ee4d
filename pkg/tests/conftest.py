"""Shared fixtures: mock-script writers and runtime config builders."""

from __future__ import annotations

import json

import pytest


@pytest.fixture
def write_script(tmp_path):
    """Write a mock backend script (list of rule dicts) and return its path.

    Appends a catch-all automatically unless the last rule already is one.
    """

    def _write(rules, name="script.jsonl", catch_all="(unscripted request)"):
        rules = list(rules)
        if not rules or rules[-1].get("match") not in ("", ".*"):
            rules.append({"match": "", "response": catch_all})
        path = tmp_path / name
        with open(path, "w") as fh:
            for rule in rules:
                fh.write(json.dumps(rule) + "\n")
        return str(path)

    return _write


def single_subtask_decomposition(description, tags, difficulty="easy"):
    """A decomposition reply with one subtask."""
    body = json.dumps(
        {"subtasks": [{"description": description, "tags": list(tags), "difficulty": difficulty}]}
    )
    return f"```json\n{body}\n```"


def subtasks_decomposition(subtasks):
    body = json.dumps(
        {
            "subtasks": [
                {
                    "description": d,
                    "tags": list(t),
                    "difficulty": diff,
                }
                for d, t, diff in subtasks
            ]
        }
    )
    return f"```json\n{body}\n```"
