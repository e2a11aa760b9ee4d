"""Record API fixtures for the console tests from a live service.

Two scenarios run against real `agentfirm serve` processes with mock
backends, and every fixture file is the raw response body exactly as the
service sent it. The tests then check that the console renders those
bytes faithfully.

Usage: python3 scripts/record_fixtures.py  (from the frontend directory)
"""

from __future__ import annotations

import http.client
import json
import socket
import subprocess
import sys
import tempfile
import threading
import time
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def decomposition(*subtasks):
    body = json.dumps(
        {
            "subtasks": [
                {"description": d, "tags": list(t), "difficulty": "easy"}
                for d, t in subtasks
            ]
        }
    )
    return f"```json\n{body}\n```"


# Costs at 0.01 cr per token against a 90 cr limit: alpha 45, beta 38,
# gamma 45 (refused at charge time, 83 + 45 > 90), delta 7 (83 + 7 = 90,
# landing the gauge on exactly 100%).
REFUSAL_CEO_RULES = [
    {
        "match": "Break the user request",
        "response": decomposition(
            ("alpha lookup", ["search"]),
            ("beta lookup", ["search"]),
            ("gamma lookup", ["search"]),
            ("delta lookup", ["search"]),
        ),
    },
    {"match": "Task: gamma lookup", "response": "gamma handled directly by the ceo"},
    {
        "match": "Combine the following sub-task results",
        "response": "All lookups finished; the gamma call was refused by the budget and answered in-house.",
    },
    {"match": "", "response": "(unscripted request)"},
]

REFUSAL_API_RULES = [
    {"match": "alpha lookup", "response": "alpha-result", "in_tokens": 2000, "out_tokens": 2500},
    {"match": "beta lookup", "response": "beta-result", "in_tokens": 1800, "out_tokens": 2000},
    {"match": "gamma lookup", "response": "gamma-result", "in_tokens": 2000, "out_tokens": 2500},
    {"match": "delta lookup", "response": "delta-result", "in_tokens": 400, "out_tokens": 300},
    {"match": "", "response": "(unscripted request)"},
]

ACTIVE_CEO_RULES = [
    {
        "match": "(?s)Break the user request.*sorting code",
        "response": decomposition(("repair the sort function", ["code"])),
    },
    {
        "match": "(?s)Break the user request.*remember that I am vegetarian",
        "response": decomposition(("store the user dietary preference", [])),
    },
    {
        "match": "Task: store the user dietary preference",
        "response": (
            'TOOL_CALL: {"tool": "memory_manager", "arguments": {"action": "add_memory", '
            '"key": "diet", "memory": "The user is vegetarian; suggest only meat-free dinner ideas."}}'
            "\nStored. [ack-stored]"
        ),
    },
    {
        "match": "(?s)Combine the following sub-task results.*comparator",
        "response": "The sort bug is fixed; a regression test now covers it.",
    },
    {
        "match": "(?s)Combine the following sub-task results.*ack-stored",
        "response": "Noted: I will remember that you are vegetarian.",
    },
    {"match": "", "response": "(unscripted request)"},
]

ACTIVE_CODER_RULES = [
    {"match": "", "response": "patched the comparator and added a regression test"},
]

WORD_COUNT_JSON = {
    "name": "word_count",
    "description": "counts words in text",
    "parameters": {
        "text": {"type": "string", "required": True, "description": "input text"}
    },
    "implementation_ref": "word_count.py",
    "provenance": "user",
}

WORD_COUNT_PY = """import json, sys

def main():
    args = json.load(sys.stdin)
    print(json.dumps({"words": len(args["text"].split())}))

if __name__ == "__main__":
    main()
"""


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def write_jsonl(path: Path, rules) -> None:
    path.write_text("\n".join(json.dumps(r) for r in rules) + "\n")


def wait_for(port: int, timeout=15.0) -> None:
    deadline = time.time() + timeout
    while time.time() < deadline:
        try:
            with socket.create_connection(("127.0.0.1", port), timeout=1):
                return
        except OSError:
            time.sleep(0.2)
    raise RuntimeError(f"service on port {port} never came up")


def request(port: int, method: str, path: str, body=None) -> bytes:
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=15)
    payload = json.dumps(body).encode() if body is not None else None
    headers = {"Content-Type": "application/json"} if payload else {}
    conn.request(method, path, body=payload, headers=headers)
    resp = conn.getresponse()
    data = resp.read()
    conn.close()
    if resp.status >= 400:
        raise RuntimeError(f"{method} {path} -> {resp.status}: {data[:200]!r}")
    return data


def record_sse(port: int, session_id: str, collected: bytearray, ready: threading.Event):
    conn = http.client.HTTPConnection("127.0.0.1", port, timeout=30)
    conn.request("GET", f"/sessions/{session_id}/events")
    resp = conn.getresponse()
    ready.set()
    while True:
        chunk = resp.read1(1024)
        if not chunk:
            break
        collected.extend(chunk)
        if b'"type": "ledger"' in collected:
            break
    conn.close()


def run_scenario(name: str, config: dict, workdir: Path, steps) -> None:
    port = free_port()
    config_path = workdir / f"{name}-config.json"
    config_path.write_text(json.dumps(config, indent=2))
    proc = subprocess.Popen(
        ["agentfirm", "serve", "--config", str(config_path), "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
    )
    try:
        wait_for(port)
        steps(port)
    finally:
        proc.terminate()
        try:
            proc.wait(timeout=3)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait(timeout=10)


def save(name: str, data: bytes) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_bytes(data)
    print(f"wrote {name} ({len(data)} bytes)")


def refusal_scenario(workdir: Path) -> None:
    write_jsonl(workdir / "refusal-ceo.jsonl", REFUSAL_CEO_RULES)
    write_jsonl(workdir / "refusal-api.jsonl", REFUSAL_API_RULES)
    config = {
        "budget": {"expense_limit_credits": 90, "vram_capacity_gib": 8},
        "cost_policy": {
            "bonus_rate": 1.0,
            "salary_rate": 0.25,
            "external_pricing": {"api-x": {"input_per_token": 0.01, "output_per_token": 0.01}},
        },
        "backends": [
            {"backend_id": "ceo", "kind": "mock", "script_path": str(workdir / "refusal-ceo.jsonl")},
            {"backend_id": "api-x", "kind": "mock", "script_path": str(workdir / "refusal-api.jsonl")},
        ],
        "catalog": [
            {
                "backend_id": "api-x",
                "locality": "external",
                "vram_footprint_gib": 0,
                "capability_tags": ["search"],
            }
        ],
        "ceo": {"backend_id": "ceo"},
    }

    def steps(port: int) -> None:
        session = json.loads(request(port, "POST", "/sessions", {}))
        sid = session["session_id"]
        collected = bytearray()
        ready = threading.Event()
        listener = threading.Thread(
            target=record_sse, args=(port, sid, collected, ready), daemon=True
        )
        listener.start()
        ready.wait(5)
        message = request(
            port,
            "POST",
            f"/sessions/{sid}/messages",
            {"text": "Run the alpha lookup, the beta lookup, and the gamma lookup."},
        )
        listener.join(10)
        ledger = request(port, "GET", "/admin/ledger")
        snapshot = json.loads(ledger)
        if snapshot["spent_microcredits"] != snapshot["expense_limit_microcredits"]:
            raise RuntimeError(f"refusal fixture must land on a full budget, got {snapshot}")
        save("refusal-message.json", message)
        save("refusal-events.sse.txt", bytes(collected))
        save("refusal-transcript.json", request(port, "GET", f"/sessions/{sid}"))
        save("refusal-ledger.json", ledger)
        save("refusal-roster.json", request(port, "GET", "/admin/roster"))
        save("refusal-tools.json", request(port, "GET", "/admin/tools"))
        save("refusal-memory.json", request(port, "GET", "/admin/memory"))

    run_scenario("refusal", config, workdir, steps)


def active_scenario(workdir: Path) -> None:
    write_jsonl(workdir / "active-ceo.jsonl", ACTIVE_CEO_RULES)
    write_jsonl(workdir / "active-coder.jsonl", ACTIVE_CODER_RULES)
    tools_dir = workdir / "tools"
    tools_dir.mkdir()
    (tools_dir / "word_count.json").write_text(json.dumps(WORD_COUNT_JSON, indent=2))
    (tools_dir / "word_count.py").write_text(WORD_COUNT_PY)
    config = {
        "budget": {"expense_limit_credits": 100, "vram_capacity_gib": 8},
        "cost_policy": {"bonus_rate": 1.0, "salary_rate": 0.25, "external_pricing": {}},
        "backends": [
            {"backend_id": "ceo", "kind": "mock", "script_path": str(workdir / "active-ceo.jsonl")},
            {"backend_id": "coder", "kind": "mock", "script_path": str(workdir / "active-coder.jsonl")},
        ],
        "catalog": [
            {
                "backend_id": "coder",
                "locality": "local",
                "vram_footprint_gib": 4,
                "capability_tags": ["code"],
            }
        ],
        "ceo": {"backend_id": "ceo"},
        "tools": {"directory": str(tools_dir)},
    }

    def steps(port: int) -> None:
        session = json.loads(request(port, "POST", "/sessions", {}))
        sid = session["session_id"]
        message = request(
            port, "POST", f"/sessions/{sid}/messages", {"text": "please fix the sorting code"}
        )
        request(
            port, "POST", f"/sessions/{sid}/messages", {"text": "Please remember that I am vegetarian."}
        )
        save("active-message.json", message)
        save("active-transcript.json", request(port, "GET", f"/sessions/{sid}"))
        save("active-ledger.json", request(port, "GET", "/admin/ledger"))
        save("active-roster.json", request(port, "GET", "/admin/roster"))
        save("active-tools.json", request(port, "GET", "/admin/tools"))
        save("active-memory.json", request(port, "GET", "/admin/memory"))

    run_scenario("active", config, workdir, steps)


def main() -> int:
    with tempfile.TemporaryDirectory(prefix="console-fixtures-") as tmp:
        workdir = Path(tmp)
        refusal_scenario(workdir)
        active_scenario(workdir)
    print("done")
    return 0


if __name__ == "__main__":
    sys.exit(main())
