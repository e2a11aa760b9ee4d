"""Backend tests: token counting, mock scripts, hub dispatch, HTTP adapters."""

from __future__ import annotations

import json
import random
import string
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from agentfirm.backends.base import (
    BackendEndpoint,
    BackendHub,
    ChatMessage,
    count_tokens,
)
from agentfirm.backends.http import invoke_external_api, invoke_local_server
from agentfirm.backends.mock import load_script, render_request_text
from agentfirm.economy import CostPolicy
from agentfirm.errors import (
    BackendError,
    BackendTimeout,
    BackendUnreachable,
    DuplicateBackend,
    InvalidEndpoint,
    UnknownBackend,
)


# --- token counting ---


def test_count_tokens_oracle() -> None:
    # frozen expectations for the whitespace tokenizer
    assert count_tokens("") == 0
    assert count_tokens("   ") == 0
    assert count_tokens("one") == 1
    assert count_tokens("alpha beta   gamma\n delta") == 4


def test_count_tokens_concatenation_superadditive() -> None:
    rng = random.Random(7)
    for _ in range(200):
        a = " ".join(
            "".join(rng.choices(string.ascii_lowercase, k=3))
            for _ in range(rng.randrange(6))
        )
        b = " ".join(
            "".join(rng.choices(string.ascii_lowercase, k=3))
            for _ in range(rng.randrange(6))
        )
        joined = count_tokens(a + " " + b)
        assert joined <= count_tokens(a) + count_tokens(b)
        assert joined >= max(count_tokens(a), count_tokens(b))


# --- mock scripts ---


def test_load_script_requires_final_catchall(tmp_path) -> None:
    path = tmp_path / "rules.jsonl"
    path.write_text(json.dumps({"match": "hello", "response": "hi"}) + "\n")
    with pytest.raises(InvalidEndpoint):
        load_script(str(path))


def test_load_script_rejects_bad_rows(tmp_path) -> None:
    path = tmp_path / "rules.jsonl"
    path.write_text('{"match": "x"}\n{"match": "", "response": "ok"}\n')
    with pytest.raises(InvalidEndpoint):
        load_script(str(path))
    path.write_text("not json\n")
    with pytest.raises(InvalidEndpoint):
        load_script(str(path))
    with pytest.raises(InvalidEndpoint):
        load_script(str(tmp_path / "missing.jsonl"))


def test_mock_first_match_wins(write_script) -> None:
    script = write_script(
        [
            {"match": "alpha", "response": "first"},
            {"match": "alpha beta", "response": "second"},
        ]
    )
    hub = BackendHub()
    hub.register_backend(
        BackendEndpoint(backend_id="m", kind="mock", script_path=script)
    )
    result = hub.invoke("m", "sys", [ChatMessage("user", "alpha beta")])
    assert result.text == "first"


def test_mock_matches_against_system_prompt_too(write_script) -> None:
    script = write_script([{"match": "SECRET-MARKER", "response": "seen"}])
    hub = BackendHub()
    hub.register_backend(
        BackendEndpoint(backend_id="m", kind="mock", script_path=script)
    )
    result = hub.invoke("m", "prompt with SECRET-MARKER", [ChatMessage("user", "hi")])
    assert result.text == "seen"


def test_mock_regex_and_fallback_to_substring(write_script) -> None:
    script = write_script(
        [
            {"match": "ord(er", "response": "literal parens"},  # invalid regex
            {"match": "^start.*end$", "response": "regex hit"},
        ]
    )
    hub = BackendHub()
    hub.register_backend(
        BackendEndpoint(backend_id="m", kind="mock", script_path=script)
    )
    assert hub.invoke("m", "", [ChatMessage("user", "an ord(er form")]).text == "literal parens"
    assert (
        hub.invoke("m", "start", [ChatMessage("user", "middle end")]).text == "regex hit"
    )


def test_mock_token_counts_and_latency(write_script) -> None:
    script = write_script(
        [
            {
                "match": "priced",
                "response": "four words in reply",
                "in_tokens": 11,
                "out_tokens": 7,
                "delay_ms": 2500,
            },
            {"match": "free", "response": "two words"},
        ]
    )
    hub = BackendHub()
    hub.register_backend(
        BackendEndpoint(backend_id="m", kind="mock", script_path=script)
    )
    import time

    start = time.perf_counter()
    priced = hub.invoke("m", "", [ChatMessage("user", "priced")])
    elapsed = time.perf_counter() - start
    assert priced.input_tokens == 11
    assert priced.output_tokens == 7
    assert priced.latency == pytest.approx(2.5)
    assert elapsed < 1.0  # reported latency must not actually sleep

    free = hub.invoke("m", "sys words", [ChatMessage("user", "free text here")])
    assert free.input_tokens == count_tokens(render_request_text("sys words", [ChatMessage("user", "free text here")]))
    assert free.output_tokens == 2


# --- hub registration and dispatch ---


def test_register_duplicate_backend(write_script) -> None:
    hub = BackendHub()
    script = write_script([])
    hub.register_backend(BackendEndpoint(backend_id="m", kind="mock", script_path=script))
    with pytest.raises(DuplicateBackend):
        hub.register_backend(
            BackendEndpoint(backend_id="m", kind="mock", script_path=script)
        )


def test_register_validates_required_fields(write_script) -> None:
    hub = BackendHub()
    with pytest.raises(InvalidEndpoint):
        hub.register_backend(BackendEndpoint(backend_id="m", kind="mock"))
    with pytest.raises(InvalidEndpoint):
        hub.register_backend(BackendEndpoint(backend_id="l", kind="local-server"))
    with pytest.raises(InvalidEndpoint):
        hub.register_backend(BackendEndpoint(backend_id="", kind="mock", script_path="x"))
    with pytest.raises(InvalidEndpoint):
        hub.register_backend(
            BackendEndpoint(backend_id="w", kind="weird", base_url="http://x")
        )


def test_register_warns_on_unpriced_external(write_script) -> None:
    hub = BackendHub()
    policy = CostPolicy.from_dict(
        {
            "bonus_rate": 1,
            "salary_rate": 1,
            "external_pricing": {
                "priced": {"input_per_token": 0.1, "output_per_token": 0.2}
            },
        }
    )
    warnings = hub.register_backend(
        BackendEndpoint(backend_id="priced", kind="external-api", base_url="http://x"),
        cost_policy=policy,
    )
    assert warnings == []
    warnings = hub.register_backend(
        BackendEndpoint(backend_id="unpriced", kind="external-api", base_url="http://x"),
        cost_policy=policy,
    )
    assert len(warnings) == 1
    assert "unpriced" in warnings[0]


def test_invoke_unknown_backend_and_empty_messages(write_script) -> None:
    hub = BackendHub()
    with pytest.raises(UnknownBackend):
        hub.invoke("ghost", "sys", [ChatMessage("user", "hi")])
    script = write_script([])
    hub.register_backend(BackendEndpoint(backend_id="m", kind="mock", script_path=script))
    with pytest.raises(ValueError):
        hub.invoke("m", "sys", [])


def test_invoke_counts_calls(write_script) -> None:
    hub = BackendHub()
    script = write_script([])
    hub.register_backend(BackendEndpoint(backend_id="m", kind="mock", script_path=script))
    assert hub.call_counts.get("m", 0) == 0
    hub.invoke("m", "sys", [ChatMessage("user", "one")])
    hub.invoke("m", "sys", [ChatMessage("user", "two")])
    assert hub.call_counts["m"] == 2


# --- HTTP adapters against a real in-process server ---


class _Handler(BaseHTTPRequestHandler):
    """Scripted responses keyed by request path; records request bodies."""

    script = {}
    seen = []

    def do_POST(self):  # noqa: N802 (http.server API)
        length = int(self.headers.get("Content-Length", "0"))
        body = json.loads(self.rfile.read(length) or b"{}")
        type(self).seen.append({"path": self.path, "headers": dict(self.headers), "body": body})
        status, payload = type(self).script.get(self.path, (404, {"error": "no route"}))
        data = json.dumps(payload).encode() if isinstance(payload, dict) else payload
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def http_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    _Handler.script = {}
    _Handler.seen = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}", _Handler
    server.shutdown()
    thread.join(timeout=5)


def test_local_server_adapter_parses_usage(http_server) -> None:
    base, handler = http_server
    handler.script["/api/chat"] = (
        200,
        {"message": {"content": "the answer"}, "prompt_eval_count": 42, "eval_count": 9},
    )
    endpoint = BackendEndpoint(backend_id="ollama", kind="local-server", base_url=base)
    result = invoke_local_server(endpoint, "sys", [ChatMessage("user", "q")])
    assert result.text == "the answer"
    assert result.input_tokens == 42
    assert result.output_tokens == 9
    assert result.latency > 0
    sent = handler.seen[-1]["body"]
    assert sent["messages"][0] == {"role": "system", "content": "sys"}
    assert sent["stream"] is False


def test_local_server_adapter_estimates_missing_usage(http_server) -> None:
    base, handler = http_server
    handler.script["/api/chat"] = (200, {"message": {"content": "three word reply"}})
    endpoint = BackendEndpoint(backend_id="ollama", kind="local-server", base_url=base)
    result = invoke_local_server(
        endpoint, "two words", [ChatMessage("user", "and three more")]
    )
    assert result.input_tokens == 5
    assert result.output_tokens == 3


def test_external_adapter_parses_openai_shape_and_auth(http_server, monkeypatch) -> None:
    base, handler = http_server
    handler.script["/v1/chat/completions"] = (
        200,
        {
            "choices": [{"message": {"content": "ok"}}],
            "usage": {"prompt_tokens": 100, "completion_tokens": 20},
        },
    )
    monkeypatch.setenv("TEST_API_KEY", "sk-sesame")
    endpoint = BackendEndpoint(
        backend_id="api-x", kind="external-api", base_url=base, auth_env="TEST_API_KEY"
    )
    result = invoke_external_api(endpoint, "sys", [ChatMessage("user", "q")])
    assert result.input_tokens == 100
    assert result.output_tokens == 20
    assert handler.seen[-1]["headers"]["Authorization"] == "Bearer sk-sesame"


def test_external_adapter_missing_auth_env(monkeypatch) -> None:
    monkeypatch.delenv("MISSING_KEY", raising=False)
    endpoint = BackendEndpoint(
        backend_id="api-x",
        kind="external-api",
        base_url="http://127.0.0.1:1",
        auth_env="MISSING_KEY",
    )
    with pytest.raises(BackendError) as err:
        invoke_external_api(endpoint, "sys", [ChatMessage("user", "q")])
    assert "MISSING_KEY" in str(err.value)


def test_http_error_status_carries_detail(http_server) -> None:
    base, handler = http_server
    handler.script["/v1/chat/completions"] = (500, {"error": "overloaded"})
    endpoint = BackendEndpoint(backend_id="api-x", kind="external-api", base_url=base)
    with pytest.raises(BackendError) as err:
        invoke_external_api(endpoint, "sys", [ChatMessage("user", "q")])
    assert err.value.status == 500
    assert "overloaded" in err.value.detail


def test_connection_refused_becomes_unreachable() -> None:
    endpoint = BackendEndpoint(
        backend_id="down", kind="local-server", base_url="http://127.0.0.1:1", timeout_s=2.0
    )
    with pytest.raises(BackendUnreachable):
        invoke_local_server(endpoint, "sys", [ChatMessage("user", "q")])


def test_slow_server_becomes_timeout() -> None:
    class SlowHandler(BaseHTTPRequestHandler):
        def do_POST(self):
            import time

            time.sleep(3)
            self.send_response(200)
            self.end_headers()

        def log_message(self, *args):
            pass

    server = HTTPServer(("127.0.0.1", 0), SlowHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        endpoint = BackendEndpoint(
            backend_id="slow",
            kind="local-server",
            base_url=f"http://127.0.0.1:{server.server_address[1]}",
            timeout_s=0.3,
        )
        with pytest.raises(BackendTimeout):
            invoke_local_server(endpoint, "sys", [ChatMessage("user", "q")])
    finally:
        server.shutdown()
        thread.join(timeout=5)


def test_malformed_response_bodies(http_server) -> None:
    base, handler = http_server
    handler.script["/api/chat"] = (200, {"unexpected": "shape"})
    endpoint = BackendEndpoint(backend_id="l", kind="local-server", base_url=base)
    with pytest.raises(BackendError):
        invoke_local_server(endpoint, "sys", [ChatMessage("user", "q")])
    handler.script["/api/chat"] = (200, b"this is not json")
    with pytest.raises(BackendError):
        invoke_local_server(endpoint, "sys", [ChatMessage("user", "q")])
