"""Backend endpoints and the hub that dispatches chat calls to them.

Three kinds are supported: "local-server" speaks to a locally hosted
model server, "external-api" to a hosted provider, and "mock" replays a
scripted JSONL file so everything above this layer can be exercised
offline and deterministically.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..errors import DuplicateBackend, InvalidEndpoint, UnknownBackend

KIND_LOCAL_SERVER = "local-server"
KIND_EXTERNAL_API = "external-api"
KIND_MOCK = "mock"
KINDS = (KIND_LOCAL_SERVER, KIND_EXTERNAL_API, KIND_MOCK)


def count_tokens(text: str) -> int:
    """Whitespace token approximation, used when a backend reports no usage.

    Monotone under concatenation with separators: count(a + " " + b) is
    count(a) + count(b), and count(a + b) never exceeds count(a) + count(b) + 1.
    """
    return len(text.split())


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str


@dataclass(frozen=True)
class Completion:
    """One model reply plus its observed usage and latency (seconds)."""

    text: str
    input_tokens: int
    output_tokens: int
    latency: float
    backend_id: str


@dataclass(frozen=True)
class BackendEndpoint:
    backend_id: str
    kind: str
    base_url: str | None = None
    script_path: str | None = None
    model: str | None = None
    auth_env: str | None = None
    temperature: float = 0.2
    max_output_tokens: int = 1024
    timeout_s: float = 60.0

    @classmethod
    def from_dict(cls, raw: dict) -> "BackendEndpoint":
        return cls(
            backend_id=raw["backend_id"],
            kind=raw["kind"],
            base_url=raw.get("base_url"),
            script_path=raw.get("script_path"),
            model=raw.get("model"),
            auth_env=raw.get("auth_env"),
            temperature=float(raw.get("temperature", 0.2)),
            max_output_tokens=int(raw.get("max_output_tokens", 1024)),
            timeout_s=float(raw.get("timeout_s", 60.0)),
        )


class BackendHub:
    """Registered endpoints, validated up front, invoked uniformly.

    Registration returns a list of human-readable warnings (for example an
    external backend with no pricing configured); hard misconfiguration
    raises InvalidEndpoint instead.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._endpoints: dict[str, BackendEndpoint] = {}
        self._scripts: dict[str, tuple] = {}
        self.call_counts: dict[str, int] = {}

    def register_backend(self, endpoint: BackendEndpoint, cost_policy=None) -> list:
        from .mock import load_script  # deferred: mock imports base types

        warnings = []
        if endpoint.kind not in KINDS:
            raise InvalidEndpoint(f"unknown backend kind {endpoint.kind!r}")
        if endpoint.timeout_s <= 0:
            raise InvalidEndpoint("timeout_s must be positive")
        if endpoint.kind == KIND_MOCK:
            if not endpoint.script_path:
                raise InvalidEndpoint("mock backends need a script_path")
            rules = load_script(endpoint.script_path)
        else:
            if not endpoint.base_url:
                raise InvalidEndpoint(f"{endpoint.kind} backends need a base_url")
            rules = None
        if endpoint.kind == KIND_EXTERNAL_API:
            priced = cost_policy is not None and endpoint.backend_id in cost_policy.external_pricing
            if not priced:
                warnings.append(
                    f"external backend {endpoint.backend_id!r} has no pricing; "
                    "expense charges for it will fail"
                )
        with self._lock:
            if endpoint.backend_id in self._endpoints:
                raise DuplicateBackend(endpoint.backend_id)
            self._endpoints[endpoint.backend_id] = endpoint
            if rules is not None:
                self._scripts[endpoint.backend_id] = rules
            self.call_counts[endpoint.backend_id] = 0
        return warnings

    def get(self, backend_id: str) -> BackendEndpoint:
        with self._lock:
            endpoint = self._endpoints.get(backend_id)
        if endpoint is None:
            raise UnknownBackend(backend_id)
        return endpoint

    def ids(self) -> list:
        with self._lock:
            return sorted(self._endpoints)

    def invoke(
        self,
        backend_id: str,
        system_prompt: str,
        messages: list,
        params: dict | None = None,
    ) -> Completion:
        """Run one chat call. messages must be nonempty ChatMessage objects."""
        from . import http as http_adapters
        from .mock import run_mock

        if not messages:
            raise ValueError("messages must be nonempty")
        endpoint = self.get(backend_id)
        with self._lock:
            self.call_counts[backend_id] += 1
        if endpoint.kind == KIND_MOCK:
            return run_mock(self._scripts[backend_id], endpoint, system_prompt, messages)
        if endpoint.kind == KIND_LOCAL_SERVER:
            return http_adapters.invoke_local_server(endpoint, system_prompt, messages, params)
        return http_adapters.invoke_external_api(endpoint, system_prompt, messages, params)
