"""HTTP adapters for real model servers.

Local servers speak the common POST /api/chat shape; external providers
speak POST /v1/chat/completions. Credentials are only ever read from the
environment variable named by the endpoint, never from config files.
"""

from __future__ import annotations

import os
import time

import requests

from ..errors import BackendError, BackendTimeout, BackendUnreachable
from .base import BackendEndpoint, Completion, count_tokens


def _headers(endpoint: BackendEndpoint) -> dict:
    headers = {"Content-Type": "application/json"}
    if endpoint.auth_env:
        token = os.environ.get(endpoint.auth_env)
        if not token:
            raise BackendError(0, f"auth environment variable {endpoint.auth_env} is not set")
        headers["Authorization"] = f"Bearer {token}"
    return headers


def _post(endpoint: BackendEndpoint, url: str, payload: dict) -> tuple[dict, float]:
    """POST with one retry on connection-level failure. Returns (body, latency)."""
    headers = _headers(endpoint)
    last_exc = None
    for attempt in range(2):
        start = time.perf_counter()
        try:
            response = requests.post(
                url, json=payload, headers=headers, timeout=endpoint.timeout_s
            )
        except requests.Timeout:
            raise BackendTimeout(
                f"{endpoint.backend_id} did not answer within {endpoint.timeout_s}s"
            )
        except requests.ConnectionError as exc:
            last_exc = exc
            continue
        latency = time.perf_counter() - start
        if response.status_code >= 400:
            raise BackendError(response.status_code, response.text[:500])
        try:
            return response.json(), latency
        except ValueError:
            raise BackendError(response.status_code, "response body is not JSON")
    raise BackendUnreachable(f"{endpoint.backend_id} at {url}: {last_exc}")


def _params(endpoint: BackendEndpoint, params: dict | None) -> tuple[float, int]:
    params = params or {}
    temperature = float(params.get("temperature", endpoint.temperature))
    max_tokens = int(params.get("max_output_tokens", endpoint.max_output_tokens))
    return temperature, max_tokens


def invoke_local_server(
    endpoint: BackendEndpoint, system_prompt: str, messages: list, params: dict | None = None
) -> Completion:
    temperature, max_tokens = _params(endpoint, params)
    payload = {
        "model": endpoint.model or endpoint.backend_id,
        "messages": [{"role": "system", "content": system_prompt}]
        + [{"role": m.role, "content": m.content} for m in messages],
        "stream": False,
        "options": {"temperature": temperature, "num_predict": max_tokens},
    }
    url = endpoint.base_url.rstrip("/") + "/api/chat"
    body, latency = _post(endpoint, url, payload)
    try:
        text = body["message"]["content"]
    except (KeyError, TypeError):
        raise BackendError(200, f"malformed chat response: {str(body)[:200]}")
    input_tokens = body.get("prompt_eval_count")
    output_tokens = body.get("eval_count")
    if input_tokens is None:
        input_tokens = count_tokens(system_prompt) + sum(count_tokens(m.content) for m in messages)
    if output_tokens is None:
        output_tokens = count_tokens(text)
    return Completion(
        text=text,
        input_tokens=int(input_tokens),
        output_tokens=int(output_tokens),
        latency=latency,
        backend_id=endpoint.backend_id,
    )


def invoke_external_api(
    endpoint: BackendEndpoint, system_prompt: str, messages: list, params: dict | None = None
) -> Completion:
    temperature, max_tokens = _params(endpoint, params)
    payload = {
        "model": endpoint.model or endpoint.backend_id,
        "messages": [{"role": "system", "content": system_prompt}]
        + [{"role": m.role, "content": m.content} for m in messages],
        "temperature": temperature,
        "max_tokens": max_tokens,
    }
    url = endpoint.base_url.rstrip("/") + "/v1/chat/completions"
    body, latency = _post(endpoint, url, payload)
    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise BackendError(200, f"malformed completions response: {str(body)[:200]}")
    usage = body.get("usage") or {}
    input_tokens = usage.get("prompt_tokens")
    output_tokens = usage.get("completion_tokens")
    if input_tokens is None:
        input_tokens = count_tokens(system_prompt) + sum(count_tokens(m.content) for m in messages)
    if output_tokens is None:
        output_tokens = count_tokens(text)
    return Completion(
        text=text,
        input_tokens=int(input_tokens),
        output_tokens=int(output_tokens),
        latency=latency,
        backend_id=endpoint.backend_id,
    )
