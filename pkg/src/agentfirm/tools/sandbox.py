"""Subprocess sandbox for tool execution.

Protocol: the tool process receives one JSON object on stdin, writes one
JSON object to stdout, and exits 0 on success. It runs in a throwaway
working directory with a stripped environment (PATH plus whatever the
tool's capabilities declare) under a wall-clock limit.
"""

from __future__ import annotations

import json
import os
import shutil
import subprocess
import sys
import tempfile
import time

from ..errors import SandboxTimeout
from .registry import ToolDefinition, ToolResult

DEFAULT_TIMEOUT_S = 30.0

_STDERR_TAIL = 2000


class Sandbox:
    def __init__(self, timeout_s: float = DEFAULT_TIMEOUT_S):
        if timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        self.timeout_s = timeout_s

    def _environment(self, definition: ToolDefinition, workdir: str) -> dict:
        env = {
            "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
            "HOME": workdir,
            "LC_ALL": "C.UTF-8",
        }
        for name in definition.capabilities.env:
            if name in os.environ:
                env[name] = os.environ[name]
        return env

    def run(self, definition: ToolDefinition, arguments: dict) -> ToolResult:
        """Execute the tool once. Raises SandboxTimeout past the limit;
        every other failure is captured in the returned ToolResult."""
        ref = definition.implementation_ref
        if ref.endswith(".py"):
            argv = [sys.executable, ref]
        else:
            argv = [ref]
        workdir = tempfile.mkdtemp(prefix="tool-")
        start = time.perf_counter()
        try:
            proc = subprocess.run(
                argv,
                input=json.dumps(arguments),
                capture_output=True,
                text=True,
                timeout=self.timeout_s,
                cwd=workdir,
                env=self._environment(definition, workdir),
            )
        except subprocess.TimeoutExpired:
            duration = time.perf_counter() - start
            raise SandboxTimeout(
                f"tool {definition.name} exceeded {self.timeout_s}s", duration=duration
            )
        except OSError as exc:
            return ToolResult(
                status="error",
                payload=f"could not launch tool {definition.name}: {exc}",
                duration=time.perf_counter() - start,
            )
        finally:
            shutil.rmtree(workdir, ignore_errors=True)
        duration = time.perf_counter() - start
        if proc.returncode != 0:
            detail = (proc.stderr or proc.stdout or "").strip()[-_STDERR_TAIL:]
            return ToolResult(
                status="error",
                payload=f"exit code {proc.returncode}: {detail}",
                duration=duration,
            )
        try:
            payload = json.loads(proc.stdout)
        except json.JSONDecodeError:
            return ToolResult(
                status="error",
                payload=f"tool wrote non-JSON output: {proc.stdout[:200]!r}",
                duration=duration,
            )
        if not isinstance(payload, dict):
            return ToolResult(
                status="error",
                payload="tool must write a single JSON object",
                duration=duration,
            )
        return ToolResult(status="success", payload=payload, duration=duration)
