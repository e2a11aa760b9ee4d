"""Tool definitions, schema validation, and the invocation registry.

A tool's parameter schema is a small dialect: each parameter has a type
(string, number, boolean, array, object), a required flag, and a
description. Validation is a hard gate: no tool ever executes with
arguments its schema rejects.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import (
    ArgumentValidation,
    DuplicateTool,
    MalformedSchema,
    UnknownTool,
)

PARAMETER_TYPES = ("string", "number", "boolean", "array", "object")

PROVENANCE_BUILTIN = "builtin"
PROVENANCE_USER = "user"
PROVENANCE_AUTO = "auto-created"
PROVENANCES = (PROVENANCE_BUILTIN, PROVENANCE_USER, PROVENANCE_AUTO)

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")

_TYPE_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}

# neutral values used to smoke-test generated tools
TYPE_DEFAULTS = {
    "string": "",
    "number": 0,
    "boolean": False,
    "array": [],
    "object": {},
}


@dataclass(frozen=True)
class ToolParameter:
    name: str
    type: str
    required: bool = False
    description: str = ""


@dataclass(frozen=True)
class ToolCapabilities:
    """Declared needs; the sandbox strips everything not listed here."""

    network: bool = False
    env: tuple = ()


@dataclass(frozen=True)
class ToolResult:
    status: str  # "success" | "error"
    payload: object
    duration: float


@dataclass(frozen=True)
class ToolDefinition:
    name: str
    description: str
    parameters: tuple
    implementation_ref: str
    provenance: str = PROVENANCE_USER
    capabilities: ToolCapabilities = field(default_factory=ToolCapabilities)
    transcript: tuple = ()  # generation rounds, for auto-created tools

    def parameter(self, name: str) -> ToolParameter | None:
        for param in self.parameters:
            if param.name == name:
                return param
        return None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "parameters": {
                p.name: {
                    "type": p.type,
                    "required": p.required,
                    "description": p.description,
                }
                for p in self.parameters
            },
            "implementation_ref": self.implementation_ref,
            "provenance": self.provenance,
            "capabilities": {
                "network": self.capabilities.network,
                "env": list(self.capabilities.env),
            },
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ToolDefinition":
        params = []
        for name, spec in (raw.get("parameters") or {}).items():
            params.append(
                ToolParameter(
                    name=name,
                    type=spec.get("type", ""),
                    required=bool(spec.get("required", False)),
                    description=spec.get("description", ""),
                )
            )
        caps = raw.get("capabilities") or {}
        definition = cls(
            name=raw.get("name", ""),
            description=raw.get("description", ""),
            parameters=tuple(params),
            implementation_ref=raw.get("implementation_ref", ""),
            provenance=raw.get("provenance", PROVENANCE_USER),
            capabilities=ToolCapabilities(
                network=bool(caps.get("network", False)),
                env=tuple(caps.get("env", ())),
            ),
        )
        validate_definition(definition)
        return definition


def validate_definition(definition: ToolDefinition) -> None:
    """Structural check; raises MalformedSchema with a reason."""
    if not _NAME_RE.match(definition.name or ""):
        raise MalformedSchema(f"bad tool name {definition.name!r}")
    if not definition.description or not definition.description.strip():
        raise MalformedSchema(f"tool {definition.name}: description is required")
    if definition.provenance not in PROVENANCES:
        raise MalformedSchema(f"tool {definition.name}: bad provenance {definition.provenance!r}")
    if not definition.implementation_ref:
        raise MalformedSchema(f"tool {definition.name}: implementation_ref is required")
    seen = set()
    for param in definition.parameters:
        if not _NAME_RE.match(param.name or ""):
            raise MalformedSchema(f"tool {definition.name}: bad parameter name {param.name!r}")
        if param.name in seen:
            raise MalformedSchema(f"tool {definition.name}: duplicate parameter {param.name}")
        seen.add(param.name)
        if param.type not in PARAMETER_TYPES:
            raise MalformedSchema(
                f"tool {definition.name}: parameter {param.name} has unknown type "
                f"{param.type!r} (expected one of {PARAMETER_TYPES})"
            )


def validate_arguments(definition: ToolDefinition, arguments: dict) -> None:
    """Check arguments against the schema; raises ArgumentValidation."""
    if not isinstance(arguments, dict):
        raise ArgumentValidation("arguments must be a JSON object")
    known = {p.name for p in definition.parameters}
    for name in arguments:
        if name not in known:
            raise ArgumentValidation(f"{definition.name}: unexpected argument {name!r}")
    for param in definition.parameters:
        if param.name not in arguments:
            if param.required:
                raise ArgumentValidation(
                    f"{definition.name}: missing required argument {param.name!r}"
                )
            continue
        value = arguments[param.name]
        if not _TYPE_CHECKS[param.type](value):
            raise ArgumentValidation(
                f"{definition.name}: argument {param.name!r} must be a {param.type}"
            )


def smoke_arguments(definition: ToolDefinition) -> dict:
    """Neutral arguments covering every declared parameter."""
    return {p.name: TYPE_DEFAULTS[p.type] for p in definition.parameters}


class ToolRegistry:
    """Uniform lookup and invocation for builtin and generated tools.

    Builtins run in-process via a registered runner callable; everything
    else runs through the sandbox. Callers cannot tell the difference
    from the ToolResult.
    """

    def __init__(self, sandbox):
        self._sandbox = sandbox
        self._lock = threading.Lock()
        self._definitions: dict[str, ToolDefinition] = {}
        self._runners: dict[str, object] = {}

    def register_tool(self, definition: ToolDefinition, runner=None) -> ToolDefinition:
        validate_definition(definition)
        with self._lock:
            if definition.name in self._definitions:
                raise DuplicateTool(definition.name)
            self._definitions[definition.name] = definition
            if runner is not None:
                self._runners[definition.name] = runner
        return definition

    def has(self, name: str) -> bool:
        with self._lock:
            return name in self._definitions

    def get(self, name: str) -> ToolDefinition:
        with self._lock:
            definition = self._definitions.get(name)
        if definition is None:
            raise UnknownTool(name)
        return definition

    def list_tools(self) -> list:
        with self._lock:
            return sorted(self._definitions.values(), key=lambda d: d.name)

    def invoke_tool(self, name: str, arguments: dict) -> ToolResult:
        """Validate and run a tool.

        UnknownTool and ArgumentValidation raise (the tool never runs);
        SandboxTimeout raises; a tool that runs and fails comes back as a
        ToolResult with status "error" so the failure is captured, not
        swallowed.
        """
        definition = self.get(name)
        validate_arguments(definition, arguments)
        runner = self._runners.get(name)
        if runner is not None:
            start = time.perf_counter()
            try:
                payload = runner(dict(arguments))
            except Exception as exc:
                return ToolResult(
                    status="error",
                    payload=f"{type(exc).__name__}: {exc}",
                    duration=time.perf_counter() - start,
                )
            return ToolResult(
                status="success", payload=payload, duration=time.perf_counter() - start
            )
        return self._sandbox.run(definition, arguments)

    def discover(self, directory) -> list:
        """Load every *.json tool definition under `directory`.

        Relative implementation paths resolve against the directory.
        Returns the definitions loaded, in filename order.
        """
        root = Path(directory)
        loaded = []
        for def_path in sorted(root.glob("*.json")):
            raw = json.loads(def_path.read_text())
            definition = ToolDefinition.from_dict(raw)
            ref = Path(definition.implementation_ref)
            if not ref.is_absolute():
                definition = replace(
                    definition, implementation_ref=str((root / ref).resolve())
                )
            self.register_tool(definition)
            loaded.append(definition)
        return loaded
