"""Tools: schema-validated definitions, sandboxed execution, autonomous creation."""

from .builtins import register_builtins
from .factory import GenerationRound, create_tool
from .registry import (
    PROVENANCE_AUTO,
    PROVENANCE_BUILTIN,
    PROVENANCE_USER,
    ToolCapabilities,
    ToolDefinition,
    ToolParameter,
    ToolRegistry,
    ToolResult,
    validate_arguments,
    validate_definition,
)
from .sandbox import Sandbox

__all__ = [
    "GenerationRound",
    "Sandbox",
    "ToolCapabilities",
    "ToolDefinition",
    "ToolParameter",
    "ToolRegistry",
    "ToolResult",
    "PROVENANCE_AUTO",
    "PROVENANCE_BUILTIN",
    "PROVENANCE_USER",
    "create_tool",
    "register_builtins",
    "validate_arguments",
    "validate_definition",
]
