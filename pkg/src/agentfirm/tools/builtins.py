"""Built-in tools that ship with the runtime.

echo is the trivial smoke-test tool. memory_manager gives the CEO a
handle on the memory store: add a fact under a key, or delete one by its
exact key.
"""

from __future__ import annotations

from .registry import (
    PROVENANCE_BUILTIN,
    ToolDefinition,
    ToolParameter,
    ToolRegistry,
)

ACTION_ADD = "add_memory"
ACTION_DELETE = "delete_memory"


def echo_definition() -> ToolDefinition:
    return ToolDefinition(
        name="echo",
        description="Return the given text unchanged. Used for smoke tests.",
        parameters=(ToolParameter("text", "string", required=True, description="text to echo"),),
        implementation_ref="builtin:echo",
        provenance=PROVENANCE_BUILTIN,
    )


def echo_runner(arguments: dict):
    return arguments["text"]


def memory_manager_definition() -> ToolDefinition:
    return ToolDefinition(
        name="memory_manager",
        description=(
            "Manage long-lived user facts. action add_memory stores the "
            "memory text under key; action delete_memory removes the entry "
            "with that exact key."
        ),
        parameters=(
            ToolParameter("action", "string", required=True, description="add_memory or delete_memory"),
            ToolParameter("key", "string", required=True, description="entry key"),
            ToolParameter("memory", "string", required=False, description="text to store (add_memory only)"),
        ),
        implementation_ref="builtin:memory_manager",
        provenance=PROVENANCE_BUILTIN,
    )


def make_memory_manager_runner(store):
    def run(arguments: dict):
        action = arguments["action"]
        key = arguments["key"]
        if action == ACTION_ADD:
            text = arguments.get("memory")
            if not text:
                raise ValueError("add_memory needs a nonempty 'memory' argument")
            entry = store.add_memory(key, text)
            return {"action": action, "key": entry.key, "stored": True}
        if action == ACTION_DELETE:
            entry = store.delete_memory(key)
            return {"action": action, "key": entry.key, "deleted": True}
        raise ValueError(f"unknown action {action!r} (use {ACTION_ADD} or {ACTION_DELETE})")

    return run


def register_builtins(registry: ToolRegistry, memory_store) -> None:
    registry.register_tool(echo_definition(), runner=echo_runner)
    registry.register_tool(
        memory_manager_definition(), runner=make_memory_manager_runner(memory_store)
    )
