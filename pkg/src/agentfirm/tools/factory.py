"""Autonomous tool creation.

Pipeline per round: prompt the generation backend (few-shot on the two
most similar existing tools), parse a JSON definition block and a Python
code block out of the reply, statically validate, then smoke-test the
code in the sandbox with neutral arguments. Any failure becomes the error
text fed into the next round's prompt; success registers the tool with
provenance "auto-created" and the full round transcript attached.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path

from ..backends.base import BackendHub, ChatMessage
from ..errors import (
    AgentFirmError,
    CodegenBackendError,
    GenerationExhausted,
    MalformedSchema,
    SandboxTimeout,
)
from .registry import (
    PROVENANCE_AUTO,
    ToolDefinition,
    ToolParameter,
    ToolRegistry,
    smoke_arguments,
    validate_definition,
)
from .sandbox import Sandbox

DEFAULT_MAX_ROUNDS = 3

CODEGEN_SYSTEM_PROMPT = (
    "You write small, self-contained command-line tools. Reply with exactly "
    "the two fenced blocks requested, nothing else."
)

PROMPT_TEMPLATE = """Write a tool that does the following:
{spec}

Existing tools for reference:
{examples}

Reply with exactly two fenced blocks.
First a ```json block:
{{"name": "tool_name", "description": "...", "parameters": {{"arg": {{"type": "string", "required": true, "description": "..."}}}}}}
Then a ```python block containing a complete script that reads one JSON
object from stdin, does the work, prints one JSON object to stdout, and
exits 0 on success.
"""

RETRY_TEMPLATE = """{base}
The previous attempt failed validation:
{error}

Previous code:
{code}

Fix the problem and reply in the same two-block format.
"""


@dataclass(frozen=True)
class GenerationRound:
    index: int
    prompt: str
    output: str
    error: str | None


def _tokenize(text: str) -> set:
    return set(re.findall(r"[a-z0-9_]+", text.lower()))


def nearest_tools(spec_text: str, definitions, k: int = 2) -> list:
    """The k registered tools most lexically similar to the request."""
    spec_tokens = _tokenize(spec_text)
    scored = []
    for definition in definitions:
        tool_tokens = _tokenize(f"{definition.name} {definition.description}")
        overlap = len(spec_tokens & tool_tokens)
        scored.append((-overlap, definition.name, definition))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [definition for _, _, definition in scored[:k]]


def _serialize_example(definition: ToolDefinition) -> str:
    lines = [json.dumps(definition.to_dict(), indent=2)]
    ref = definition.implementation_ref
    if ref.endswith(".py") and Path(ref).exists():
        lines.append("```python\n" + Path(ref).read_text() + "\n```")
    return "\n".join(lines)


def extract_block(text: str, language: str) -> str | None:
    match = re.search(rf"```{language}\s*\n(.*?)```", text, re.DOTALL)
    if match is None:
        return None
    return match.group(1).strip()


def _parse_definition(block: str, tools_dir: Path) -> ToolDefinition:
    try:
        raw = json.loads(block)
    except json.JSONDecodeError as exc:
        raise MalformedSchema(f"definition block is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise MalformedSchema("definition block must be a JSON object")
    params = []
    parameters = raw.get("parameters") or {}
    if not isinstance(parameters, dict):
        raise MalformedSchema("parameters must be an object")
    for name, spec in parameters.items():
        if not isinstance(spec, dict):
            raise MalformedSchema(f"parameter {name!r} must be an object")
        params.append(
            ToolParameter(
                name=name,
                type=spec.get("type", ""),
                required=bool(spec.get("required", False)),
                description=spec.get("description", ""),
            )
        )
    name = raw.get("name", "")
    definition = ToolDefinition(
        name=name,
        description=raw.get("description", ""),
        parameters=tuple(params),
        implementation_ref=str(tools_dir / f"{name}.py"),
        provenance=PROVENANCE_AUTO,
    )
    validate_definition(definition)
    return definition


def _static_code_checks(code: str) -> str | None:
    if "def main(" not in code and "__main__" not in code:
        return "generated code has no main entrypoint"
    if "json" not in code:
        return "generated code never touches JSON; it cannot speak the stdin/stdout protocol"
    return None


def create_tool(
    spec_text: str,
    registry: ToolRegistry,
    hub: BackendHub,
    codegen_backend_id: str,
    sandbox: Sandbox,
    tools_dir,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> ToolDefinition:
    """Generate, validate, and register a new tool from a natural-language
    request. Raises GenerationExhausted (with the round transcript) when
    every round fails, and CodegenBackendError if the backend itself does.
    """
    if not spec_text or not spec_text.strip():
        raise ValueError("spec_text must be nonempty")
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    hub.get(codegen_backend_id)  # raises UnknownBackend early

    tools_dir = Path(tools_dir)
    tools_dir.mkdir(parents=True, exist_ok=True)

    examples = nearest_tools(spec_text, registry.list_tools())
    examples_text = (
        "\n\n".join(_serialize_example(d) for d in examples) if examples else "(none yet)"
    )
    base_prompt = PROMPT_TEMPLATE.format(spec=spec_text.strip(), examples=examples_text)

    rounds: list[GenerationRound] = []
    prompt = base_prompt
    previous_code = ""
    for index in range(1, max_rounds + 1):
        try:
            completion = hub.invoke(
                codegen_backend_id,
                CODEGEN_SYSTEM_PROMPT,
                [ChatMessage("user", prompt)],
            )
        except AgentFirmError as exc:
            raise CodegenBackendError(f"generation backend failed: {exc}")
        output = completion.text
        error, definition, code = _validate_round(output, registry, sandbox, tools_dir)
        rounds.append(GenerationRound(index=index, prompt=prompt, output=output, error=error))
        if error is None:
            final = replace(definition, transcript=tuple(rounds))
            registry.register_tool(final)
            return final
        previous_code = code or previous_code or output
        prompt = RETRY_TEMPLATE.format(base=base_prompt, error=error, code=previous_code)
    raise GenerationExhausted(rounds)


def _validate_round(output, registry, sandbox, tools_dir):
    """One round's static validation plus sandbox smoke test.

    Returns (error, definition, code); error is None only when the tool
    file is written and the smoke test passed.
    """
    definition_block = extract_block(output, "json")
    code = extract_block(output, "python")
    if definition_block is None:
        return "output is missing the ```json definition block", None, code
    if code is None:
        return "output is missing the ```python code block", None, code
    try:
        definition = _parse_definition(definition_block, tools_dir)
    except MalformedSchema as exc:
        return str(exc), None, code
    if registry.has(definition.name):
        return f"tool name {definition.name!r} is already registered", None, code
    static_error = _static_code_checks(code)
    if static_error is not None:
        return static_error, None, code
    Path(definition.implementation_ref).write_text(code + "\n")
    try:
        result = sandbox.run(definition, smoke_arguments(definition))
    except SandboxTimeout as exc:
        return f"smoke test timed out: {exc}", None, code
    if result.status != "success":
        return f"smoke test failed: {result.payload}", None, code
    return None, definition, code
