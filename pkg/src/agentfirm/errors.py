"""Exception types shared across the runtime.

Everything raised on purpose derives from AgentFirmError so callers can
distinguish domain refusals from plain bugs.
"""

from __future__ import annotations


class AgentFirmError(Exception):
    """Base class for all deliberate runtime errors."""


# --- ledger ---------------------------------------------------------------

class BudgetExceeded(AgentFirmError):
    """A charge would push total spend past the expense limit."""


class OverCapacity(AgentFirmError):
    """A VRAM reservation would exceed configured capacity."""


class DuplicateReservation(AgentFirmError):
    """The agent already holds a reservation."""


class UnknownReservation(AgentFirmError):
    """No reservation exists for the agent."""


# --- economy --------------------------------------------------------------

class NotLocal(AgentFirmError):
    """Hiring/invocation costs only apply to local models."""


class UnknownPricing(AgentFirmError):
    """No per-token pricing is configured for the backend."""


# --- registry -------------------------------------------------------------

class UnknownAgent(AgentFirmError):
    """Agent id is not in the roster."""


class AlreadyFired(AgentFirmError):
    """The agent was fired earlier; the operation needs an active agent."""


# --- backends -------------------------------------------------------------

class DuplicateBackend(AgentFirmError):
    """A backend with this id is already registered."""


class UnknownBackend(AgentFirmError):
    """Backend id is not registered."""


class InvalidEndpoint(AgentFirmError):
    """Endpoint configuration is unusable (missing url, bad script, ...)."""


class BackendUnreachable(AgentFirmError):
    """Could not reach the backend after retrying."""


class BackendTimeout(AgentFirmError):
    """The backend did not answer within the configured deadline."""


class BackendError(AgentFirmError):
    """The backend answered with a protocol-level failure."""

    def __init__(self, status: int, detail: str):
        super().__init__(f"backend error (status {status}): {detail}")
        self.status = status
        self.detail = detail


# --- memory ---------------------------------------------------------------

class DuplicateKey(AgentFirmError):
    """A memory entry with this key already exists."""


class UnknownKey(AgentFirmError):
    """No memory entry has this key."""


class DimensionMismatch(AgentFirmError):
    """Vectors of different dimensionality cannot be compared."""


class ZeroVector(AgentFirmError):
    """Cosine similarity is undefined for a zero-magnitude vector."""


class ProviderUnavailable(AgentFirmError):
    """The embedding provider cannot be constructed or used."""


# --- tools ----------------------------------------------------------------

class UnknownTool(AgentFirmError):
    """Tool name is not registered."""


class DuplicateTool(AgentFirmError):
    """A tool with this name is already registered."""


class MalformedSchema(AgentFirmError):
    """Tool definition violates the parameter schema rules."""


class ArgumentValidation(AgentFirmError):
    """Arguments do not satisfy the tool's schema; the tool never ran."""


class SandboxTimeout(AgentFirmError):
    """Tool execution exceeded the sandbox wall-clock limit."""

    def __init__(self, message: str, duration: float = 0.0):
        super().__init__(message)
        self.duration = duration


class CodegenBackendError(AgentFirmError):
    """The generation backend failed while creating a tool."""


class GenerationExhausted(AgentFirmError):
    """Tool generation failed validation for every allowed round."""

    def __init__(self, rounds):
        last = rounds[-1].error if rounds else "no rounds ran"
        super().__init__(
            f"tool generation failed after {len(rounds)} round(s): {last}"
        )
        self.rounds = tuple(rounds)


# --- orchestration --------------------------------------------------------

class SessionClosed(AgentFirmError):
    """The session no longer accepts queries."""


class DecompositionParseError(AgentFirmError):
    """CEO decomposition output could not be parsed as subtasks."""


class ChargeRefused(AgentFirmError):
    """The ledger refused a charge; the associated result was not accepted."""


class AgentFailure(AgentFirmError):
    """An employee agent failed to produce a usable result."""


# --- harness --------------------------------------------------------------

class MalformedItem(AgentFirmError):
    """A benchmark dataset line is invalid."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"dataset line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason
