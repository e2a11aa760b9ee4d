"""agentfirm: resource-aware hierarchical agent orchestration.

A CEO orchestrator decomposes queries and staffs them from a catalog of
local and external models under an explicit economy: hard budgets, VRAM
reservations, hiring bonuses, per-call salaries, and metered external
expenses. Semantic memory with failure critiques and autonomous tool
creation round out the runtime.
"""

from .ceo import CEOResponse, Orchestrator, Session, SubTask, Trace, TraceEvent, Turn
from .config import RuntimeConfig
from .economy import (
    CostPolicy,
    EconomySettings,
    FireDecision,
    HireDecision,
    PerformanceHistory,
    evaluate_fire,
    evaluate_hire,
    keep_score,
)
from .ledger import Budget, ExpenseEntry, LedgerReport, ResourceLedger, to_credits, to_microcredits
from .memory import MemoryStore, cosine_similarity
from .registry import AgentRecord, AgentRegistry, ModelProfile
from .runtime import Runtime, build_runtime

__version__ = "0.1.0"

__all__ = [
    "AgentRecord",
    "AgentRegistry",
    "Budget",
    "CEOResponse",
    "CostPolicy",
    "EconomySettings",
    "ExpenseEntry",
    "FireDecision",
    "HireDecision",
    "LedgerReport",
    "MemoryStore",
    "ModelProfile",
    "Orchestrator",
    "PerformanceHistory",
    "ResourceLedger",
    "Runtime",
    "RuntimeConfig",
    "Session",
    "SubTask",
    "Trace",
    "TraceEvent",
    "Turn",
    "build_runtime",
    "cosine_similarity",
    "evaluate_fire",
    "evaluate_hire",
    "keep_score",
    "to_credits",
    "to_microcredits",
    "__version__",
]
