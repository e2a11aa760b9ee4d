"""Assemble a full runtime from a RuntimeConfig."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

from .backends.base import BackendEndpoint, BackendHub
from .ceo import DEFAULT_CEO_SYSTEM_PROMPT, Orchestrator
from .config import RuntimeConfig
from .economy import CostPolicy, EconomySettings
from .errors import InvalidEndpoint
from .ledger import Budget, ResourceLedger
from .memory import MemoryStore, build_provider
from .registry import AgentRegistry, ModelProfile
from .tools.builtins import register_builtins
from .tools.registry import ToolRegistry
from .tools.sandbox import Sandbox

log = logging.getLogger(__name__)


@dataclass
class Runtime:
    config: RuntimeConfig
    ledger: ResourceLedger
    policy: CostPolicy
    settings: EconomySettings
    registry: AgentRegistry
    hub: BackendHub
    memory: MemoryStore
    tools: ToolRegistry
    sandbox: Sandbox
    catalog: list
    orchestrator: Orchestrator
    warnings: list


def build_runtime(config: RuntimeConfig, clock=None) -> Runtime:
    """Construct every module and wire the orchestrator over them.

    Each call builds a fresh, isolated runtime; nothing is shared between
    two runtimes built from the same config.
    """
    clock = clock or time.time
    ledger = ResourceLedger(
        Budget.from_credits(
            config.budget.expense_limit_credits, config.budget.vram_capacity_gib
        ),
        log_path=config.ledger_log,
    )
    policy = CostPolicy.from_dict(config.cost_policy)
    settings = EconomySettings.from_dict(config.economy)
    registry = AgentRegistry(ledger, policy, clock=clock)

    hub = BackendHub()
    warnings: list[str] = []
    for raw in config.backends:
        endpoint = BackendEndpoint.from_dict(dict(raw))
        for warning in hub.register_backend(endpoint, cost_policy=policy):
            warnings.append(warning)
            log.warning("%s", warning)

    provider = build_provider(config.memory.provider, **config.memory.options)
    memory = MemoryStore(provider, path=config.memory.path, clock=clock)

    sandbox = Sandbox(timeout_s=config.tools.sandbox_timeout_s)
    tools = ToolRegistry(sandbox)
    register_builtins(tools, memory)
    if config.tools.directory:
        tools.discover(config.tools.directory)

    catalog = [ModelProfile.from_dict(dict(raw)) for raw in config.catalog]

    ceo_backend = config.ceo.backend_id
    if not ceo_backend:
        raise InvalidEndpoint("config.ceo.backend_id is required")
    hub.get(ceo_backend)  # fail fast if the CEO backend is missing

    orchestrator = Orchestrator(
        ledger=ledger,
        policy=policy,
        settings=settings,
        registry=registry,
        hub=hub,
        memory=memory,
        tools=tools,
        catalog=catalog,
        ceo_backend_id=ceo_backend,
        memory_threshold=config.memory.similarity_threshold,
        memory_limit=config.memory.retrieval_limit,
        ceo_system_prompt=config.ceo.system_prompt or DEFAULT_CEO_SYSTEM_PROMPT,
        clock=clock,
    )
    return Runtime(
        config=config,
        ledger=ledger,
        policy=policy,
        settings=settings,
        registry=registry,
        hub=hub,
        memory=memory,
        tools=tools,
        sandbox=sandbox,
        catalog=catalog,
        orchestrator=orchestrator,
        warnings=warnings,
    )
