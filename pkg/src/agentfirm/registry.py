"""Employee roster: hire, fire, and outcome bookkeeping.

A hire is atomic against the ledger: reserve VRAM, then charge the
starting bonus. If the charge fails the reservation is rolled back, so
there is never an agent that holds memory without having paid, or paid
without holding memory.
"""

from __future__ import annotations

import itertools
import threading
import time
from dataclasses import dataclass, field

from .economy import CostPolicy, PerformanceHistory
from .errors import AlreadyFired, UnknownAgent
from .ledger import ResourceLedger

LOCALITY_LOCAL = "local"
LOCALITY_EXTERNAL = "external"

STATE_ACTIVE = "active"
STATE_FIRED = "fired"


@dataclass(frozen=True)
class ModelProfile:
    """Catalog entry describing a hireable model."""

    backend_id: str
    locality: str
    vram_footprint_gib: float
    capability_tags: frozenset
    context_window: int = 8192

    def __post_init__(self):
        if not self.backend_id:
            raise ValueError("backend_id must be nonempty")
        if self.locality not in (LOCALITY_LOCAL, LOCALITY_EXTERNAL):
            raise ValueError(f"locality must be local or external, got {self.locality!r}")
        if self.locality == LOCALITY_LOCAL and self.vram_footprint_gib <= 0:
            raise ValueError("local models must declare a positive VRAM footprint")
        if self.locality == LOCALITY_EXTERNAL and self.vram_footprint_gib != 0:
            raise ValueError("external models occupy no local VRAM")
        if self.context_window <= 0:
            raise ValueError("context_window must be positive")
        object.__setattr__(self, "capability_tags", frozenset(self.capability_tags))

    @classmethod
    def from_dict(cls, raw: dict) -> "ModelProfile":
        return cls(
            backend_id=raw["backend_id"],
            locality=raw.get("locality", LOCALITY_LOCAL),
            vram_footprint_gib=float(raw.get("vram_footprint_gib", 0.0)),
            capability_tags=frozenset(raw.get("capability_tags", ())),
            context_window=int(raw.get("context_window", 8192)),
        )


@dataclass
class AgentRecord:
    agent_id: str
    profile: ModelProfile
    system_prompt: str
    hired_at: float
    history: PerformanceHistory = field(default_factory=PerformanceHistory)
    accrued_cost: int = 0  # microcredits attributed to this agent
    state: str = STATE_ACTIVE

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "backend_id": self.profile.backend_id,
            "locality": self.profile.locality,
            "vram_footprint_gib": self.profile.vram_footprint_gib,
            "capability_tags": sorted(self.profile.capability_tags),
            "state": self.state,
            "hired_at": self.hired_at,
            "successes": self.history.successes,
            "failures": self.history.failures,
            "success_rate": self.history.success_rate(),
            "accrued_cost_microcredits": self.accrued_cost,
            "last_used": self.history.last_used,
        }


class AgentRegistry:
    """Roster of hired agents, kept consistent with the ledger."""

    def __init__(self, ledger: ResourceLedger, policy: CostPolicy, clock=time.time):
        self._ledger = ledger
        self._policy = policy
        self._clock = clock
        self._lock = threading.RLock()
        self._agents: dict[str, AgentRecord] = {}
        self._seq = itertools.count(1)

    def hire(self, profile: ModelProfile, system_prompt: str) -> AgentRecord:
        """Hire an agent for `profile`, paying the starting bonus.

        Raises OverCapacity or BudgetExceeded from the ledger; in either
        case no agent is created and no partial state remains.
        """
        if not system_prompt or not system_prompt.strip():
            raise ValueError("system_prompt must be nonempty")
        with self._lock:
            agent_id = f"{profile.backend_id}-{next(self._seq):03d}"
            bonus = 0
            if profile.locality == LOCALITY_LOCAL:
                self._ledger.reserve_memory(agent_id, profile.vram_footprint_gib)
                try:
                    bonus = self._policy.hiring_cost(profile)
                    self._ledger.charge(agent_id, bonus, "hiring")
                except Exception:
                    self._ledger.release_memory(agent_id)
                    raise
            record = AgentRecord(
                agent_id=agent_id,
                profile=profile,
                system_prompt=system_prompt,
                hired_at=self._clock(),
                accrued_cost=bonus,
            )
            self._agents[agent_id] = record
            return record

    def fire(self, agent_id: str) -> AgentRecord:
        """Release the agent's VRAM and tombstone it. History is retained.

        The starting bonus is not refunded; churn is meant to hurt.
        """
        with self._lock:
            record = self._agents.get(agent_id)
            if record is None:
                raise UnknownAgent(agent_id)
            if record.state == STATE_FIRED:
                raise AlreadyFired(agent_id)
            if record.profile.locality == LOCALITY_LOCAL:
                self._ledger.release_memory(agent_id)
            record.state = STATE_FIRED
            return record

    def get(self, agent_id: str) -> AgentRecord:
        with self._lock:
            record = self._agents.get(agent_id)
            if record is None:
                raise UnknownAgent(agent_id)
            return record

    def has(self, agent_id: str) -> bool:
        with self._lock:
            return agent_id in self._agents

    def record_outcome(
        self,
        agent_id: str,
        success: bool,
        quality: float | None = None,
        latency: float = 0.0,
        now: float | None = None,
    ) -> PerformanceHistory:
        """Record one task outcome for an active agent.

        quality defaults to 1.0 on success and 0.0 on failure and must lie
        in [0, 1]; latency must be nonnegative.
        """
        if quality is None:
            quality = 1.0 if success else 0.0
        if not 0.0 <= quality <= 1.0:
            raise ValueError("quality must lie in [0, 1]")
        if latency < 0:
            raise ValueError("latency must be nonnegative")
        with self._lock:
            record = self._agents.get(agent_id)
            if record is None:
                raise UnknownAgent(agent_id)
            if record.state == STATE_FIRED:
                raise AlreadyFired(agent_id)
            history = record.history
            if success:
                history.successes += 1
            else:
                history.failures += 1
            history.quality_scores.append(quality)
            history.latencies.append(latency)
            history.last_used = self._clock() if now is None else now
            return history

    def note_cost(self, agent_id: str, amount: int) -> None:
        """Attribute a committed charge to an agent (best effort; unknown
        payers such as raw backend ids are ignored)."""
        with self._lock:
            record = self._agents.get(agent_id)
            if record is not None:
                record.accrued_cost += amount

    def roster(self, tag: str | None = None) -> list:
        """Active agents, optionally filtered by capability tag, in stable
        agent-id order."""
        with self._lock:
            active = [a for a in self._agents.values() if a.state == STATE_ACTIVE]
        if tag is not None:
            active = [a for a in active if tag in a.profile.capability_tags]
        return sorted(active, key=lambda a: a.agent_id)

    def all_agents(self) -> list:
        with self._lock:
            return sorted(self._agents.values(), key=lambda a: a.agent_id)

    def active_local_footprint_gib(self) -> float:
        """Sum of active local agents' footprints; must mirror the ledger's
        reservation total at all times."""
        with self._lock:
            return sum(
                a.profile.vram_footprint_gib
                for a in self._agents.values()
                if a.state == STATE_ACTIVE and a.profile.locality == LOCALITY_LOCAL
            )
