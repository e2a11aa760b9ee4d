"""Runtime configuration: one JSON file drives serve, chat, and bench.

Shape (all sections optional, defaults shown where they matter):

    {
      "budget": {"expense_limit_credits": 100.0, "vram_capacity_gib": 16.0},
      "cost_policy": {"bonus_rate": 1.0, "salary_rate": 0.05,
                      "external_pricing": {"api-x": {"input_per_token": 1e-05,
                                                      "output_per_token": 3e-05}}},
      "economy": {"fail_threshold": 0.5, "min_trials": 3, "idle_timeout_s": 600,
                  "pressure_threshold_pct": 90},
      "backends": [{"backend_id": "...", "kind": "mock|local-server|external-api", ...}],
      "catalog": [{"backend_id": "...", "locality": "local", "vram_footprint_gib": 4,
                   "capability_tags": ["..."]}],
      "ceo": {"backend_id": "...", "system_prompt": null},
      "memory": {"provider": "hashing", "similarity_threshold": 0.7,
                 "retrieval_limit": 5, "path": null},
      "tools": {"directory": null, "generated_dir": null,
                "sandbox_timeout_s": 30.0, "max_rounds": 3},
      "ledger_log": null
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class BudgetConfig:
    expense_limit_credits: float = 100.0
    vram_capacity_gib: float = 16.0


@dataclass(frozen=True)
class MemoryConfig:
    provider: str = "hashing"
    similarity_threshold: float = 0.7
    retrieval_limit: int = 5
    path: str | None = None
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ToolsConfig:
    directory: str | None = None
    generated_dir: str | None = None
    sandbox_timeout_s: float = 30.0
    max_rounds: int = 3


@dataclass(frozen=True)
class CeoConfig:
    backend_id: str = ""
    system_prompt: str | None = None


@dataclass(frozen=True)
class RuntimeConfig:
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    cost_policy: dict = field(default_factory=dict)
    economy: dict = field(default_factory=dict)
    backends: tuple = ()
    catalog: tuple = ()
    ceo: CeoConfig = field(default_factory=CeoConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    tools: ToolsConfig = field(default_factory=ToolsConfig)
    ledger_log: str | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RuntimeConfig":
        return cls(
            budget=BudgetConfig(**(raw.get("budget") or {})),
            cost_policy=dict(raw.get("cost_policy") or {}),
            economy=dict(raw.get("economy") or {}),
            backends=tuple(raw.get("backends") or ()),
            catalog=tuple(raw.get("catalog") or ()),
            ceo=CeoConfig(**(raw.get("ceo") or {})),
            memory=MemoryConfig(**(raw.get("memory") or {})),
            tools=ToolsConfig(**(raw.get("tools") or {})),
            ledger_log=raw.get("ledger_log"),
        )

    @classmethod
    def from_file(cls, path) -> "RuntimeConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Stable content hash, recorded in benchmark reports so a report
        names exactly the configuration that produced it."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
