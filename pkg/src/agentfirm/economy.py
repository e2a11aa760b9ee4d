"""Cost rules and the hire/fire decision calculus.

Hiring a local model costs a one-off starting bonus and each invocation
costs a salary, both proportional to the model's VRAM footprint. External
calls cost per token. The asymmetry is deliberate: the bonus is a
transaction cost that makes rapid hire/fire cycling strictly worse than
keeping a useful agent around.

Everything here is a pure function of explicit snapshots (no I/O, no
clocks of its own) so decisions replay byte-for-byte in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import TYPE_CHECKING, Iterable

from .errors import NotLocal, UnknownPricing
from .ledger import LedgerReport, gib_to_mib, to_microcredits

if TYPE_CHECKING:  # pragma: no cover - annotations only
    from .registry import AgentRecord, ModelProfile

# hire refusal / acceptance reasons
REASON_BUDGET = "BudgetExceeded"
REASON_CAPACITY = "OverCapacity"
REASON_REDUNDANT = "Redundant"
REASON_COST = "CostOverBenefit"
REASON_CAPABILITY_GAP = "CapabilityGap"
REASON_NET_BENEFIT = "NetBenefit"

# fire triggers
REASON_UNDERPERFORMING = "Underperforming"
REASON_IDLE = "Idle"
REASON_PRESSURE = "ResourcePressure"
REASON_NONE = "NoTrigger"


def _rate(value) -> Decimal:
    rate = value if isinstance(value, Decimal) else Decimal(str(value))
    if rate < 0:
        raise ValueError("rates must be nonnegative")
    return rate


@dataclass(frozen=True)
class TokenPricing:
    """Credits per input/output token for one external backend."""

    input_per_token: Decimal
    output_per_token: Decimal

    @classmethod
    def of(cls, input_per_token, output_per_token) -> "TokenPricing":
        return cls(_rate(input_per_token), _rate(output_per_token))


@dataclass(frozen=True)
class CostPolicy:
    """Operator-set rates. bonus_rate and salary_rate are credits per GiB."""

    bonus_rate: Decimal
    salary_rate: Decimal
    external_pricing: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> "CostPolicy":
        pricing = {}
        for backend_id, spec in (raw.get("external_pricing") or {}).items():
            pricing[backend_id] = TokenPricing.of(
                spec["input_per_token"], spec["output_per_token"]
            )
        return cls(
            bonus_rate=_rate(raw.get("bonus_rate", 0)),
            salary_rate=_rate(raw.get("salary_rate", 0)),
            external_pricing=pricing,
        )

    def hiring_cost(self, profile: "ModelProfile") -> int:
        """Starting bonus in microcredits. Local models only."""
        if profile.locality != "local":
            raise NotLocal(f"{profile.backend_id} is not a local model")
        return to_microcredits(self.bonus_rate * Decimal(str(profile.vram_footprint_gib)))

    def invocation_cost(self, profile: "ModelProfile") -> int:
        """Per-call salary in microcredits. Local models only."""
        if profile.locality != "local":
            raise NotLocal(f"{profile.backend_id} is not a local model")
        return to_microcredits(self.salary_rate * Decimal(str(profile.vram_footprint_gib)))

    def expense_cost(self, backend_id: str, input_tokens: int, output_tokens: int) -> int:
        """Token-metered cost of one external call, in microcredits."""
        if input_tokens < 0 or output_tokens < 0:
            raise ValueError("token counts must be nonnegative")
        pricing = self.external_pricing.get(backend_id)
        if pricing is None:
            raise UnknownPricing(f"no pricing configured for backend {backend_id!r}")
        total = (
            pricing.input_per_token * input_tokens
            + pricing.output_per_token * output_tokens
        )
        return to_microcredits(total)


@dataclass
class PerformanceHistory:
    """Outcome record for one agent, updated by the registry."""

    successes: int = 0
    failures: int = 0
    quality_scores: list = field(default_factory=list)
    latencies: list = field(default_factory=list)
    last_used: float | None = None

    @property
    def trials(self) -> int:
        return self.successes + self.failures

    def success_rate(self, prior: float = 0.5) -> float:
        """Observed success rate, or the prior when nothing was observed."""
        if self.trials == 0:
            return prior
        return self.successes / self.trials

    def failure_rate(self) -> float | None:
        if self.trials == 0:
            return None
        return self.failures / self.trials


@dataclass(frozen=True)
class EconomySettings:
    fail_threshold: float = 0.5
    min_trials: int = 3
    idle_timeout_s: float = 600.0
    pressure_threshold_pct: float = 90.0
    expected_invocations: int = 1
    prior_quality: float = 0.5
    # nominal (input, output) token usage used only to pre-screen external
    # affordability during routing; the post-call charge is the real gate
    external_usage_estimate: tuple = (256, 256)

    @classmethod
    def from_dict(cls, raw: dict) -> "EconomySettings":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in raw.items() if k in known}
        if "external_usage_estimate" in kwargs:
            kwargs["external_usage_estimate"] = tuple(kwargs["external_usage_estimate"])
        return cls(**kwargs)


@dataclass(frozen=True)
class HireDecision:
    hire: bool
    score: float
    reason: str


@dataclass(frozen=True)
class FireDecision:
    fire: bool
    reason: str


def _active(roster: Iterable["AgentRecord"]) -> list:
    return [a for a in roster if a.state == "active"]


def _idle_seconds(agent: "AgentRecord", now: float) -> float:
    anchor = agent.history.last_used
    if anchor is None:
        anchor = agent.hired_at
    return max(0.0, now - anchor)


def keep_score(agent: "AgentRecord", now: float, settings: EconomySettings = EconomySettings()) -> float:
    """Retention score: observed success rate decayed by idleness.

    Halves every idle_timeout_s of inactivity, so under resource pressure
    the stalest low-performing agent goes first.
    """
    decay = 0.5 ** (_idle_seconds(agent, now) / settings.idle_timeout_s)
    return agent.history.success_rate(settings.prior_quality) * decay


def evaluate_hire(
    candidate: "ModelProfile",
    need: Iterable[str],
    ledger_view: LedgerReport,
    roster: Iterable["AgentRecord"],
    policy: CostPolicy,
    settings: EconomySettings = EconomySettings(),
) -> HireDecision:
    """Decide whether hiring `candidate` to serve `need` is worth it.

    Hard gates first: the bonus plus one salary must fit the remaining
    budget, and the footprint must fit free VRAM. Then a benefit score
    (capability coverage plus prior quality) is weighed against upfront
    cost relative to remaining budget. Deterministic in its inputs.
    """
    if not candidate.capability_tags:
        raise ValueError("candidate must advertise at least one capability tag")
    need = frozenset(need)
    active = _active(roster)

    if candidate.locality == "local":
        bonus = policy.hiring_cost(candidate)
        salary = policy.invocation_cost(candidate)
        if ledger_view.spent + bonus + salary > ledger_view.expense_limit:
            return HireDecision(False, 0.0, REASON_BUDGET)
        free_mib = gib_to_mib(ledger_view.vram_capacity_gib) - gib_to_mib(
            ledger_view.vram_reserved_gib
        )
        if gib_to_mib(candidate.vram_footprint_gib) > free_mib:
            return HireDecision(False, 0.0, REASON_CAPACITY)
    else:
        # externals are pay-per-use: no bonus, no salary, no VRAM
        bonus = salary = 0
        if ledger_view.spent > ledger_view.expense_limit:
            return HireDecision(False, 0.0, REASON_BUDGET)

    served: set = set()
    for agent in active:
        served |= agent.profile.capability_tags
    covered = need & candidate.capability_tags
    prior = settings.prior_quality

    if covered and covered - served:
        benefit = 1.0 + prior
        reason_if_yes = REASON_CAPABILITY_GAP
    elif covered:
        incumbents = [a for a in active if a.profile.capability_tags & covered]
        best_incumbent = max(a.history.success_rate(prior) for a in incumbents)
        if best_incumbent >= prior:
            return HireDecision(False, 0.0, REASON_REDUNDANT)
        benefit = prior
        reason_if_yes = REASON_NET_BENEFIT
    else:
        benefit = prior
        reason_if_yes = REASON_NET_BENEFIT

    remaining = max(ledger_view.expense_limit - ledger_view.spent, 1)
    upfront = bonus + settings.expected_invocations * salary
    cost_score = upfront / remaining
    if benefit > cost_score:
        return HireDecision(True, benefit - cost_score, reason_if_yes)
    return HireDecision(False, benefit - cost_score, REASON_COST)


def evaluate_fire(
    agent: "AgentRecord",
    ledger_view: LedgerReport,
    now: float,
    roster: Iterable["AgentRecord"] = (),
    settings: EconomySettings = EconomySettings(),
) -> FireDecision:
    """Decide whether an active agent should be let go.

    Triggers, checked in order: sustained failure rate over the threshold
    (given enough trials), idleness past the timeout, and VRAM pressure
    where this agent holds the lowest keep score on the roster. The roster
    argument only matters for the pressure trigger; when omitted the agent
    is compared against itself.
    """
    if agent.state != "active":
        raise ValueError(f"agent {agent.agent_id} is not active")

    history = agent.history
    rate = history.failure_rate()
    if history.trials >= settings.min_trials and rate is not None and rate > settings.fail_threshold:
        return FireDecision(True, REASON_UNDERPERFORMING)

    if _idle_seconds(agent, now) > settings.idle_timeout_s:
        return FireDecision(True, REASON_IDLE)

    if ledger_view.utilization_pct > settings.pressure_threshold_pct:
        pool = _active(roster) or [agent]
        lowest = min(pool, key=lambda a: (keep_score(a, now, settings), a.agent_id))
        if lowest.agent_id == agent.agent_id:
            return FireDecision(True, REASON_PRESSURE)

    return FireDecision(False, REASON_NONE)
