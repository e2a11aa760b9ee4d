"""Routing: pick who handles a subtask.

Preference order is local-first: (1) an existing roster agent whose tags
cover the need, (2) hiring a local catalog model the economy approves,
(3) an affordable external route, (4) the CEO handling it directly. Hard
subtasks skip local options unless the profile is tagged "hard". A denied
route (usually budget) is recorded as a refusal string so the trace can
show why the cheap path was not taken.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from ..economy import (
    REASON_CAPACITY,
    REASON_COST,
    REASON_REDUNDANT,
    CostPolicy,
    EconomySettings,
    evaluate_hire,
)
from ..errors import UnknownPricing
from ..ledger import LedgerReport

ROUTE_EXISTING = "existing-agent"
ROUTE_HIRE = "hire-proposal"
ROUTE_EXTERNAL = "external"
ROUTE_DIRECT = "ceo-direct"

HARD_TAG = "hard"
DIFFICULTIES = ("easy", "moderate", "hard")

ANNOTATION_PENDING_EVICTION = "pending eviction"


@dataclass(frozen=True)
class RoutingChoice:
    kind: str
    agent_id: str | None = None
    profile: object | None = None
    backend_id: str | None = None
    annotation: str = ""
    refusals: tuple = ()


def _hard_ok(tags: frozenset, hard: bool) -> bool:
    return not hard or HARD_TAG in tags


def _external_estimate(backend_id: str, policy: CostPolicy, settings: EconomySettings):
    try:
        est_in, est_out = settings.external_usage_estimate
        return policy.expense_cost(backend_id, est_in, est_out)
    except UnknownPricing:
        return None


def route_preferences(
    need: Iterable[str],
    difficulty: str,
    roster: Iterable,
    catalog: Iterable,
    ledger_view: LedgerReport,
    policy: CostPolicy,
    settings: EconomySettings = EconomySettings(),
    allow_hire: bool = True,
) -> list:
    """Ordered viable choices for the need, always ending in ceo-direct."""
    if difficulty not in DIFFICULTIES:
        raise ValueError(f"difficulty must be one of {DIFFICULTIES}, got {difficulty!r}")
    need = frozenset(need)
    hard = difficulty == "hard"
    refusals: list[str] = []
    choices: list[RoutingChoice] = []

    if not need:
        # a task with no capability requirements is the CEO's own job
        return [RoutingChoice(ROUTE_DIRECT, annotation="no capability requirements")]

    # (1) existing roster agents
    matches = [
        a
        for a in roster
        if a.state == "active"
        and a.profile.capability_tags >= need
        and (a.profile.locality == "external" or _hard_ok(a.profile.capability_tags, hard))
    ]
    matches.sort(
        key=lambda a: (
            a.profile.locality != "local",  # locals first
            -a.history.success_rate(settings.prior_quality),
            a.agent_id,
        )
    )
    for agent in matches:
        if agent.profile.locality == "local":
            salary = policy.invocation_cost(agent.profile)
            if ledger_view.spent + salary <= ledger_view.expense_limit:
                choices.append(RoutingChoice(ROUTE_EXISTING, agent_id=agent.agent_id))
                break
            refusals.append(
                f"agent {agent.agent_id}: salary {salary} ucr unaffordable"
            )
        else:
            estimate = _external_estimate(agent.profile.backend_id, policy, settings)
            if estimate is None:
                refusals.append(f"agent {agent.agent_id}: no pricing for its backend")
            elif ledger_view.spent + estimate <= ledger_view.expense_limit:
                choices.append(RoutingChoice(ROUTE_EXISTING, agent_id=agent.agent_id))
                break
            else:
                refusals.append(
                    f"agent {agent.agent_id}: external route denied, budget exhausted"
                )

    # (2) hire a local catalog model
    local_feasible = False
    if allow_hire:
        candidates = [
            p
            for p in catalog
            if p.locality == "local"
            and p.capability_tags >= need
            and _hard_ok(p.capability_tags, hard)
        ]
        candidates.sort(key=lambda p: (p.vram_footprint_gib, p.backend_id))
        hire_choice = None
        for profile in candidates:
            decision = evaluate_hire(profile, need, ledger_view, roster, policy, settings)
            if decision.hire:
                hire_choice = RoutingChoice(
                    ROUTE_HIRE, profile=profile, annotation=decision.reason
                )
                break
            if decision.reason in (REASON_REDUNDANT, REASON_COST):
                # budget and VRAM gates passed; a local option exists
                local_feasible = True
            if (
                decision.reason == REASON_CAPACITY
                and ledger_view.utilization_pct > settings.pressure_threshold_pct
                and hire_choice is None
            ):
                # only VRAM blocks the hire and pressure firing can free it
                hire_choice = RoutingChoice(
                    ROUTE_HIRE, profile=profile, annotation=ANNOTATION_PENDING_EVICTION
                )
            refusals.append(f"hire {profile.backend_id}: {decision.reason}")
        if hire_choice is not None:
            choices.append(hire_choice)
            local_feasible = True

    # (3) external route; never taken over a feasible local option for
    # non-hard work
    if hard or not local_feasible:
        externals = [
            p for p in catalog if p.locality == "external" and p.capability_tags >= need
        ]
        scored = []
        for profile in externals:
            estimate = _external_estimate(profile.backend_id, policy, settings)
            if estimate is None:
                refusals.append(f"external {profile.backend_id}: no pricing configured")
                continue
            scored.append((estimate, profile.backend_id))
        scored.sort()
        for estimate, backend_id in scored:
            if ledger_view.spent + estimate <= ledger_view.expense_limit:
                choices.append(RoutingChoice(ROUTE_EXTERNAL, backend_id=backend_id))
                break
            refusals.append(
                f"external {backend_id}: external route denied, budget exhausted "
                f"(estimated {estimate} ucr)"
            )
    elif any(p.locality == "external" and p.capability_tags >= need for p in catalog):
        refusals.append("external route skipped: local option feasible")

    choices.append(
        RoutingChoice(
            ROUTE_DIRECT,
            annotation="; ".join(refusals) if refusals else "",
            refusals=tuple(refusals),
        )
    )
    if refusals and choices[0].kind != ROUTE_DIRECT:
        # denied routes stay visible even when a later preference succeeds
        choices[0] = replace(choices[0], refusals=tuple(refusals))
    return choices


def select_resource(
    need: Iterable[str],
    difficulty: str,
    roster: Iterable,
    catalog: Iterable,
    ledger_view: LedgerReport,
    policy: CostPolicy,
    settings: EconomySettings = EconomySettings(),
    allow_hire: bool = True,
) -> RoutingChoice:
    """The single best routing choice (head of the preference ladder)."""
    return route_preferences(
        need, difficulty, roster, catalog, ledger_view, policy, settings, allow_hire
    )[0]
