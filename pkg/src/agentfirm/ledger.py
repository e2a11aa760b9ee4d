"""Budget and VRAM accounting: the gate every hire and model call must pass.

Two pools are tracked. The expense pool is monetary and only ever grows;
charges are admitted atomically against a hard limit and appended to a log
that replays to the same totals. The VRAM pool is a set of named
reservations against a fixed capacity, reported as a utilization
percentage of that capacity.

Money is kept as integer microcredits (1 credit = 1_000_000 ucr) and VRAM
as integer mebibytes (1 GiB = 1024 MiB) so arithmetic is exact and a
restart that replays the log lands on identical numbers. Credits and GiB
floats only appear at the API surface.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .errors import (
    BudgetExceeded,
    DuplicateReservation,
    OverCapacity,
    UnknownReservation,
)

MICROCREDITS_PER_CREDIT = 1_000_000
MIB_PER_GIB = 1024

CATEGORY_HIRING = "hiring"
CATEGORY_INVOCATION = "invocation"
CATEGORY_EXPENSE = "expense"
CATEGORIES = (CATEGORY_HIRING, CATEGORY_INVOCATION, CATEGORY_EXPENSE)


def to_microcredits(credits) -> int:
    """Convert a credit amount (float, int, str or Decimal) to integer
    microcredits, rounding half up.

    Floats go through str() first so 0.1 means one tenth of a credit, not
    the binary float nearest it.
    """
    as_decimal = credits if isinstance(credits, Decimal) else Decimal(str(credits))
    scaled = as_decimal * MICROCREDITS_PER_CREDIT
    return int(scaled.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def to_credits(microcredits: int) -> float:
    return microcredits / MICROCREDITS_PER_CREDIT


def gib_to_mib(gib) -> int:
    """Convert GiB to integer MiB, rounding half up (footprints are coarse)."""
    as_decimal = gib if isinstance(gib, Decimal) else Decimal(str(gib))
    return int((as_decimal * MIB_PER_GIB).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def mib_to_gib(mib: int) -> float:
    return mib / MIB_PER_GIB


@dataclass(frozen=True)
class Budget:
    """Operator-set hard limits. expense_limit is in microcredits."""

    expense_limit: int
    vram_capacity_gib: float

    def __post_init__(self):
        if not isinstance(self.expense_limit, int) or self.expense_limit < 0:
            raise ValueError("expense_limit must be a nonnegative integer (microcredits)")
        if self.vram_capacity_gib <= 0:
            raise ValueError("vram_capacity_gib must be positive")

    @classmethod
    def from_credits(cls, expense_limit_credits, vram_capacity_gib: float) -> "Budget":
        return cls(to_microcredits(expense_limit_credits), float(vram_capacity_gib))


@dataclass(frozen=True)
class ExpenseEntry:
    """One committed charge. amount is in microcredits."""

    ts: float
    payer: str
    amount: int
    category: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "ts": self.ts,
                "payer": self.payer,
                "amount_microcredits": self.amount,
                "category": self.category,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "ExpenseEntry":
        raw = json.loads(line)
        return cls(
            ts=float(raw["ts"]),
            payer=str(raw["payer"]),
            amount=int(raw["amount_microcredits"]),
            category=str(raw["category"]),
        )


@dataclass(frozen=True)
class LedgerReport:
    """Point-in-time snapshot; all monetary fields in microcredits."""

    spent: int
    expense_limit: int
    remaining: int
    by_category: dict
    vram_capacity_gib: float
    vram_reserved_gib: float
    utilization_pct: float
    peak_utilization_pct: float
    reservations: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "spent_microcredits": self.spent,
            "spent_credits": to_credits(self.spent),
            "expense_limit_microcredits": self.expense_limit,
            "expense_limit_credits": to_credits(self.expense_limit),
            "remaining_microcredits": self.remaining,
            "remaining_credits": to_credits(self.remaining),
            "by_category_microcredits": dict(self.by_category),
            "vram_capacity_gib": self.vram_capacity_gib,
            "vram_reserved_gib": self.vram_reserved_gib,
            "utilization_pct": self.utilization_pct,
            "peak_utilization_pct": self.peak_utilization_pct,
            "reservations_gib": dict(self.reservations),
        }


class ResourceLedger:
    """Thread-safe check-and-commit accounting over one Budget.

    Charges either commit fully (spend updated, entry logged) or raise and
    change nothing; no interleaving of concurrent charges can overspend the
    limit. Reservations follow the same rule against VRAM capacity.
    """

    def __init__(self, budget: Budget, log_path: str | Path | None = None):
        self._budget = budget
        self._capacity_mib = gib_to_mib(budget.vram_capacity_gib)
        self._lock = threading.Lock()
        self._spent = 0
        self._by_category = {c: 0 for c in CATEGORIES}
        self._reservations_mib: dict[str, int] = {}
        self._peak_reserved_mib = 0
        self._log: list[ExpenseEntry] = []
        self._log_path = Path(log_path) if log_path is not None else None
        if self._log_path is not None and self._log_path.exists():
            self._replay(self._log_path)

    def _replay(self, path: Path) -> None:
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            entry = ExpenseEntry.from_json(line)
            self._log.append(entry)
            self._spent += entry.amount
            self._by_category[entry.category] = (
                self._by_category.get(entry.category, 0) + entry.amount
            )

    @property
    def budget(self) -> Budget:
        return self._budget

    def charge(self, payer_id: str, amount: int, category: str, ts: float | None = None) -> ExpenseEntry:
        """Atomically commit a charge, or raise BudgetExceeded leaving state
        untouched. A zero charge is legal and still logged."""
        if not payer_id:
            raise ValueError("payer_id must be nonempty")
        if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
            raise ValueError("amount must be a nonnegative integer (microcredits)")
        if category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {category!r}")
        with self._lock:
            if self._spent + amount > self._budget.expense_limit:
                raise BudgetExceeded(
                    f"charge of {amount} ucr refused: {self._spent} spent of "
                    f"{self._budget.expense_limit} ucr limit"
                )
            entry = ExpenseEntry(
                ts=time.time() if ts is None else ts,
                payer=payer_id,
                amount=amount,
                category=category,
            )
            self._spent += amount
            self._by_category[category] += amount
            self._log.append(entry)
            if self._log_path is not None:
                with open(self._log_path, "a") as fh:
                    fh.write(entry.to_json() + "\n")
            return entry

    def check_budget(self, amount: int) -> tuple[bool, int]:
        """Report whether a charge of `amount` would fit, and the remaining
        headroom in microcredits. Never mutates."""
        if not isinstance(amount, int) or isinstance(amount, bool) or amount < 0:
            raise ValueError("amount must be a nonnegative integer (microcredits)")
        with self._lock:
            remaining = self._budget.expense_limit - self._spent
            return amount <= remaining, remaining

    def reserve_memory(self, agent_id: str, footprint_gib) -> float:
        """Reserve VRAM for an agent. Returns the new utilization percentage.

        Refuses (OverCapacity) when the footprint does not fit in what is
        left; refuses (DuplicateReservation) when the agent already holds one.
        """
        if not agent_id:
            raise ValueError("agent_id must be nonempty")
        footprint_mib = gib_to_mib(footprint_gib)
        if footprint_mib <= 0:
            raise ValueError("footprint must be positive")
        with self._lock:
            if agent_id in self._reservations_mib:
                raise DuplicateReservation(f"{agent_id} already holds a reservation")
            reserved = sum(self._reservations_mib.values())
            if reserved + footprint_mib > self._capacity_mib:
                raise OverCapacity(
                    f"cannot reserve {footprint_mib} MiB for {agent_id}: "
                    f"{reserved} of {self._capacity_mib} MiB already reserved"
                )
            self._reservations_mib[agent_id] = footprint_mib
            reserved += footprint_mib
            if reserved > self._peak_reserved_mib:
                self._peak_reserved_mib = reserved
            return 100.0 * reserved / self._capacity_mib

    def release_memory(self, agent_id: str) -> float:
        """Release an agent's reservation, returning the freed GiB."""
        with self._lock:
            if agent_id not in self._reservations_mib:
                raise UnknownReservation(f"no reservation held by {agent_id}")
            freed = self._reservations_mib.pop(agent_id)
            return mib_to_gib(freed)

    def snapshot(self) -> LedgerReport:
        with self._lock:
            reserved = sum(self._reservations_mib.values())
            return LedgerReport(
                spent=self._spent,
                expense_limit=self._budget.expense_limit,
                remaining=self._budget.expense_limit - self._spent,
                by_category=dict(self._by_category),
                vram_capacity_gib=mib_to_gib(self._capacity_mib),
                vram_reserved_gib=mib_to_gib(reserved),
                utilization_pct=100.0 * reserved / self._capacity_mib,
                peak_utilization_pct=100.0 * self._peak_reserved_mib / self._capacity_mib,
                reservations={
                    agent: mib_to_gib(mib)
                    for agent, mib in sorted(self._reservations_mib.items())
                },
            )

    def expense_log(self) -> tuple[ExpenseEntry, ...]:
        with self._lock:
            return tuple(self._log)
