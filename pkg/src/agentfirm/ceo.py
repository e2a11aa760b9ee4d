"""The CEO orchestrator.

One query runs a fixed pipeline: recall relevant memories, decompose the
request into subtasks, route each subtask (existing agent, new hire,
external call, or handle it directly), execute with every charge admitted
by the ledger before a result is accepted, then synthesize a single
answer. Each step appends to an ordered action trace, so a session can be
audited event by event: every hire, fire, model call, tool call, charge,
and refusal appears exactly once.

The hierarchy is deliberately single-level. Only the CEO hires; employee
output requesting a hire (a REQUEST_HIRE line) is rejected and recorded
as a violation, never executed.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field

from .backends.base import BackendHub, ChatMessage
from .backends.routing import (
    ANNOTATION_PENDING_EVICTION,
    ROUTE_DIRECT,
    ROUTE_EXISTING,
    ROUTE_EXTERNAL,
    ROUTE_HIRE,
    RoutingChoice,
    route_preferences,
)
from .economy import CostPolicy, EconomySettings, evaluate_fire, keep_score
from .errors import (
    AgentFailure,
    AgentFirmError,
    BackendError,
    BackendTimeout,
    BackendUnreachable,
    BudgetExceeded,
    ChargeRefused,
    DecompositionParseError,
    OverCapacity,
    SessionClosed,
    UnknownPricing,
)
from .ledger import (
    CATEGORY_EXPENSE,
    CATEGORY_HIRING,
    CATEGORY_INVOCATION,
    ResourceLedger,
)
from .memory import MemoryStore
from .registry import AgentRegistry, ModelProfile
from .tools.registry import ToolRegistry

# trace event kinds
TRACE_MEMORY = "memory_retrieval"
TRACE_DECOMPOSE = "decomposition"
TRACE_ROUTE = "route"
TRACE_MODEL = "model_call"
TRACE_CHARGE = "charge"
TRACE_REFUSAL = "refusal"
TRACE_HIRE = "hire"
TRACE_FIRE = "fire"
TRACE_TOOL = "tool_call"
TRACE_VIOLATION = "violation"
TRACE_OUTCOME = "subtask_outcome"
TRACE_SYNTHESIS = "synthesis"
TRACE_GRADE = "grade"
TRACE_CRITIQUE = "failure_critique"
TRACE_ERROR = "error"

STATUS_PENDING = "pending"
STATUS_ASSIGNED = "assigned"
STATUS_DONE = "done"
STATUS_FAILED = "failed"

VIOLATION_SINGLE_LEVEL = "SingleLevelHierarchy"

TOOL_CALL_RE = re.compile(r"^TOOL_CALL:\s*(\{.*\})\s*$")
REQUEST_HIRE_RE = re.compile(r"\bREQUEST_HIRE\b")

DEFAULT_CEO_SYSTEM_PROMPT = (
    "You are the coordinating manager of a small team of specialist agents. "
    "You decompose requests, delegate to the cheapest capable worker, respect "
    "hard budget limits, and combine results into one clear answer."
)

EMPLOYEE_PROMPT_TEMPLATE = (
    "You are a specialist employee agent. Your capabilities: {tags}. "
    "Complete the assigned task precisely and reply with the result only."
)

EXTERNAL_TASK_PROMPT = (
    "You are a capable assistant handling one delegated task. Reply with the "
    "result only."
)


@dataclass
class Turn:
    role: str  # user | ceo | employee | tool
    content: str
    ts: float
    name: str | None = None

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content, "ts": self.ts, "name": self.name}


@dataclass
class Session:
    session_id: str
    turns: list = field(default_factory=list)
    active: bool = True
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "active": self.active,
            "turns": [t.to_dict() for t in self.turns],
        }


@dataclass
class SubTask:
    subtask_id: str
    description: str
    required_tags: frozenset
    difficulty: str = "easy"
    status: str = STATUS_PENDING
    result: str | None = None
    assigned_to: str | None = None
    route_hint: str | None = None

    def to_dict(self) -> dict:
        return {
            "subtask_id": self.subtask_id,
            "description": self.description,
            "required_tags": sorted(self.required_tags),
            "difficulty": self.difficulty,
            "status": self.status,
            "result": self.result,
            "assigned_to": self.assigned_to,
        }


@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: str
    ts: float
    detail: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "ts": self.ts, "detail": self.detail}


class Trace:
    """Append-only, totally ordered record of one query's actions."""

    def __init__(self, clock=time.time):
        self._clock = clock
        self.events: list[TraceEvent] = []

    def add(self, kind: str, /, **detail) -> TraceEvent:
        event = TraceEvent(
            seq=len(self.events) + 1, kind=kind, ts=self._clock(), detail=detail
        )
        self.events.append(event)
        return event

    def of_kind(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]


@dataclass(frozen=True)
class CEOResponse:
    session_id: str
    text: str
    trace: tuple

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "response": self.text,
            "trace": [e.to_dict() for e in self.trace],
        }


def _decompose_prompt(user_text: str, memories: list) -> str:
    memory_block = "\n".join(f"- {m.entry.text}" for m in memories) or "(none)"
    return (
        "Break the user request into independent subtasks.\n"
        f"Relevant memories:\n{memory_block}\n"
        f"User request:\n{user_text}\n"
        "Reply with one fenced JSON block shaped like:\n"
        '```json\n{"subtasks": [{"description": "...", "tags": ["..."], '
        '"difficulty": "easy"}]}\n```\n'
        "difficulty is one of easy, moderate, hard."
    )


def _direct_prompt(description: str, memories: list) -> str:
    memory_block = "\n".join(f"- {m.entry.text}" for m in memories)
    prefix = f"Relevant memories:\n{memory_block}\n" if memory_block else ""
    return f"{prefix}Task: {description}\nAnswer directly and completely."


def _synthesis_prompt(user_text: str, subtasks: list) -> str:
    lines = []
    for st in subtasks:
        if st.status == STATUS_DONE:
            lines.append(f"- [{st.subtask_id} done] {st.description}: {st.result}")
        else:
            lines.append(f"- [{st.subtask_id} failed] {st.description}")
    joined = "\n".join(lines)
    return (
        "Combine the following sub-task results into one final answer.\n"
        f"Original request: {user_text}\n"
        f"Sub-task results:\n{joined}\n"
        "Mention any failed sub-tasks honestly."
    )


def _critique_prompt(user_text: str, answer: str) -> str:
    return (
        "The answer below was judged incorrect. Write a short critique "
        "explaining the likely mistake and concrete guidance for retrying a "
        "similar task.\n"
        f"Question: {user_text}\n"
        f"Incorrect answer: {answer}"
    )


def _parse_decomposition(text: str) -> list:
    """Pull the subtask list out of a decomposition reply.

    Accepts a fenced ```json block or a bare JSON body. Raises
    DecompositionParseError with a reason suitable for a reprompt.
    """
    match = re.search(r"```json\s*\n(.*?)```", text, re.DOTALL)
    blob = match.group(1) if match else text.strip()
    try:
        raw = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise DecompositionParseError(f"not valid JSON: {exc}")
    if not isinstance(raw, dict) or not isinstance(raw.get("subtasks"), list):
        raise DecompositionParseError('expected an object with a "subtasks" array')
    items = raw["subtasks"]
    if not items:
        raise DecompositionParseError("subtasks array is empty")
    parsed = []
    for i, item in enumerate(items):
        if not isinstance(item, dict) or not str(item.get("description", "")).strip():
            raise DecompositionParseError(f"subtask {i} has no description")
        difficulty = item.get("difficulty", "easy")
        if difficulty not in ("easy", "moderate", "hard"):
            raise DecompositionParseError(f"subtask {i} has bad difficulty {difficulty!r}")
        tags = item.get("tags", [])
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise DecompositionParseError(f"subtask {i} has bad tags")
        parsed.append(
            {
                "description": str(item["description"]).strip(),
                "tags": frozenset(tags),
                "difficulty": difficulty,
            }
        )
    return parsed


class Orchestrator:
    """Wires the ledger, economy, registry, backends, memory, and tools
    into the query pipeline. One instance serves many sessions."""

    def __init__(
        self,
        ledger: ResourceLedger,
        policy: CostPolicy,
        settings: EconomySettings,
        registry: AgentRegistry,
        hub: BackendHub,
        memory: MemoryStore,
        tools: ToolRegistry,
        catalog: list,
        ceo_backend_id: str,
        memory_threshold: float = 0.7,
        memory_limit: int = 5,
        ceo_system_prompt: str = DEFAULT_CEO_SYSTEM_PROMPT,
        clock=time.time,
    ):
        self.ledger = ledger
        self.policy = policy
        self.settings = settings
        self.registry = registry
        self.hub = hub
        self.memory = memory
        self.tools = tools
        self.catalog = list(catalog)
        self.ceo_backend_id = ceo_backend_id
        self.memory_threshold = memory_threshold
        self.memory_limit = memory_limit
        self.ceo_system_prompt = ceo_system_prompt
        self._clock = clock
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._request_seq = 0
        self._turn_seq = 0

    # --- session management -------------------------------------------

    def open_session(self, session_id: str | None = None) -> Session:
        with self._lock:
            sid = session_id or f"s-{uuid.uuid4().hex[:12]}"
            if sid in self._sessions:
                raise ValueError(f"session {sid} already exists")
            session = Session(session_id=sid)
            self._sessions[sid] = session
            return session

    def get_session(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionClosed(f"unknown session {session_id}")
        return session

    def close_session(self, session_id: str) -> Session:
        session = self.get_session(session_id)
        session.active = False
        return session

    def sessions(self) -> list:
        with self._lock:
            return sorted(self._sessions.values(), key=lambda s: s.session_id)

    def _next_request_id(self) -> str:
        with self._lock:
            self._request_seq += 1
            return f"r{self._request_seq:05d}"

    # --- charging ------------------------------------------------------

    def _charge(self, payer: str, amount: int, category: str, request_id: str, trace: Trace) -> bool:
        """Commit a charge and trace it; on refusal trace that instead.

        Never raises for budget: the boolean keeps control flow explicit
        at call sites, which all have a degrade path.
        """
        try:
            self.ledger.charge(payer, amount, category)
        except BudgetExceeded as exc:
            trace.add(
                TRACE_REFUSAL,
                payer=payer,
                amount_microcredits=amount,
                category=category,
                request=request_id,
                reason=str(exc),
            )
            return False
        trace.add(
            TRACE_CHARGE,
            payer=payer,
            amount_microcredits=amount,
            category=category,
            request=request_id,
        )
        self.registry.note_cost(payer, amount)
        return True

    def _ceo_call(self, prompt: str, trace: Trace, purpose: str):
        """One model call by the CEO itself (decompose/synthesize/direct/
        critique), charged as expense when the CEO backend is priced."""
        request_id = self._next_request_id()
        completion = self.hub.invoke(
            self.ceo_backend_id, self.ceo_system_prompt, [ChatMessage("user", prompt)]
        )
        trace.add(
            TRACE_MODEL,
            backend=self.ceo_backend_id,
            actor="ceo",
            purpose=purpose,
            request=request_id,
            input_tokens=completion.input_tokens,
            output_tokens=completion.output_tokens,
            latency=completion.latency,
        )
        if self.ceo_backend_id in self.policy.external_pricing:
            cost = self.policy.expense_cost(
                self.ceo_backend_id, completion.input_tokens, completion.output_tokens
            )
            if not self._charge("ceo", cost, CATEGORY_EXPENSE, request_id, trace):
                raise ChargeRefused(f"ceo call {request_id} unaffordable")
        return completion

    # --- pipeline ------------------------------------------------------

    def handle_query(self, session: Session, user_text: str, grader=None) -> CEOResponse:
        """Run the full pipeline for one user turn.

        The optional grader is a callable judging the final text; a False
        verdict records a failure critique in memory for future retrieval.
        """
        if not session.active:
            raise SessionClosed(session.session_id)
        if not user_text or not user_text.strip():
            raise ValueError("user_text must be nonempty")
        with session.lock:
            trace = Trace(self._clock)
            session.turns.append(Turn("user", user_text, self._clock()))

            memories = self._retrieve_memories(user_text, trace)
            subtasks = self.decompose(user_text, memories, trace=trace)
            for subtask in subtasks:
                self.execute_subtask(subtask, memories=memories, trace=trace)
                if subtask.status == STATUS_DONE and subtask.assigned_to:
                    session.turns.append(
                        Turn(
                            "employee",
                            subtask.result,
                            self._clock(),
                            name=subtask.assigned_to,
                        )
                    )
            final_text = self.synthesize(subtasks, user_text, trace=trace)

            if grader is not None:
                correct = bool(grader(final_text))
                trace.add(TRACE_GRADE, correct=correct)
                if not correct:
                    self._record_failure_critique(user_text, final_text, trace)

            session.turns.append(Turn("ceo", final_text, self._clock()))
            return CEOResponse(
                session_id=session.session_id, text=final_text, trace=tuple(trace.events)
            )

    def _retrieve_memories(self, user_text: str, trace: Trace) -> list:
        try:
            hits = self.memory.retrieve(
                user_text, threshold=self.memory_threshold, limit=self.memory_limit
            )
        except AgentFirmError as exc:
            trace.add(TRACE_ERROR, stage="memory", error=str(exc))
            hits = []
        trace.add(
            TRACE_MEMORY,
            query=user_text,
            count=len(hits),
            keys=[h.entry.key for h in hits],
            similarities=[round(h.similarity, 6) for h in hits],
        )
        return hits

    def decompose(self, user_text: str, memories: list, trace: Trace | None = None) -> list:
        """Ask the CEO backend to split the request into subtasks.

        One reprompt on a parse failure; after that a single catch-all
        subtask routed straight to the CEO keeps the query alive.
        """
        trace = trace if trace is not None else Trace(self._clock)
        base_prompt = _decompose_prompt(user_text, memories)
        prompt = base_prompt
        last_error = None
        for _ in range(2):
            try:
                completion = self._ceo_call(prompt, trace, purpose="decompose")
            except AgentFirmError as exc:
                last_error = exc
                break
            try:
                parsed = _parse_decomposition(completion.text)
            except DecompositionParseError as exc:
                last_error = exc
                prompt = (
                    base_prompt
                    + f"\nYour previous reply could not be used ({exc}). "
                    "Reply again with exactly one fenced JSON block."
                )
                continue
            subtasks = [
                SubTask(
                    subtask_id=f"t{i + 1}",
                    description=item["description"],
                    required_tags=item["tags"],
                    difficulty=item["difficulty"],
                )
                for i, item in enumerate(parsed)
            ]
            trace.add(
                TRACE_DECOMPOSE,
                count=len(subtasks),
                subtasks=[st.to_dict() for st in subtasks],
            )
            return subtasks
        trace.add(TRACE_DECOMPOSE, fallback=True, error=str(last_error), count=1)
        return [
            SubTask(
                subtask_id="t1",
                description=user_text,
                required_tags=frozenset(),
                difficulty="easy",
                route_hint=ROUTE_DIRECT,
            )
        ]

    # --- routing and execution ----------------------------------------

    def _preferences(self, subtask: SubTask, allow_hire: bool = True) -> list:
        if subtask.route_hint == ROUTE_DIRECT:
            return [RoutingChoice(ROUTE_DIRECT, annotation="decomposition fallback")]
        return route_preferences(
            subtask.required_tags,
            subtask.difficulty,
            self.registry.roster(),
            self.catalog,
            self.ledger.snapshot(),
            self.policy,
            self.settings,
            allow_hire=allow_hire,
        )

    def execute_subtask(
        self,
        subtask: SubTask,
        routing: RoutingChoice | None = None,
        memories: list = (),
        trace: Trace | None = None,
    ) -> SubTask:
        """Execute one pending subtask, walking the routing ladder.

        A refused charge falls through to the next preference; a hard
        backend failure marks the subtask failed. Either way the subtask
        ends terminal (done or failed) and the trace says why.
        """
        trace = trace if trace is not None else Trace(self._clock)
        if subtask.status != STATUS_PENDING:
            raise ValueError(f"subtask {subtask.subtask_id} is not pending")
        queue = [routing] if routing is not None else self._preferences(subtask)
        subtask.status = STATUS_ASSIGNED
        tried: set = set()
        last_error: Exception | None = None
        while queue:
            choice = queue.pop(0)
            if choice.kind in tried:
                continue
            tried.add(choice.kind)
            trace.add(
                TRACE_ROUTE,
                subtask=subtask.subtask_id,
                kind=choice.kind,
                agent=choice.agent_id,
                backend=choice.backend_id
                or (choice.profile.backend_id if choice.profile else None),
                annotation=choice.annotation,
            )
            for refusal in choice.refusals:
                trace.add(
                    TRACE_REFUSAL,
                    stage="routing",
                    subtask=subtask.subtask_id,
                    reason=refusal,
                )
            try:
                text = self._dispatch(subtask, choice, memories, trace)
            except ChargeRefused as exc:
                last_error = exc
                queue = [
                    c
                    for c in self._preferences(subtask, allow_hire=False)
                    if c.kind not in tried
                ]
                continue
            except (AgentFailure, BackendUnreachable, BackendTimeout, BackendError) as exc:
                last_error = exc
                trace.add(
                    TRACE_ERROR,
                    stage="execute",
                    subtask=subtask.subtask_id,
                    error=str(exc),
                )
                break
            subtask.result = text
            subtask.status = STATUS_DONE
            trace.add(
                TRACE_OUTCOME,
                subtask=subtask.subtask_id,
                status=STATUS_DONE,
                route=choice.kind,
                assigned_to=subtask.assigned_to,
            )
            return subtask
        subtask.status = STATUS_FAILED
        trace.add(
            TRACE_OUTCOME,
            subtask=subtask.subtask_id,
            status=STATUS_FAILED,
            error=str(last_error) if last_error else "no viable route",
        )
        return subtask

    def _dispatch(self, subtask: SubTask, choice: RoutingChoice, memories, trace: Trace) -> str:
        if choice.kind == ROUTE_EXISTING:
            agent = self.registry.get(choice.agent_id)
            subtask.assigned_to = agent.agent_id
            return self._run_agent(agent, subtask, trace)
        if choice.kind == ROUTE_HIRE:
            agent = self._hire_with_eviction(choice, subtask, trace)
            subtask.assigned_to = agent.agent_id
            return self._run_agent(agent, subtask, trace)
        if choice.kind == ROUTE_EXTERNAL:
            return self._run_external(choice.backend_id, subtask, trace)
        return self._run_direct(subtask, memories, trace)

    def _hire_with_eviction(self, choice: RoutingChoice, subtask: SubTask, trace: Trace):
        """Hire the proposed profile, firing pressure-eligible agents to
        make room when the routing layer flagged the hire as blocked only
        by VRAM. Raises ChargeRefused when the hire cannot go through."""
        profile: ModelProfile = choice.profile
        prompt = EMPLOYEE_PROMPT_TEMPLATE.format(
            tags=", ".join(sorted(profile.capability_tags))
        )
        may_evict = choice.annotation == ANNOTATION_PENDING_EVICTION
        while True:
            try:
                record = self.registry.hire(profile, prompt)
            except OverCapacity as exc:
                if not may_evict or not self._evict_one(subtask, trace):
                    trace.add(
                        TRACE_REFUSAL,
                        stage="hire",
                        subtask=subtask.subtask_id,
                        backend=profile.backend_id,
                        reason=str(exc),
                    )
                    raise ChargeRefused(f"cannot reserve VRAM for {profile.backend_id}")
                continue
            except BudgetExceeded as exc:
                trace.add(
                    TRACE_REFUSAL,
                    stage="hire",
                    subtask=subtask.subtask_id,
                    backend=profile.backend_id,
                    reason=str(exc),
                )
                raise ChargeRefused(f"cannot pay starting bonus for {profile.backend_id}")
            bonus = record.accrued_cost
            trace.add(
                TRACE_HIRE,
                agent=record.agent_id,
                backend=profile.backend_id,
                initiator="ceo",
                subtask=subtask.subtask_id,
                footprint_gib=profile.vram_footprint_gib,
                bonus_microcredits=bonus,
            )
            if profile.locality == "local":
                # the registry committed the bonus charge (possibly zero);
                # mirror it so trace and ledger join one-to-one
                trace.add(
                    TRACE_CHARGE,
                    payer=record.agent_id,
                    amount_microcredits=bonus,
                    category=CATEGORY_HIRING,
                    request=None,
                )
            return record

    def _evict_one(self, subtask: SubTask, trace: Trace) -> bool:
        """Fire the lowest keep-score agent if the economy approves."""
        now = self._clock()
        roster = [a for a in self.registry.roster() if a.profile.locality == "local"]
        if not roster:
            return False
        view = self.ledger.snapshot()
        victim = min(roster, key=lambda a: (keep_score(a, now, self.settings), a.agent_id))
        decision = evaluate_fire(victim, view, now, roster=roster, settings=self.settings)
        if not decision.fire:
            return False
        self.registry.fire(victim.agent_id)
        trace.add(
            TRACE_FIRE,
            agent=victim.agent_id,
            reason=decision.reason,
            subtask=subtask.subtask_id,
            initiator="ceo",
        )
        return True

    def _run_agent(self, agent, subtask: SubTask, trace: Trace) -> str:
        """Invoke a hired agent. Local salaries are charged up front;
        external usage is charged after the call, and the result is only
        accepted if the charge commits."""
        request_id = self._next_request_id()
        profile = agent.profile
        if profile.locality == "local":
            salary = self.policy.invocation_cost(profile)
            if not self._charge(
                agent.agent_id, salary, CATEGORY_INVOCATION, request_id, trace
            ):
                raise ChargeRefused(f"salary for {agent.agent_id} unaffordable")
        try:
            completion = self.hub.invoke(
                profile.backend_id,
                agent.system_prompt,
                [ChatMessage("user", subtask.description)],
            )
        except (BackendUnreachable, BackendTimeout, BackendError) as exc:
            self.registry.record_outcome(agent.agent_id, success=False)
            raise AgentFailure(f"{agent.agent_id}: {exc}")
        trace.add(
            TRACE_MODEL,
            backend=profile.backend_id,
            actor=agent.agent_id,
            purpose="subtask",
            subtask=subtask.subtask_id,
            request=request_id,
            input_tokens=completion.input_tokens,
            output_tokens=completion.output_tokens,
            latency=completion.latency,
        )
        if profile.locality == "external":
            try:
                cost = self.policy.expense_cost(
                    profile.backend_id, completion.input_tokens, completion.output_tokens
                )
            except UnknownPricing as exc:
                self.registry.record_outcome(agent.agent_id, success=False)
                trace.add(
                    TRACE_REFUSAL,
                    payer=agent.agent_id,
                    request=request_id,
                    reason=f"cannot price external usage: {exc}",
                )
                raise ChargeRefused(str(exc))
            if not self._charge(agent.agent_id, cost, CATEGORY_EXPENSE, request_id, trace):
                self.registry.record_outcome(agent.agent_id, success=False)
                raise ChargeRefused(f"external usage by {agent.agent_id} unaffordable")
        text = self._filter_employee_output(
            completion.text, agent.agent_id, subtask, trace
        )
        self.registry.record_outcome(agent.agent_id, success=True, latency=completion.latency)
        return text

    def _run_external(self, backend_id: str, subtask: SubTask, trace: Trace) -> str:
        """One direct external call (no hired wrapper). The exact charge
        happens after the call; a refusal discards the result."""
        request_id = self._next_request_id()
        completion = self.hub.invoke(
            backend_id, EXTERNAL_TASK_PROMPT, [ChatMessage("user", subtask.description)]
        )
        trace.add(
            TRACE_MODEL,
            backend=backend_id,
            actor="external",
            purpose="subtask",
            subtask=subtask.subtask_id,
            request=request_id,
            input_tokens=completion.input_tokens,
            output_tokens=completion.output_tokens,
            latency=completion.latency,
        )
        try:
            cost = self.policy.expense_cost(
                backend_id, completion.input_tokens, completion.output_tokens
            )
        except UnknownPricing as exc:
            trace.add(
                TRACE_REFUSAL,
                payer=backend_id,
                request=request_id,
                reason=f"cannot price external usage: {exc}",
            )
            raise ChargeRefused(str(exc))
        if not self._charge(backend_id, cost, CATEGORY_EXPENSE, request_id, trace):
            raise ChargeRefused(f"external call on {backend_id} unaffordable")
        return self._filter_employee_output(completion.text, backend_id, subtask, trace)

    def _run_direct(self, subtask: SubTask, memories, trace: Trace) -> str:
        completion = self._ceo_call(
            _direct_prompt(subtask.description, list(memories)), trace, purpose="direct"
        )
        return self._apply_ceo_directives(completion.text, trace)

    # --- output post-processing ----------------------------------------

    def _filter_employee_output(self, text: str, actor: str, subtask: SubTask, trace: Trace) -> str:
        """Reject hire requests embedded in worker output. The lines are
        dropped and recorded; they are never executed."""
        kept = []
        for line in text.splitlines():
            if REQUEST_HIRE_RE.search(line):
                trace.add(
                    TRACE_VIOLATION,
                    kind=VIOLATION_SINGLE_LEVEL,
                    actor=actor,
                    subtask=subtask.subtask_id,
                    content=line.strip()[:200],
                )
                continue
            kept.append(line)
        return "\n".join(kept).strip()

    def _apply_ceo_directives(self, text: str, trace: Trace) -> str:
        """Execute TOOL_CALL directives in CEO output and strip them from
        the visible reply. Only CEO output is interpreted this way."""
        kept = []
        for line in text.splitlines():
            match = TOOL_CALL_RE.match(line.strip())
            if match is None:
                kept.append(line)
                continue
            try:
                payload = json.loads(match.group(1))
                name = payload["tool"]
                arguments = payload.get("arguments", {})
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                trace.add(TRACE_ERROR, stage="tool_directive", error=str(exc), line=line[:200])
                continue
            try:
                result = self.tools.invoke_tool(name, arguments)
            except AgentFirmError as exc:
                trace.add(
                    TRACE_TOOL,
                    tool=name,
                    arguments=arguments,
                    status="error",
                    error=str(exc),
                )
                continue
            trace.add(
                TRACE_TOOL,
                tool=name,
                arguments=arguments,
                status=result.status,
                payload=result.payload,
                duration=result.duration,
            )
        return "\n".join(kept).strip()

    def synthesize(self, subtasks: list, user_text: str, trace: Trace | None = None) -> str:
        """Combine terminal subtask results into the final answer.

        Runs even for a single subtask (uniform pipeline). If the CEO
        backend fails here, the raw results are returned with a notice;
        failed subtasks are always disclosed either way.
        """
        trace = trace if trace is not None else Trace(self._clock)
        for st in subtasks:
            if st.status not in (STATUS_DONE, STATUS_FAILED):
                raise ValueError(f"subtask {st.subtask_id} is not terminal")
        failed = [st for st in subtasks if st.status == STATUS_FAILED]
        try:
            completion = self._ceo_call(
                _synthesis_prompt(user_text, subtasks), trace, purpose="synthesize"
            )
            text = self._apply_ceo_directives(completion.text, trace)
            degraded = False
        except (BackendUnreachable, BackendTimeout, BackendError, ChargeRefused) as exc:
            parts = [
                f"[{st.subtask_id}] {st.result}"
                for st in subtasks
                if st.status == STATUS_DONE
            ]
            text = (
                "Synthesis was unavailable; raw sub-task results follow.\n"
                + "\n".join(parts)
            ).strip()
            trace.add(TRACE_SYNTHESIS, degraded=True, error=str(exc))
            degraded = True
        if failed:
            notice = (
                f"Note: {len(failed)} sub-task(s) did not complete: "
                + "; ".join(st.description for st in failed)
            )
            text = f"{text}\n\n{notice}" if text else notice
        if not degraded:
            trace.add(
                TRACE_SYNTHESIS,
                degraded=False,
                subtasks=len(subtasks),
                failed=len(failed),
            )
        return text

    def _record_failure_critique(self, user_text: str, answer: str, trace: Trace) -> None:
        try:
            completion = self._ceo_call(
                _critique_prompt(user_text, answer), trace, purpose="critique"
            )
            critique = completion.text.strip()
        except AgentFirmError as exc:
            trace.add(TRACE_ERROR, stage="critique", error=str(exc))
            critique = "No model critique available; the answer was judged incorrect."
        if not critique:
            critique = "No model critique available; the answer was judged incorrect."
        entry = self.memory.record_failure_critique(user_text, answer, critique)
        trace.add(TRACE_CRITIQUE, key=entry.key)
