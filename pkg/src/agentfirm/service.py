"""HTTP service over one runtime: sessions, messages, admin snapshots, SSE.

Endpoints:
    POST /sessions                   -> {"session_id": ...}
    POST /sessions/{id}/messages     -> {"session_id", "response", "trace"}
    GET  /sessions/{id}              -> transcript
    GET  /sessions/{id}/events       -> text/event-stream of turn-level updates
    GET  /admin/ledger|roster|tools|memory -> snapshots

Events are fan-out only, no replay buffer: a reconnecting client refetches
the snapshots and resumes the stream.
"""

from __future__ import annotations

import json
import queue
import threading

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .errors import AgentFirmError, SessionClosed
from .runtime import Runtime

SSE_QUEUE_SIZE = 256
SSE_KEEPALIVE_S = 15.0


class MessageBody(BaseModel):
    text: str


class SessionBus:
    """Per-session fan-out of turn-level events to SSE subscribers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._subscribers: dict[str, list] = {}

    def subscribe(self, session_id: str) -> "queue.Queue":
        q: queue.Queue = queue.Queue(maxsize=SSE_QUEUE_SIZE)
        with self._lock:
            self._subscribers.setdefault(session_id, []).append(q)
        return q

    def unsubscribe(self, session_id: str, q) -> None:
        with self._lock:
            subscribers = self._subscribers.get(session_id, [])
            if q in subscribers:
                subscribers.remove(q)

    def publish(self, session_id: str, event: dict) -> None:
        with self._lock:
            subscribers = list(self._subscribers.get(session_id, []))
        for q in subscribers:
            try:
                q.put_nowait(event)
            except queue.Full:
                pass  # a stalled client loses events; it refetches on reconnect


def create_app(runtime: Runtime) -> FastAPI:
    app = FastAPI(title="agentfirm", version="0.1.0")
    bus = SessionBus()
    app.state.runtime = runtime
    app.state.bus = bus
    orchestrator = runtime.orchestrator

    @app.post("/sessions")
    def create_session():
        session = orchestrator.open_session()
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        try:
            session = orchestrator.get_session(session_id)
        except SessionClosed:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        return session.to_dict()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        try:
            session = orchestrator.get_session(session_id)
        except SessionClosed:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        if not body.text or not body.text.strip():
            raise HTTPException(status_code=422, detail="text must be nonempty")
        turns_before = len(session.turns)
        try:
            response = orchestrator.handle_query(session, body.text)
        except SessionClosed:
            raise HTTPException(status_code=409, detail="session is closed")
        except AgentFirmError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        for turn in session.turns[turns_before:]:
            bus.publish(session_id, {"type": "turn", **turn.to_dict()})
        bus.publish(
            session_id,
            {"type": "ledger", "snapshot": runtime.ledger.snapshot().to_dict()},
        )
        return response.to_dict()

    @app.get("/sessions/{session_id}/events")
    def session_events(session_id: str):
        try:
            orchestrator.get_session(session_id)
        except SessionClosed:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")
        q = bus.subscribe(session_id)

        def stream():
            try:
                yield 'data: {"type": "connected"}\n\n'
                while True:
                    try:
                        event = q.get(timeout=SSE_KEEPALIVE_S)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield f"data: {json.dumps(event)}\n\n"
            finally:
                bus.unsubscribe(session_id, q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/admin/ledger")
    def admin_ledger():
        return runtime.ledger.snapshot().to_dict()

    @app.get("/admin/roster")
    def admin_roster():
        return {"agents": [a.to_dict() for a in runtime.registry.all_agents()]}

    @app.get("/admin/tools")
    def admin_tools():
        return {"tools": [t.to_dict() for t in runtime.tools.list_tools()]}

    @app.get("/admin/memory")
    def admin_memory():
        return {
            "entries": [
                {
                    "key": e.key,
                    "kind": e.kind,
                    "text": e.text,
                    "created_at": e.created_at,
                }
                for e in runtime.memory.entries()
            ]
        }

    return app
