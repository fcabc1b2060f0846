"""Network-facing API: chat, server-push events, preferences, session control.

The gateway owns one engine. Replay sessions run on a worker thread; the
event channel is server-sent events fed from per-subscriber queues, so every
delivered intervention reaches each subscriber exactly once, in order.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from typing import Literal

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .context import MockVisionClient
from .loops import RuleBasedMockReasoner
from .session import SessionEngine
from .streams import open_recording

log = logging.getLogger(__name__)


class ChatRequest(BaseModel):
    text: str


class PreferencesModel(BaseModel):
    tone: str = "supportive"
    proactivity: Literal["low", "normal", "high"] = "normal"
    notification_style: str = "standard"
    dnd: bool = False
    task: str | None = None


class SessionStartRequest(BaseModel):
    source: Literal["replay"] = "replay"
    path: str
    duration: float | None = None
    speed: float | str = "max"


def default_engine() -> SessionEngine:
    return SessionEngine(vision_client=MockVisionClient(), reasoner=RuleBasedMockReasoner())


def sse_format(event_doc: dict) -> str:
    return f"data: {json.dumps(event_doc, separators=(',', ':'))}\n\n"


def create_app(engine: SessionEngine | None = None) -> FastAPI:
    engine = engine or default_engine()
    app = FastAPI(title="desksense gateway")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.engine = engine
    app.state.worker = None

    @app.post("/chat")
    def post_chat(req: ChatRequest):
        reply = engine.post_chat(req.text)
        return {"reply": reply, "t": engine.clock.now()}

    @app.get("/state")
    def get_state():
        return engine.latest_state

    @app.get("/chatlog")
    def get_chatlog():
        return {"messages": [m.to_doc() for m in engine.chat_log]}

    @app.get("/preferences")
    def get_preferences():
        return engine.preferences

    @app.put("/preferences")
    def put_preferences(prefs: PreferencesModel):
        engine.set_preferences(prefs.model_dump())
        return engine.preferences

    @app.post("/session/start")
    def session_start(req: SessionStartRequest):
        if engine.phase not in ("idle", "ended"):
            raise HTTPException(409, f"session already {engine.phase}")
        try:
            recording = open_recording(req.path)
        except Exception as exc:
            raise HTTPException(400, str(exc))
        engine.start()

        def work():
            try:
                engine._run_started(recording, req.duration, req.speed)
            except Exception:
                log.exception("replay worker failed")

        worker = threading.Thread(target=work, daemon=True)
        app.state.worker = worker
        worker.start()
        return {"phase": engine.phase}

    @app.post("/session/stop")
    def session_stop():
        try:
            engine.stop()
        except RuntimeError as exc:
            raise HTTPException(409, str(exc))
        if app.state.worker is not None:
            app.state.worker.join(timeout=30.0)
            app.state.worker = None
        return {"phase": engine.phase}

    @app.get("/events")
    def events():
        sub = engine.subscribe()

        def stream():
            try:
                while True:
                    try:
                        event = sub.get(timeout=0.5)
                        yield sse_format(event.to_doc())
                    except queue.Empty:
                        if engine.phase == "ended":
                            break
                        yield ": keep-alive\n\n"
            finally:
                engine.unsubscribe(sub)

        return StreamingResponse(stream(), media_type="text/event-stream")

    return app
