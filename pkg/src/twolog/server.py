"""Protocol server: one-JSON-object-per-message over HTTP.

Commands are submitted with POST /api/session/{sid}/command and full
ProofState snapshots stream over Server-Sent Events (one JSON message
per event line), so any client — including a browser — can follow a
session.  Sessions are single-writer: a session name can only be
attached once while live, and a command with a stale token is refused.
Formulas in snapshots use the fully parenthesized wire syntax.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import secrets
import threading
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import HTMLResponse, StreamingResponse

from . import parser as P
from .kernel import eigen_vars
from .parser import ParseError
from .pp import formula_str, ty_str
from .session import Session, SessionError

PROTOCOL_VERSION = 1


def snapshot(session: Session) -> dict:
    """Full serialized proof state (wire syntax)."""
    out: dict = {
        "v": PROTOCOL_VERSION,
        "type": "snapshot",
        "mode": "proof" if session.state is not None else "top",
        "lemmas": [n for n in session.lemmas],
        "definitions": [n for n in session.defs.preds],
        "transcript": list(session.transcript),
        "trust": [
            {"kind": ev.kind, "detail": ev.detail, "theorem": ev.theorem}
            for ev in session.trust
        ],
    }
    st = session.state
    if st is not None:
        goals = []
        for seq in st.goals:
            goals.append(
                {
                    "variables": sorted(eigen_vars(seq)),
                    "hypotheses": [
                        {"name": h.name, "formula": formula_str(h.formula, wire=True)}
                        for h in seq.hyps
                    ],
                    "goal": formula_str(seq.goal, wire=True),
                }
            )
        out["theorem"] = st.name
        out["statement"] = formula_str(st.statement, wire=True)
        out["subgoal_count"] = len(st.goals)
        out["goals"] = goals
        out["done"] = st.done
    return out


@dataclass
class Live:
    session: Session
    token: str
    lock: threading.Lock = field(default_factory=threading.Lock)
    listeners: list[asyncio.Queue] = field(default_factory=list)
    loop: Optional[asyncio.AbstractEventLoop] = None

    def broadcast(self, msg: dict) -> None:
        if self.loop is None:
            return
        for q in list(self.listeners):
            self.loop.call_soon_threadsafe(q.put_nowait, msg)


def make_app(initial: Optional[Session] = None) -> FastAPI:
    app = FastAPI(title="twolog")
    sessions: dict[str, Live] = {}
    counter = itertools.count(1)

    def template() -> Session:
        if initial is not None:
            return Session(
                search_depth=initial.search_depth,
                verify_meta=initial.verify_meta,
                base_dir=initial.base_dir,
            )
        return Session()

    @app.post("/api/session")
    async def create_session(request: Request):
        body = {}
        try:
            body = await request.json()
        except Exception:
            pass
        name = body.get("name") or f"s{next(counter)}"
        if name in sessions:
            raise HTTPException(status_code=409, detail="session busy (single writer)")
        live = Live(template(), secrets.token_hex(8))
        live.loop = asyncio.get_running_loop()
        sessions[name] = live
        return {
            "v": PROTOCOL_VERSION,
            "type": "hello",
            "session": name,
            "token": live.token,
            "snapshot": snapshot(live.session),
        }

    @app.post("/api/session/{sid}/command")
    async def command(sid: str, request: Request):
        live = sessions.get(sid)
        if live is None:
            raise HTTPException(status_code=404, detail="no such session")
        body = await request.json()
        if body.get("token") != live.token:
            raise HTTPException(status_code=403, detail="not the session writer")
        text = body.get("text", "")

        def execute() -> dict:
            with live.lock:
                try:
                    msgs: list[str] = []
                    for cmd, src in P.Parser(text).commands_with_source():
                        msgs.extend(live.session.execute(cmd, src))
                    snap = snapshot(live.session)
                    return {
                        "v": PROTOCOL_VERSION,
                        "type": "ok",
                        "messages": msgs,
                        "snapshot": snap,
                    }
                except (SessionError, ParseError) as e:
                    return {
                        "v": PROTOCOL_VERSION,
                        "type": "error",
                        "error": str(e),
                        "snapshot": snapshot(live.session),
                    }

        result = await asyncio.to_thread(execute)
        if result["type"] == "ok":
            live.broadcast(result["snapshot"])
        return result

    @app.get("/api/session/{sid}/events")
    async def events(sid: str, once: bool = False):
        live = sessions.get(sid)
        if live is None:
            raise HTTPException(status_code=404, detail="no such session")
        q: asyncio.Queue = asyncio.Queue()
        live.listeners.append(q)
        q.put_nowait(snapshot(live.session))

        async def stream():
            try:
                while True:
                    try:
                        msg = await asyncio.wait_for(q.get(), timeout=15.0)
                    except asyncio.TimeoutError:
                        yield ": keepalive\n\n"
                        continue
                    yield f"data: {json.dumps(msg)}\n\n"
                    if once:
                        return
            finally:
                if q in live.listeners:
                    live.listeners.remove(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.delete("/api/session/{sid}")
    async def close_session(sid: str, request: Request):
        live = sessions.get(sid)
        if live is None:
            raise HTTPException(status_code=404, detail="no such session")
        body = await request.json()
        if body.get("token") != live.token:
            raise HTTPException(status_code=403, detail="not the session writer")
        del sessions[sid]
        return {"v": PROTOCOL_VERSION, "type": "closed"}

    @app.get("/", response_class=HTMLResponse)
    async def index():
        import importlib.resources as res
        try:
            ui = res.files("twolog").joinpath("ui/index.html").read_text()
            return ui
        except Exception:
            return "<html><body><p>twolog server running; UI assets not installed.</p></body></html>"

    @app.get("/ui/{asset}")
    async def ui_asset(asset: str):
        import importlib.resources as res
        from fastapi.responses import Response
        if "/" in asset or ".." in asset or not asset.endswith((".js", ".html", ".css")):
            raise HTTPException(status_code=404, detail="no such asset")
        try:
            body = res.files("twolog").joinpath(f"ui/{asset}").read_text()
        except Exception:
            raise HTTPException(status_code=404, detail="UI assets not installed")
        media = "application/javascript" if asset.endswith(".js") else "text/html"
        return Response(body, media_type=media)

    return app


def serve(host: str, port: int, session: Optional[Session] = None) -> None:
    import uvicorn

    app = make_app(session)
    print(f"twolog server on http://{host}:{port}/")
    uvicorn.run(app, host=host, port=port, log_level="warning")
