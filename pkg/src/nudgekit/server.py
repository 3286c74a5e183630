"""Live websocket endpoint at /ws wrapping a :class:`SessionHub`.

Sessions started over a connection run on the wall clock with mock
providers configured by the session_start payload; the connection that
starts a session is auto-subscribed to its event stream, and additional
read-only observers may attach with {"type": "subscribe", "session_id":
...} control frames. A background tick task drives deferred-injection
re-checks. Dropped connections stop their sessions; reconnection means a
new session.
"""

from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles

from .clock import WallClock
from .engine import SessionEngine, engine_from_payload
from .errors import NudgeKitError
from .gateway import Envelope, SessionHub, decode, encode

logger = logging.getLogger(__name__)

TICK_INTERVAL_S = 0.25


def live_engine_factory(envelope: Envelope) -> SessionEngine:
    try:
        return engine_from_payload(envelope.session_id, envelope.payload, WallClock())
    except (KeyError, TypeError, ValueError) as exc:
        raise NudgeKitError(f"bad session_start payload: {exc}") from exc


def create_app(hub: SessionHub | None = None, static_dir: str | Path | None = None) -> FastAPI:
    hub = hub or SessionHub(live_engine_factory)
    app = FastAPI(title="nudgekit gateway")
    app.state.hub = hub

    async def _tick_loop(session_id: str) -> None:
        while hub.is_running(session_id):
            await asyncio.sleep(TICK_INTERVAL_S)
            try:
                await asyncio.to_thread(hub.tick, session_id)
            except NudgeKitError:
                return

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket) -> None:
        await websocket.accept()
        loop = asyncio.get_running_loop()
        outbox: asyncio.Queue[str] = asyncio.Queue()
        subscriptions: list[str] = []
        started: list[str] = []
        tick_tasks: list[asyncio.Task] = []

        def listener(envelope: Envelope) -> None:
            loop.call_soon_threadsafe(outbox.put_nowait, encode(envelope))

        async def sender() -> None:
            while True:
                await websocket.send_text(await outbox.get())

        send_task = asyncio.create_task(sender())

        def reply_error(code: str, message: str, session_id: str = "-") -> str:
            return encode(
                Envelope(
                    type="error",
                    session_id=session_id or "-",
                    seq=0,
                    ts_ms=0,
                    payload={"code": code, "message": message, "correlation_id": ""},
                )
            )

        try:
            while True:
                text = await websocket.receive_text()
                # Subscribe is a control frame, not an envelope.
                try:
                    raw = json.loads(text)
                except ValueError:
                    raw = None
                if isinstance(raw, dict) and raw.get("type") == "subscribe":
                    session_id = str(raw.get("session_id", ""))
                    try:
                        await asyncio.to_thread(hub.subscribe, session_id, listener)
                        subscriptions.append(session_id)
                    except NudgeKitError as exc:
                        await websocket.send_text(
                            reply_error(type(exc).__name__, str(exc), session_id)
                        )
                    continue
                try:
                    envelope = decode(text)
                    await asyncio.to_thread(hub.route, envelope)
                except NudgeKitError as exc:
                    await websocket.send_text(reply_error(type(exc).__name__, str(exc)))
                    continue
                if envelope.type == "session_start":
                    await asyncio.to_thread(hub.subscribe, envelope.session_id, listener)
                    subscriptions.append(envelope.session_id)
                    started.append(envelope.session_id)
                    tick_tasks.append(asyncio.create_task(_tick_loop(envelope.session_id)))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            for task in tick_tasks:
                task.cancel()
            for session_id in subscriptions:
                hub.unsubscribe(session_id, listener)
            for session_id in started:
                await asyncio.to_thread(hub.stop_session, session_id)

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="console")

    return app


def serve(host: str = "127.0.0.1", port: int = 8765, static_dir: str | None = None) -> None:
    """Run the gateway with uvicorn (blocking)."""
    import uvicorn

    uvicorn.run(create_app(static_dir=static_dir), host=host, port=port, log_level="warning")
