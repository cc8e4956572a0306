"""Live session service: a websocket wire around the coordinator.

Every frame is a JSON text message {"type": ..., "t": ..., "payload": {...}}.
Inbound types: hello, note_on {pitch, velocity}, note_off {pitch}, ping.
Outbound: hello, bar_closed, chord, strike, metrics, fault, note_on,
note_off, pong.  Timestamps are server-clock session seconds; clients echo
server time from pongs to estimate skew.

One asyncio task owns the coordinator and advances it on the control
period; websocket handlers only enqueue inbound messages and drain their
own bounded outbox, so the clock never blocks on a slow client.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import time
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from pianoduet.config import SessionConfig
from pianoduet.session import SessionCoordinator
from pianoduet.sync_metrics import build_report

OUTBOX_LIMIT = 4096  # events per client; the oldest drop first


class LiveSession:
    """Coordinator ownership plus client fan-out for one live session."""

    def __init__(self, model, cfg: SessionConfig):
        self.model = model
        self.cfg = cfg
        self.coordinator: SessionCoordinator | None = None
        self.started_wall: float | None = None
        self.inbox: asyncio.Queue = asyncio.Queue()
        self.clients: dict[int, asyncio.Queue] = {}
        self._next_client = 0
        self._last_metrics_bar = 0

    # ----- clients -----

    def register(self) -> tuple[int, asyncio.Queue]:
        self._next_client += 1
        queue: asyncio.Queue = asyncio.Queue(maxsize=OUTBOX_LIMIT)
        self.clients[self._next_client] = queue
        return self._next_client, queue

    def unregister(self, client_id: int):
        self.clients.pop(client_id, None)

    def broadcast(self, record: dict):
        message = json.dumps(
            {"type": record["type"], "t": record.get("t"), "payload": {
                k: v for k, v in record.items() if k not in ("type", "t")
            }},
            separators=(",", ":"),
        )
        for queue in self.clients.values():
            if queue.full():
                with contextlib.suppress(asyncio.QueueEmpty):
                    queue.get_nowait()
            queue.put_nowait(message)

    # ----- session time -----

    def session_time(self, wall: float | None = None) -> float:
        if self.started_wall is None:
            return 0.0
        return (wall if wall is not None else time.monotonic()) - self.started_wall

    # ----- the clock task -----

    async def run(self):
        # oscillator tuning happens before the session clock can start,
        # so no live cycle ever pays for it
        self.coordinator = SessionCoordinator(self.model, self.cfg)
        self.coordinator.subscribers.append(self.broadcast)
        dt = self.cfg.control_dt
        while True:
            await asyncio.sleep(dt / 2)
            self._drain_inbox()
            if self.started_wall is None:
                continue
            now = self.session_time()
            before = len(self.coordinator.cycle_seconds)
            self.coordinator.advance_to(now)
            for elapsed in self.coordinator.cycle_seconds[before:]:
                if elapsed > self.cfg.latency_budget:
                    self.coordinator.fault(
                        "budget_overrun", f"cycle took {elapsed * 1e3:.2f} ms"
                    )
            self._maybe_emit_metrics()

    def _drain_inbox(self):
        while True:
            try:
                wall, message = self.inbox.get_nowait()
            except asyncio.QueueEmpty:
                return
            self._handle(wall, message)

    def _handle(self, wall: float, message: dict):
        kind = message.get("type")
        payload = message.get("payload") or {}
        if kind == "note_on":
            if self.started_wall is None:
                self.started_wall = wall  # first keystroke anchors the bar grid
            self.coordinator.note_on(
                int(payload["pitch"]),
                int(payload.get("velocity", 64)),
                self.session_time(wall),
            )
        elif kind == "note_off":
            if self.started_wall is not None:
                self.coordinator.note_off(int(payload["pitch"]), self.session_time(wall))

    def _maybe_emit_metrics(self):
        c = self.coordinator
        bars = sorted(set(c.human_beats) & set(c.robot_beats))
        if len(bars) < 2 or bars[-1] <= self._last_metrics_bar:
            return
        self._last_metrics_bar = bars[-1]
        human = [c.human_beats[b] for b in bars]
        robot = [c.robot_beats[b] for b in bars]
        report = build_report(human, robot)
        c._emit(
            {
                "type": "metrics",
                "t": round(c.now, 6),
                "mean_tg": round(report.mean_tg, 6),
                "si": round(report.si, 6),
                "mae": round(report.mae, 6),
                "entropy": round(report.deviation_entropy_bits, 6),
            }
        )


def create_app(model, cfg: SessionConfig | None = None) -> FastAPI:
    """FastAPI app exposing the live-session websocket at /ws."""
    cfg = cfg or SessionConfig(mode="live")
    live = LiveSession(model, cfg)

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(live.run())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task

    app = FastAPI(title="pianoduet live session", lifespan=lifespan)
    app.state.live = live

    frontend = Path(__file__).resolve().parents[2] / "frontend"
    if (frontend / "index.html").exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=frontend, html=True), name="ui")

    @app.get("/health")
    async def health():
        started = live.started_wall is not None
        return {
            "status": "ok",
            "clients": len(live.clients),
            "session_started": started,
            "bar": live.coordinator.bar_of(live.coordinator.now) if started else 0,
        }

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        client_id, outbox = live.register()
        hello = {
            "type": "hello",
            "t": live.session_time(),
            "payload": {
                "tempo_bpm": cfg.tempo_bpm,
                "beats_per_bar": cfg.beats_per_bar,
                "bar_seconds": 60.0 * cfg.beats_per_bar / cfg.tempo_bpm,
                "control_dt": cfg.control_dt,
                "clients": len(live.clients),
            },
        }
        await websocket.send_text(json.dumps(hello, separators=(",", ":")))

        async def reader():
            while True:
                text = await websocket.receive_text()
                try:
                    message = json.loads(text)
                    kind = message.get("type")
                except (json.JSONDecodeError, AttributeError):
                    raise _ProtocolViolation("frame is not a JSON object")
                if kind == "ping":
                    pong = {
                        "type": "pong",
                        "t": live.session_time(),
                        "payload": {"echo": message.get("t")},
                    }
                    await websocket.send_text(json.dumps(pong, separators=(",", ":")))
                elif kind in ("note_on", "note_off"):
                    live.inbox.put_nowait((time.monotonic(), message))
                elif kind == "hello":
                    continue
                else:
                    raise _ProtocolViolation(f"unknown message type {kind!r}")

        async def writer():
            while True:
                await websocket.send_text(await outbox.get())

        try:
            tasks = [asyncio.create_task(reader()), asyncio.create_task(writer())]
            done, pending = await asyncio.wait(tasks, return_when=asyncio.FIRST_EXCEPTION)
            for task in pending:
                task.cancel()
            for task in done:
                exc = task.exception()
                if isinstance(exc, _ProtocolViolation):
                    await websocket.close(code=1003, reason=str(exc))
                elif exc is not None and not isinstance(exc, WebSocketDisconnect):
                    raise exc
        except WebSocketDisconnect:
            pass
        finally:
            live.unregister(client_id)

    return app


class _ProtocolViolation(Exception):
    pass
