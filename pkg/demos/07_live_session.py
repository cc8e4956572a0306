"""Drive the live websocket service end to end on localhost.

Starts the server in-process, connects a client, plays one bar of melody
with real timing, and prints the frames the robot pushes back (bar
closure, chord decision, strikes).  The browser UI in frontend/ speaks
exactly this protocol.
"""

import asyncio
import contextlib
import json
import threading
import time

import uvicorn

from pianoduet.config import SessionConfig
from pianoduet.model import TrainConfig, train
from pianoduet.server import create_app
from pianoduet.synthetic import make_samples

PORT = 8962

print("training a small classifier...")
model, _ = train(make_samples(600, seed=2), TrainConfig(seed=2, max_epochs=120))

cfg = SessionConfig(mode="live", tempo_bpm=150.0, port=PORT)
server = uvicorn.Server(uvicorn.Config(create_app(model, cfg), host="127.0.0.1",
                                       port=PORT, log_level="error"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.05)
print(f"live session on ws://127.0.0.1:{PORT}/ws")


async def play():
    import websockets

    async with websockets.connect(f"ws://127.0.0.1:{PORT}/ws") as ws:
        print("<-", json.loads(await ws.recv())["type"])

        async def melody():
            beat = 60.0 / 150.0
            for pitch in (60, 64, 67, 72, 60, 64, 67, 72):
                await ws.send(json.dumps(
                    {"type": "note_on", "t": 0, "payload": {"pitch": pitch, "velocity": 90}}
                ))
                await asyncio.sleep(beat / 2)
                await ws.send(json.dumps(
                    {"type": "note_off", "t": 0, "payload": {"pitch": pitch}}
                ))
                await asyncio.sleep(beat / 2)

        player = asyncio.create_task(melody())
        deadline = asyncio.get_event_loop().time() + 5.0
        while asyncio.get_event_loop().time() < deadline:
            with contextlib.suppress(asyncio.TimeoutError):
                frame = json.loads(await asyncio.wait_for(ws.recv(), timeout=0.5))
                if frame["type"] in ("bar_closed", "chord", "strike", "metrics"):
                    print("<-", frame["type"], frame["payload"])
        player.cancel()


asyncio.run(play())
server.should_exit = True
thread.join(timeout=3)
print("session closed")
