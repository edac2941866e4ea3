"""Telemetry/control bridge: one WebSocket endpoint for the operator console.

The mission loop stays the single owner of simulation state. The bridge runs
an asyncio WebSocket server on its own daemon thread and exchanges JSON text
frames on the `/sim` path. Message catalog (all frames carry "type"):

  hello     server -> client on connect: schema version, protocol name
  snapshot  server -> client once per sim second: beacon, vehicles, trails
  command   client -> server: {"type": "command", "command": {...}}
  error     server -> client when a command fails validation

Commands are applied at the next tick boundary, atomically; an optional
"at" field defers application to a given sim second, which is what makes a
bridged run byte-replayable against a scripted one. Slow consumers get
latest-wins snapshot delivery instead of stalling the loop.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading

VALID_MODES = {0, 1, 2, 3, 4}
PROTOCOL = "relnav-bridge"
SCHEMA_VERSION = 1


class CommandValidationError(ValueError):
    pass


def validate_command(cmd) -> dict:
    """Check one inner command dict; returns a normalized copy."""
    if not isinstance(cmd, dict):
        raise CommandValidationError("command must be an object")
    kind = cmd.get("type")
    out = {"type": kind}
    if kind == "set_mode":
        mode = cmd.get("mode")
        if not isinstance(mode, int) or mode not in VALID_MODES:
            raise CommandValidationError(f"mode must be an integer 0..4, got {mode!r}")
        out["mode"] = mode
    elif kind == "set_beacon_target":
        try:
            out["x"] = float(cmd["x"])
            out["y"] = float(cmd["y"])
        except (KeyError, TypeError, ValueError) as e:
            raise CommandValidationError(f"set_beacon_target needs numeric x, y: {e}")
        if not (abs(out["x"]) < 1e6 and abs(out["y"]) < 1e6):
            raise CommandValidationError("beacon target out of range")
    elif kind in ("pause", "resume"):
        pass
    elif kind == "set_time_scale":
        try:
            out["scale"] = float(cmd["scale"])
        except (KeyError, TypeError, ValueError) as e:
            raise CommandValidationError(f"set_time_scale needs a numeric scale: {e}")
        if out["scale"] <= 0:
            raise CommandValidationError("time scale must be positive")
    else:
        raise CommandValidationError(f"unknown command type {kind!r}")
    if cmd.get("at") is not None:
        try:
            out["at"] = float(cmd["at"])
        except (TypeError, ValueError) as e:
            raise CommandValidationError(f"'at' must be a sim time in seconds: {e}")
    return out


class BridgeServer:
    """WebSocket bridge; start() binds, the mission loop drains and publishes."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.host = host
        self.port = port
        self._commands: queue.Queue = queue.Queue()
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._clients: set[asyncio.Queue] = set()
        self._started = threading.Event()
        self._startup_error: Exception | None = None
        self._server = None

    # -- mission-loop side ----------------------------------------------

    def drain_commands(self) -> list:
        out = []
        while True:
            try:
                out.append(self._commands.get_nowait())
            except queue.Empty:
                return out

    def publish(self, snapshot: dict):
        if self._loop is None:
            return
        frame = json.dumps(snapshot, sort_keys=True)
        self._loop.call_soon_threadsafe(self._fanout, frame)

    def _fanout(self, frame: str):
        for q in list(self._clients):
            if q.full():
                try:
                    q.get_nowait()            # drop the stale snapshot
                except asyncio.QueueEmpty:
                    pass
            q.put_nowait(frame)

    # -- server side ------------------------------------------------------

    async def _handle(self, websocket):
        path = getattr(getattr(websocket, "request", None), "path", "/sim")
        if path.split("?")[0] != "/sim":
            await websocket.close(code=4404, reason="unknown path")
            return
        await websocket.send(json.dumps(
            {"type": "hello", "schema_version": SCHEMA_VERSION, "protocol": PROTOCOL}))
        out_q: asyncio.Queue = asyncio.Queue(maxsize=1)
        self._clients.add(out_q)

        async def sender():
            while True:
                await websocket.send(await out_q.get())

        send_task = asyncio.create_task(sender())
        try:
            async for raw in websocket:
                try:
                    frame = json.loads(raw)
                    if frame.get("type") != "command":
                        raise CommandValidationError(
                            f"unsupported frame type {frame.get('type')!r}")
                    self._commands.put(validate_command(frame.get("command")))
                except (json.JSONDecodeError, CommandValidationError) as e:
                    await websocket.send(json.dumps(
                        {"type": "error", "message": str(e)}))
        finally:
            send_task.cancel()
            self._clients.discard(out_q)

    def start(self):
        """Bind and serve on a daemon thread; raises if the port is taken."""
        import websockets

        def runner():
            loop = asyncio.new_event_loop()
            asyncio.set_event_loop(loop)
            self._loop = loop

            async def boot():
                self._server = await websockets.serve(self._handle, self.host, self.port)
                self.port = self._server.sockets[0].getsockname()[1]

            try:
                loop.run_until_complete(boot())
            except OSError as e:
                self._startup_error = e
                self._started.set()
                return
            self._started.set()
            loop.run_forever()

        self._thread = threading.Thread(target=runner, daemon=True, name="relnav-bridge")
        self._thread.start()
        self._started.wait(timeout=10)
        if self._startup_error is not None:
            raise RuntimeError(f"bridge failed to start: {self._startup_error}")

    def stop(self):
        if self._loop is None:
            return

        async def shutdown():
            if self._server is not None:
                self._server.close()
                await self._server.wait_closed()
            self._loop.stop()

        def kick():
            asyncio.ensure_future(shutdown())

        self._loop.call_soon_threadsafe(kick)
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve(runner, host: str = "127.0.0.1", port: int = 0) -> BridgeServer:
    """Attach a started bridge to a MissionRunner and return it."""
    bridge = BridgeServer(host, port)
    bridge.start()
    runner.bridge = bridge
    if runner._time_scale is None:
        runner._time_scale = 1.0
    return bridge
