"""Real-time cockpit service.

One websocket session per pilot.  The server owns the simulation: a 50 Hz
tick loop reads the newest client input (latest-wins mailbox keyed by seq),
zeroes it when stale, runs the shared-control step, records the sample, and
streams a state frame back.  Frame delivery uses a bounded queue with
drop-oldest backpressure so a slow client can never stall the simulation;
the recording buffer is written on every tick regardless of what the network
drops.  Trial logs land on disk in the same format the offline runner emits,
and the train message fits a model from named recorded sessions off the tick
path.

A start message may set ``"lockstep": true``: the loop then advances exactly
one tick per received input message instead of following the wall clock,
which lets a scripted client reproduce an offline run byte for byte.
"""

from __future__ import annotations

import asyncio
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .controller import CostSpec, LqrSolution, default_cost, solve_dare
from .errors import (
    DataError,
    LogFormatError,
    ModelError,
    NonStabilizableError,
    SharedLanderError,
)
from .experiment import TrialSession, derive_seed, fit_model_from_logs
from .koopman import extract_linear, load_model, save_model
from .metrics import PARADIGMS, TrialLog, load_log, save_log, trial_metrics
from .sim import ControlInput, WorldParams, ZERO_INPUT

__all__ = ["ServeSettings", "create_app", "serve"]

STALENESS_S = 0.2  # inputs older than this are treated as released sticks
SEND_QUEUE_FRAMES = 64


@dataclass
class ServeSettings:
    world: WorldParams = field(default_factory=WorldParams)
    cost: CostSpec | None = None  # default_cost(world) when None
    output_dir: str = "cockpit_out"
    static_dir: str | None = None  # serve the browser cockpit from here

    def resolved_cost(self) -> CostSpec:
        return self.cost if self.cost is not None else default_cost(self.world)


@dataclass
class _Mailbox:
    seq: int = -1
    value: ControlInput = ZERO_INPUT
    received: float = 0.0

    def offer(self, seq: int, value: ControlInput, now: float) -> None:
        if seq > self.seq:
            self.seq = seq
            self.value = value
            self.received = now

    def read(self, now: float) -> ControlInput:
        if self.seq < 0 or now - self.received > STALENESS_S:
            return ZERO_INPUT
        return self.value


class Session:
    def __init__(self, session_id: str, ws: WebSocket, app_state: "_AppState"):
        self.id = session_id
        self.name = "anonymous"
        self.ws = ws
        self.app_state = app_state
        self.mailbox = _Mailbox()
        self.trial: TrialSession | None = None
        self.lockstep = False
        self.trial_count = 0
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=SEND_QUEUE_FRAMES)
        self.ticker: asyncio.Task | None = None

    # -- outbound ---------------------------------------------------------

    def enqueue(self, frame: dict) -> None:
        text = json.dumps(frame)
        while True:
            try:
                self.queue.put_nowait(text)
                return
            except asyncio.QueueFull:
                try:
                    self.queue.get_nowait()  # drop the oldest frame
                except asyncio.QueueEmpty:
                    pass

    def error(self, message: str) -> None:
        self.enqueue({"type": "error", "message": message})

    async def drain(self) -> None:
        while True:
            text = await self.queue.get()
            await self.ws.send_text(text)

    # -- trial lifecycle --------------------------------------------------

    def log_dir(self) -> Path:
        d = Path(self.app_state.settings.output_dir) / "sessions" / self.id
        d.mkdir(parents=True, exist_ok=True)
        return d

    def start_trial(self, msg: dict) -> None:
        if self.trial is not None and self.trial.running:
            self.error("trial already running")
            return
        paradigm = msg.get("paradigm")
        if paradigm not in PARADIGMS:
            self.error(f"unknown paradigm {paradigm!r}")
            return
        solution = None
        if paradigm != "user_only":
            model_id = msg.get("model_id")
            if not isinstance(model_id, str):
                self.error("shared paradigms require model_id")
                return
            try:
                solution = self.app_state.solve_model(model_id)
            except NonStabilizableError:
                self.error("model not stabilizable")
                return
            except (FileNotFoundError, LogFormatError, ModelError) as exc:
                self.error(f"cannot load model {model_id}: {exc}")
                return
        seed = msg.get("seed")
        if seed is None:
            seed = derive_seed(time.time_ns(), self.id, self.trial_count)
        elif not isinstance(seed, int):
            self.error("seed must be an integer")
            return
        settings = self.app_state.settings
        self.lockstep = bool(msg.get("lockstep", False))
        self.mailbox = _Mailbox()
        self.trial = TrialSession(
            params=settings.world,
            cost=settings.resolved_cost(),
            paradigm=paradigm,
            seed=seed,
            pilot_id=self.name,
            solution=solution,
        )
        if not self.lockstep:
            self.ticker = asyncio.create_task(self._tick_loop())

    def tick_once(self, raw: ControlInput) -> None:
        rec = self.trial.tick(raw)
        frame = {
            "type": "state",
            "t": rec.t,
            "state": [rec.state.x, rec.state.y, rec.state.theta,
                      rec.state.vx, rec.state.vy, rec.state.omega],
            "u_user": [rec.u_user.u_main, rec.u_user.u_rot],
        }
        if rec.u_opt is not None:
            frame["u_opt"] = [rec.u_opt.u_main, rec.u_opt.u_rot]
        frame["u_applied"] = [rec.u_applied.u_main, rec.u_applied.u_rot]
        frame["agreement_so_far"] = rec.agreement_so_far
        frame["status"] = rec.status
        self.enqueue(frame)
        if not self.trial.running:
            self.finish_trial()

    def finish_trial(self) -> None:
        log = self.trial.finish()
        path = self.log_dir() / f"trial_{self.trial_count:02d}.json"
        save_log(log, path)
        self.trial_count += 1
        tm = trial_metrics(log, self.app_state.settings.resolved_cost())
        self.enqueue(
            {
                "type": "trial_end",
                "outcome": {"status": log.outcome.status, "steps": log.outcome.steps},
                "metrics": {
                    "time": tm.time_s,
                    "path_length": tm.path_length_m,
                    "total_cost": tm.total_cost,
                },
            }
        )
        self.trial = None

    async def _tick_loop(self) -> None:
        # Wall-clock cadence; simulated time still advances exactly dt per
        # tick, so scheduling jitter never distorts the physics.
        period = self.app_state.settings.world.dt
        next_deadline = time.monotonic() + period
        while self.trial is not None and self.trial.running:
            delay = next_deadline - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            next_deadline += period
            self.tick_once(self.mailbox.read(time.monotonic()))

    def shutdown(self) -> None:
        if self.ticker is not None:
            self.ticker.cancel()
        if self.trial is not None and self.trial.running:
            # client vanished mid-trial: close out the recording anyway
            self.trial.abort()
            self.finish_trial()

    # -- inbound ----------------------------------------------------------

    async def handle(self, text: str) -> None:
        try:
            msg = json.loads(text)
        except json.JSONDecodeError:
            self.error("message is not valid JSON")
            return
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            self.error("message must be an object with a type field")
            return
        kind = msg["type"]
        if kind == "hello":
            name = msg.get("name")
            if isinstance(name, str) and name:
                self.name = name
            return
        if kind == "start":
            self.start_trial(msg)
            return
        if kind == "input":
            self.handle_input(msg)
            return
        if kind == "abort":
            if self.trial is not None and self.trial.running:
                if self.ticker is not None:
                    self.ticker.cancel()
                    self.ticker = None
                self.trial.abort()
                self.finish_trial()
            return
        if kind == "train":
            await self.handle_train(msg)
            return
        self.error(f"unknown message type {kind!r}")

    def handle_input(self, msg: dict) -> None:
        seq = msg.get("seq")
        u_main = msg.get("u_main")
        u_rot = msg.get("u_rot")
        if (
            not isinstance(seq, int)
            or not isinstance(u_main, (int, float))
            or not isinstance(u_rot, (int, float))
            or not (math.isfinite(u_main) and math.isfinite(u_rot))
        ):
            self.error("input requires integer seq and finite u_main, u_rot")
            return
        if self.trial is None or not self.trial.running:
            return  # stale input after trial end is routine, not an error
        raw = ControlInput(float(u_main), float(u_rot))
        if self.lockstep:
            self.tick_once(raw)
        else:
            self.mailbox.offer(seq, raw, time.monotonic())

    async def handle_train(self, msg: dict) -> None:
        ids = msg.get("session_ids")
        if not isinstance(ids, list) or not all(isinstance(s, str) for s in ids) or not ids:
            self.error("train requires a non-empty session_ids list")
            return
        app_state = self.app_state
        logs: list[TrialLog] = []
        for sid in ids:
            d = Path(app_state.settings.output_dir) / "sessions" / sid
            if not d.is_dir():
                self.error(f"unknown session {sid!r}")
                return
            logs.extend(load_log(p) for p in sorted(d.glob("trial_*.json")))
        try:
            model = await asyncio.to_thread(fit_model_from_logs, logs)
        except (DataError, SharedLanderError) as exc:
            self.error(f"training failed: {exc}")
            return
        model_id = app_state.new_model_id(self.name)
        audit = None
        try:
            sol = solve_dare(extract_linear(model), app_state.settings.resolved_cost())
            audit = {
                "residual": sol.residual,
                "closed_loop_radius": sol.closed_loop_radius,
                "gain": [[float(v) for v in row] for row in sol.gain],
                "u_ff": [float(v) for v in sol.u_ff],
            }
        except NonStabilizableError as exc:
            audit = {"stabilizable": False, "error": str(exc)}
        save_model(model, app_state.models_dir() / f"{model_id}.json", audit=audit)
        self.enqueue({"type": "model_ready", "model_id": model_id})


class _AppState:
    def __init__(self, settings: ServeSettings):
        self.settings = settings
        self.sessions: dict[str, Session] = {}
        self._session_counter = 0
        self._model_counter = 0
        self._solutions: dict[str, LqrSolution] = {}

    def models_dir(self) -> Path:
        d = Path(self.settings.output_dir) / "models"
        d.mkdir(parents=True, exist_ok=True)
        return d

    def new_session_id(self) -> str:
        self._session_counter += 1
        return f"sess_{self._session_counter:04d}"

    def new_model_id(self, name: str) -> str:
        self._model_counter += 1
        safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in name) or "pilot"
        return f"{safe}_{self._model_counter:03d}"

    def solve_model(self, model_id: str) -> LqrSolution:
        # cache per model_id; models are immutable once written
        if model_id not in self._solutions:
            path = self.models_dir() / f"{model_id}.json"
            if not path.exists():
                raise FileNotFoundError(path)
            model = load_model(path)
            self._solutions[model_id] = solve_dare(
                extract_linear(model), self.settings.resolved_cost()
            )
        return self._solutions[model_id]


def create_app(settings: ServeSettings | None = None) -> FastAPI:
    settings = settings or ServeSettings()
    state = _AppState(settings)
    app = FastAPI(title="sharedlander cockpit")
    app.state.lander = state

    @app.get("/api/models")
    def list_models():
        out = []
        for p in sorted(state.models_dir().glob("*.json")):
            out.append({"model_id": p.stem})
        return JSONResponse(out)

    @app.get("/api/sessions")
    def list_sessions():
        root = Path(settings.output_dir) / "sessions"
        out = []
        if root.is_dir():
            for d in sorted(p for p in root.iterdir() if p.is_dir()):
                live = state.sessions.get(d.name)
                out.append(
                    {
                        "session_id": d.name,
                        "name": live.name if live else None,
                        "trials": len(list(d.glob("trial_*.json"))),
                        "connected": live is not None,
                    }
                )
        return JSONResponse(out)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        session = Session(state.new_session_id(), ws, state)
        state.sessions[session.id] = session
        sender = asyncio.create_task(session.drain())
        try:
            while True:
                text = await ws.receive_text()
                await session.handle(text)
        except WebSocketDisconnect:
            pass
        finally:
            session.shutdown()
            # flush anything still queued (trial_end of an aborted trial)
            while not session.queue.empty():
                try:
                    await ws.send_text(session.queue.get_nowait())
                except Exception:
                    break
            sender.cancel()
            del state.sessions[session.id]

    if settings.static_dir and Path(settings.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=settings.static_dir, html=True), name="cockpit")
    return app


def serve(bind_address: str = "127.0.0.1:8000", settings: ServeSettings | None = None) -> None:
    """Run the cockpit service until interrupted."""
    import uvicorn

    host, _, port = bind_address.partition(":")
    uvicorn.run(create_app(settings), host=host or "127.0.0.1", port=int(port or 8000))
