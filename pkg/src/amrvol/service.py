"""Frame-streaming render service: mutable viewer state over HTTP, frames
over a websocket.

State lives behind ``POST /state`` (partial updates of camera matrices,
transfer function, render settings); every accepted mutation bumps a
generation counter and schedules a render.  Scheduling is latest-wins: at
most one render is in flight, and when it finishes the loop renders the
*newest* state if the generation moved on -- intermediate states are never
rendered.  Rendering happens on a worker thread so state mutations never
wait on a frame.

Frame protocol (one websocket binary message per channel): a 28-byte
little-endian header ``<QIIIIf`` of (generation, channel, width, height,
encoding, frame_time_ms) followed by the payload; encoding 0 is raw RGBA8
rows top-to-bottom, encoding 1 is PNG.  A slow client never queues more
than one undelivered frame: older pending frames are dropped, and the
generations a client observes increase monotonically.
"""

from __future__ import annotations

import asyncio
import copy
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect

from . import io_formats
from .bricks import BrickStructure
from .camera import Channel, emit_row_major, ingest_row_major, inverse_view_proj
from .render import RenderSettings, Scene, render_frame
from .transfer import TransferFunction

HEADER = struct.Struct("<QIIIIf")
ENCODINGS = {"raw": 0, "png": 1}


@dataclass
class ChannelState:
    view: np.ndarray
    proj: np.ndarray
    width: int
    height: int


@dataclass
class ViewerState:
    channels: list[ChannelState]
    tf: TransferFunction
    settings: RenderSettings
    generation: int = 0


@dataclass
class FramePacket:
    generation: int
    channel: int
    width: int
    height: int
    frame_time_ms: float
    rgba: bytes

    def encode(self, encoding: int) -> bytes:
        if encoding == ENCODINGS["png"]:
            img = np.frombuffer(self.rgba, dtype=np.uint8).reshape(
                self.height, self.width, 4)
            payload = io_formats.png_bytes(img)
        else:
            payload = self.rgba
        head = HEADER.pack(self.generation, self.channel, self.width,
                           self.height, encoding, self.frame_time_ms)
        return head + payload


def state_to_json(state: ViewerState) -> dict:
    s = state.settings
    return {
        "generation": state.generation,
        "channels": [
            {
                "view": emit_row_major(c.view),
                "proj": emit_row_major(c.proj),
                "width": c.width,
                "height": c.height,
            }
            for c in state.channels
        ],
        "transfer_function": {
            "domain": [state.tf.domain[0], state.tf.domain[1]],
            "opacity_scale": state.tf.opacity_scale,
            "entries": [[float(x) for x in row] for row in state.tf.entries],
        },
        "settings": {
            "dt": s.dt,
            "volume": s.volume,
            "iso": s.iso,
            "slice": s.slice,
            "iso_value": s.iso_value,
            "slice_normal": list(s.slice_normal),
            "slice_offset": s.slice_offset,
            "background": list(s.background),
            "termination_alpha": s.termination_alpha,
        },
    }


class StateError(ValueError):
    """A semantically invalid state update (HTTP 422)."""


def _parse_channels(doc) -> list[ChannelState]:
    channels = []
    for entry in doc:
        try:
            view = ingest_row_major(entry["view"])
            proj = ingest_row_major(entry["proj"])
            width = int(entry["width"])
            height = int(entry["height"])
        except (KeyError, TypeError, ValueError) as e:
            raise StateError(f"malformed channel: {e}")
        if width <= 0 or height <= 0:
            raise StateError("channel dimensions must be positive")
        try:
            inverse_view_proj(view, proj)
        except ValueError as e:
            raise StateError(str(e))
        channels.append(ChannelState(view, proj, width, height))
    if not channels or len(channels) > 2:
        raise StateError("need 1 (mono) or 2 (stereo) channels")
    return channels


def _parse_tf(doc) -> TransferFunction:
    try:
        return TransferFunction(doc["entries"], tuple(doc["domain"]),
                                doc.get("opacity_scale", 1.0))
    except (KeyError, TypeError, ValueError) as e:
        raise StateError(f"invalid transfer function: {e}")


def _merge_settings(current: RenderSettings, doc) -> RenderSettings:
    fields = {
        "dt": float, "volume": bool, "iso": bool, "slice": bool,
        "iso_value": float, "slice_offset": float,
        "termination_alpha": float,
    }
    kw = {
        "dt": current.dt, "volume": current.volume, "iso": current.iso,
        "slice": current.slice, "iso_value": current.iso_value,
        "slice_normal": current.slice_normal,
        "slice_offset": current.slice_offset,
        "background": current.background,
        "termination_alpha": current.termination_alpha,
        "culling": current.culling,
    }
    for key, cast in fields.items():
        if key in doc:
            kw[key] = cast(doc[key])
    if "slice_normal" in doc:
        kw["slice_normal"] = tuple(float(x) for x in doc["slice_normal"])
    if "background" in doc:
        kw["background"] = tuple(float(x) for x in doc["background"])
    try:
        return RenderSettings(**kw)
    except (TypeError, ValueError) as e:
        raise StateError(f"invalid settings: {e}")


class RenderService:
    """Owns the dataset, the viewer state, and the latest-wins render loop."""

    def __init__(self, field, structure: BrickStructure, state: ViewerState,
                 dataset_stats: dict):
        self.field = field
        self.structure = structure
        self.state = state
        self.dataset_stats = dataset_stats
        self.lock = asyncio.Lock()
        self.wake = asyncio.Event()
        self.subscribers: set[asyncio.Queue] = set()
        self.latest: Optional[tuple[int, list[FramePacket]]] = None
        self.last_rendered = -1
        self._task: Optional[asyncio.Task] = None

    def start(self):
        self.wake.set()  # render the initial state once
        self._task = asyncio.create_task(self._render_loop())

    async def stop(self):
        if self._task is not None:
            self._task.cancel()
            try:
                await self._task
            except asyncio.CancelledError:
                pass

    async def mutate(self, doc: dict) -> int:
        async with self.lock:
            state = self.state
            channels = state.channels
            tf = state.tf
            settings = state.settings
            if "channels" in doc:
                channels = _parse_channels(doc["channels"])
            if "transfer_function" in doc:
                tf = _parse_tf(doc["transfer_function"])
            if "settings" in doc:
                settings = _merge_settings(settings, doc["settings"])
            state.channels = channels
            state.tf = tf
            state.settings = settings
            state.generation += 1
            gen = state.generation
        self.wake.set()
        return gen

    async def snapshot(self) -> ViewerState:
        async with self.lock:
            return ViewerState(
                channels=[ChannelState(c.view.copy(), c.proj.copy(), c.width, c.height)
                          for c in self.state.channels],
                tf=self.state.tf,  # immutable after construction
                settings=copy.copy(self.state.settings),
                generation=self.state.generation,
            )

    def render_snapshot(self, snap: ViewerState) -> list[FramePacket]:
        """Render one frame from a state snapshot (worker thread)."""
        channels = [Channel(view=c.view, proj=c.proj, width=c.width, height=c.height)
                    for c in snap.channels]
        scene = Scene(self.field, self.structure, snap.tf)
        stats = render_frame(channels, scene, snap.settings)
        return [
            FramePacket(
                generation=snap.generation,
                channel=i,
                width=ch.width,
                height=ch.height,
                frame_time_ms=stats[i].frame_time_ms,
                rgba=ch.framebuffer.tobytes(),
            )
            for i, ch in enumerate(channels)
        ]

    async def _render_loop(self):
        while True:
            await self.wake.wait()
            self.wake.clear()
            while True:
                snap = await self.snapshot()
                if snap.generation <= self.last_rendered:
                    break
                frames = await asyncio.to_thread(self.render_snapshot, snap)
                self.last_rendered = snap.generation
                self.latest = (snap.generation, frames)
                self._broadcast(frames)

    def _broadcast(self, frames: list[FramePacket]):
        for q in self.subscribers:
            _offer(q, frames)


def _offer(q: asyncio.Queue, item):
    # keep at most one undelivered frame per client: drop the older one
    while True:
        try:
            q.put_nowait(item)
            return
        except asyncio.QueueFull:
            try:
                q.get_nowait()
            except asyncio.QueueEmpty:
                pass


def dataset_statistics(field, structure, size_on_disc: int) -> dict:
    return {
        "cells": len(field),
        "bricks": len(structure.bricks),
        "abrs": len(structure.abrs),
        "size_on_disc": size_on_disc,
        "value_range": list(field.value_range),
    }


def initial_state(field, width: int, height: int, stereo: Optional[float],
                  camera_spec=None, tf=None) -> ViewerState:
    from .cli import default_camera, default_tf, _make_channels

    spec = camera_spec if camera_spec is not None else default_camera(field)
    chans = _make_channels(spec, width, height, stereo)
    return ViewerState(
        channels=[ChannelState(c.view, c.proj, c.width, c.height) for c in chans],
        tf=tf if tf is not None else default_tf(field),
        settings=RenderSettings(),
    )


def create_app(config=None, *, field=None, width: int = 640, height: int = 480,
               stereo: Optional[float] = None, camera_spec=None, tf=None,
               frontend_dir=None) -> FastAPI:
    """Build the service app; dataset comes from a config path or in-memory."""
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if field is not None:
            f = field
            size = 20 * len(f)  # canonical binary footprint of in-memory data
        else:
            cfg = await asyncio.to_thread(io_formats.load_config, config)
            f = await asyncio.to_thread(io_formats.load_field, cfg)
            size = io_formats.dataset_size_on_disc(cfg)
        structure = await asyncio.to_thread(BrickStructure.build, f)
        state = initial_state(f, width, height, stereo, camera_spec, tf)
        svc = RenderService(f, structure, state,
                            dataset_statistics(f, structure, size))
        app.state.service = svc
        svc.start()
        try:
            yield
        finally:
            await svc.stop()

    app = FastAPI(title="amrvol render service", lifespan=lifespan)
    app.state.service = None

    @app.get("/info")
    async def info():
        svc: RenderService = app.state.service
        if svc is None:
            return Response(status_code=503, content="dataset still loading")
        async with svc.lock:
            doc = {"dataset": svc.dataset_stats, "state": state_to_json(svc.state)}
        return doc

    @app.post("/state")
    async def post_state(request: Request):
        svc: RenderService = app.state.service
        if svc is None:
            return Response(status_code=503, content="dataset still loading")
        try:
            doc = json.loads(await request.body())
        except json.JSONDecodeError as e:
            return Response(status_code=400, content=f"malformed JSON: {e}")
        if not isinstance(doc, dict):
            return Response(status_code=400, content="state update must be an object")
        try:
            gen = await svc.mutate(doc)
        except StateError as e:
            return Response(status_code=422, content=str(e))
        return {"generation": gen}

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        svc: RenderService = app.state.service
        if svc is None:
            await ws.close(code=1013)
            return
        # subscribe message: optional encoding negotiation
        encoding = ENCODINGS["raw"]
        try:
            first = await ws.receive_text()
            requested = json.loads(first).get("encodings", [])
            for name in requested:
                if name in ENCODINGS:
                    encoding = ENCODINGS[name]
                    break
        except (json.JSONDecodeError, AttributeError):
            pass
        q: asyncio.Queue = asyncio.Queue(maxsize=1)
        svc.subscribers.add(q)
        if svc.latest is not None:
            _offer(q, svc.latest[1])
        try:
            while True:
                frames = await q.get()
                for packet in frames:
                    await ws.send_bytes(packet.encode(encoding))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            svc.subscribers.discard(q)

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="viewer")
    return app


def run(config, host: str = "127.0.0.1", port: int = 8707,
        width: int = 640, height: int = 480, stereo: Optional[float] = None):
    import uvicorn

    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(config, width=width, height=height, stereo=stereo,
                     frontend_dir=frontend if frontend.is_dir() else None)
    print(f"viewer service on http://{host}:{port}  (frames at ws://{host}:{port}/stream)")
    uvicorn.run(app, host=host, port=port, log_level="warning")
