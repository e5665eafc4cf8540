"""FastAPI service: health and layout lookups over HTTP, sessions over WebSocket."""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from pydantic import ValidationError

from .. import __version__
from ..errors import IncompleteSessionError, SessionError
from ..pressure import PressureImage
from ..touch import KeyEvent, TouchEngine, layout_to_dict, qwerty_layout, score_typing
from .models import (AckMsg, ConfigMsg, ErrorMsg, EventsMsg, FrameMsg, TranscriptMsg)


def rasterize_touches(touches, width: int, height: int, sigma: float) -> PressureImage:
    """Render sparse touch spots as Gaussian blobs on a dense grid."""
    grid = np.zeros((height, width))
    if touches:
        ys = np.arange(height, dtype=np.float64)[:, None]
        xs = np.arange(width, dtype=np.float64)[None, :]
        for t in touches:
            grid += t.pressure * np.exp(-(((xs - t.x) ** 2) + ((ys - t.y) ** 2))
                                        / (2.0 * sigma * sigma))
    return PressureImage(grid)


class _Session:
    """Per-connection state: engine, config, and the running key event log."""

    def __init__(self, cfg: ConfigMsg):
        self.cfg = cfg
        layout = qwerty_layout() if cfg.layout == "qwerty" else None
        if cfg.layout not in (None, "qwerty"):
            raise ValueError(f"unknown layout {cfg.layout!r}")
        self.engine = TouchEngine(layout=layout, debounce_frames=cfg.debounce_frames,
                                  threshold=cfg.threshold, min_distance=cfg.min_distance,
                                  association_radius=cfg.association_radius)
        self.key_log: list[KeyEvent] = []


def _dump(msg) -> str:
    return json.dumps(msg.model_dump(), sort_keys=True)


def create_app() -> FastAPI:
    """Build the service app; state lives per WebSocket connection."""
    app = FastAPI(title="pressense", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "service": "pressense", "version": __version__}

    @app.get("/layouts")
    def layouts() -> dict:
        return {"layouts": [layout_to_dict(qwerty_layout())]}

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        session: _Session | None = None
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(_dump(ErrorMsg(session="", code="bad_json",
                                                      message="message is not valid JSON")))
                    await ws.close()
                    return
                if not isinstance(obj, dict):
                    await ws.send_text(_dump(ErrorMsg(session="", code="bad_json",
                                                      message="message must be a JSON object")))
                    await ws.close()
                    return

                sid = str(obj.get("session", ""))
                mtype = obj.get("type")
                if session is None:
                    # protocol: the first message must configure the session
                    if mtype != "config":
                        await ws.send_text(_dump(ErrorMsg(
                            session=sid, code="protocol",
                            message="first message must be 'config'")))
                        await ws.close()
                        return
                    try:
                        cfg = ConfigMsg(**obj)
                        session = _Session(cfg)
                    except (ValidationError, ValueError) as exc:
                        await ws.send_text(_dump(ErrorMsg(session=sid, code="bad_config",
                                                          message=str(exc))))
                        await ws.close()
                        return
                    await ws.send_text(_dump(AckMsg(
                        session=cfg.session, mode=cfg.mode, frame_rate=cfg.frame_rate,
                        layout=cfg.layout, debounce_frames=cfg.debounce_frames,
                        threshold=cfg.threshold, grid_width=cfg.grid_width,
                        grid_height=cfg.grid_height)))
                    continue

                if mtype == "frame":
                    try:
                        frame = FrameMsg(**obj)
                        if frame.pressure is not None:
                            arr = np.asarray(frame.pressure.data, dtype=np.float64)
                            img = PressureImage(arr.reshape(frame.pressure.height,
                                                            frame.pressure.width))
                        else:
                            img = rasterize_touches(frame.touches, session.cfg.grid_width,
                                                    session.cfg.grid_height,
                                                    session.cfg.blob_sigma)
                    except (ValidationError, ValueError) as exc:
                        await ws.send_text(_dump(ErrorMsg(session=sid, code="bad_frame",
                                                          message=str(exc))))
                        continue
                    n = session.engine.frame_count
                    try:
                        touch_events, key_events, strokes = session.engine.step_frame(img)
                    except SessionError as exc:
                        await ws.send_text(_dump(ErrorMsg(session=sid, code="bad_frame",
                                                          message=str(exc))))
                        continue
                    session.key_log.extend(key_events)

                    mode = session.cfg.mode
                    msg = EventsMsg(
                        session=session.cfg.session, frame_index=n,
                        touch_events=[asdict(e) for e in touch_events],
                        key_events=([asdict(e) for e in key_events]
                                    if mode in ("keyboard", "raw-events") else []),
                        strokes=([asdict(s) for s in strokes]
                                 if mode in ("drawing", "raw-events") else []))
                    await ws.send_text(_dump(msg))

                    if mode == "keyboard" and any(
                            e.kind == "down" and e.key == "Enter" for e in key_events):
                        await ws.send_text(_dump(_transcript(session)))
                        session.key_log.clear()
                elif mtype == "config":
                    await ws.send_text(_dump(ErrorMsg(session=sid, code="protocol",
                                                      message="session already configured")))
                else:
                    await ws.send_text(_dump(ErrorMsg(session=sid, code="unknown_type",
                                                      message=f"unknown message type {mtype!r}")))
        except WebSocketDisconnect:
            return

    return app


def _transcript(session: _Session) -> TranscriptMsg:
    reference = session.cfg.reference
    try:
        transcript, score = score_typing(session.key_log, reference or "",
                                         session.cfg.frame_rate)
    except IncompleteSessionError:  # defensive: caller checked for Enter
        raise
    if reference is None:
        return TranscriptMsg(session=session.cfg.session, typed=transcript.typed,
                             reference=None, elapsed_s=transcript.elapsed_s,
                             wpm=score.wpm, net_wpm=None, errors=None)
    return TranscriptMsg(session=session.cfg.session, typed=transcript.typed,
                         reference=reference, elapsed_s=transcript.elapsed_s,
                         wpm=score.wpm, net_wpm=score.net_wpm, errors=score.errors)


app = create_app()
