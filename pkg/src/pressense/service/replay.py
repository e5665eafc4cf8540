"""Offline record playback: run streams through the model and the event engine."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..contact import ContactLabel
from ..errors import IncompleteSessionError
from ..metrics import (EvaluationReport, FrameEvaluation, evaluate_frames, report_to_dict)
from ..pressure import BinSpec, PressureImage, bin_representatives
from ..tinynet.model import ModelConfig, predict_batch
from ..touch import KeyEvent, StrokeSample, TouchEngine, TouchEvent, qwerty_layout, score_typing


def _estimates(records, params, bins: BinSpec) -> list[tuple[PressureImage, ContactLabel]]:
    """Model estimates (decoded pressure, thresholded label) for each record."""
    feats = []
    for rec in records:
        if rec.features is None:
            raise ValueError(f"record {rec.session_id}#{rec.frame_index} has no features "
                             "to run the model on")
        feats.append(rec.features)
    x = np.stack(feats)
    probs, contact, _ = predict_batch(params, x)
    est_pressure = probs @ bin_representatives(bins)
    out = []
    for i in range(len(records)):
        fingers = tuple(int(v >= 0.5) for v in contact[i, :5])
        force = int(contact[i, 5] >= 0.5) if any(fingers) else -1
        out.append((PressureImage(est_pressure[i]), ContactLabel(fingers, force)))
    return out


def evaluate_records(records, params=None, bins: BinSpec | None = None,
                     threshold: float = 1.0, iou_mode: str = "per_frame"
                     ) -> EvaluationReport:
    """Score records against a model's estimates.

    Without parameters this scores the zero guesser: an estimate of no
    pressure and no contact everywhere, the natural floor for every metric.
    """
    if len(records) == 0:
        raise ValueError("no records to evaluate")
    frames: list[FrameEvaluation] = []
    if params is not None:
        if bins is None:
            raise ValueError("model evaluation needs the checkpoint's bin spec")
        ests = _estimates(records, params, bins)
    else:
        h, w = _grid_dims(records)
        zero = PressureImage.zeros(w, h)
        ests = [(zero, ContactLabel.no_contact())] * len(records)
    for rec, (est_p, est_l) in zip(records, ests):
        frames.append(FrameEvaluation(
            frame_id=f"{rec.session_id}#{rec.frame_index}",
            gt_label=rec.label, est_pressure=est_p,
            gt_pressure=rec.pressure, est_label=est_l))
    return evaluate_frames(frames, threshold=threshold, iou_mode=iou_mode)


def _grid_dims(records) -> tuple[int, int]:
    for rec in records:
        if rec.pressure is not None:
            return rec.pressure.height, rec.pressure.width
        if rec.features is not None:
            return rec.features.shape[0], rec.features.shape[1]
    raise ValueError("records carry neither pressure nor features")


@dataclass(frozen=True)
class ReplaySettings:
    """Engine and scoring settings for a replay run."""

    mode: str = "raw-events"
    layout: str | None = "qwerty"
    debounce_frames: int = 2
    threshold: float = 1.0
    min_distance: float = 4.0
    association_radius: float = 15.0
    frame_rate: float = 15.0
    iou_mode: str = "per_frame"
    reference: str | None = None

    def __post_init__(self):
        if self.mode not in ("keyboard", "drawing", "raw-events"):
            raise ValueError("mode must be keyboard, drawing or raw-events")


@dataclass
class ReplayResult:
    """Everything a replay produced: events per session and the overall report."""

    report: dict
    touch_events: list[TouchEvent] = field(default_factory=list)
    key_events: list[KeyEvent] = field(default_factory=list)
    strokes: list[StrokeSample] = field(default_factory=list)
    transcripts: list[dict] = field(default_factory=list)


def replay_records(records, settings: ReplaySettings, params=None,
                   bins: BinSpec | None = None) -> ReplayResult:
    """Stream records through the touch engine, session by session.

    With model parameters the engine consumes the model's decoded pressure
    estimates; otherwise it consumes the recorded pressure, which only
    fully-labeled streams have.
    """
    if len(records) == 0:
        raise ValueError("no records to replay")
    if params is None:
        missing = [r for r in records if r.pressure is None]
        if missing:
            raise ValueError("stream has records without pressure; replaying a "
                             "weak-domain stream needs a model checkpoint")
        stream = [r.pressure for r in records]
        ests = None
    else:
        if bins is None:
            raise ValueError("model replay needs the checkpoint's bin spec")
        ests = _estimates(records, params, bins)
        stream = [p for p, _ in ests]

    layout = qwerty_layout() if settings.layout == "qwerty" else None
    if settings.layout not in (None, "qwerty"):
        raise ValueError(f"unknown layout {settings.layout!r}")

    result = ReplayResult(report={})
    frames: list[FrameEvaluation] = []
    engine: TouchEngine | None = None
    current_session: str | None = None
    session_keys: list[KeyEvent] = []

    def close_session():
        if current_session is None or settings.mode != "keyboard":
            return
        try:
            transcript, score = score_typing(session_keys, settings.reference or "",
                                             settings.frame_rate)
        except IncompleteSessionError:
            return
        entry = {"session": current_session, "typed": transcript.typed,
                 "elapsed_s": transcript.elapsed_s, "wpm": score.wpm}
        if settings.reference is not None:
            entry["net_wpm"] = score.net_wpm
            entry["errors"] = score.errors
        result.transcripts.append(entry)

    for i, rec in enumerate(records):
        if rec.session_id != current_session:
            close_session()
            current_session = rec.session_id
            session_keys = []
            engine = TouchEngine(layout=layout, debounce_frames=settings.debounce_frames,
                                 threshold=settings.threshold,
                                 min_distance=settings.min_distance,
                                 association_radius=settings.association_radius)
        touch_events, key_events, strokes = engine.step_frame(stream[i])
        result.touch_events.extend(touch_events)
        result.key_events.extend(key_events)
        result.strokes.extend(strokes)
        session_keys.extend(key_events)
        frames.append(FrameEvaluation(
            frame_id=f"{rec.session_id}#{rec.frame_index}",
            gt_label=rec.label, est_pressure=stream[i],
            gt_pressure=rec.pressure,
            est_label=ests[i][1] if ests is not None else None))
    close_session()

    report = evaluate_frames(frames, threshold=settings.threshold,
                             iou_mode=settings.iou_mode)
    result.report = {
        "n_frames": len(frames),
        "n_sessions": len({r.session_id for r in records}),
        "metrics": report_to_dict(report),
        "events": {"touch_events": len(result.touch_events),
                   "key_events": len(result.key_events),
                   "strokes": len(result.strokes)},
    }
    if result.transcripts:
        result.report["transcripts"] = result.transcripts
    return result
