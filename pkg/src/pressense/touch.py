"""Touch event pipeline: key layouts, debounced press tracking, typing scores."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import IncompleteSessionError, SessionError
from .geometry import find_peaks
from .metrics import TypingTranscript, WpmScore, net_wpm
from .pressure import CONTACT_THRESHOLD_KPA, DEFAULT_P_HIGH_KPA, PressureImage


@dataclass(frozen=True)
class Key:
    """One key: label plus its rectangle (origin at top-left, half-open extents)."""

    label: str
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        if not self.label:
            raise ValueError("key label must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("key extents must be positive")

    def contains(self, x: float, y: float) -> bool:
        return self.x <= x < self.x + self.width and self.y <= y < self.y + self.height


@dataclass(frozen=True)
class KeyLayout:
    """A named set of non-overlapping keys."""

    name: str
    keys: tuple[Key, ...]

    def __post_init__(self):
        labels = [k.label for k in self.keys]
        if len(set(labels)) != len(labels):
            raise ValueError("key labels must be unique")
        for i, a in enumerate(self.keys):
            for b in self.keys[i + 1:]:
                if (a.x < b.x + b.width and b.x < a.x + a.width
                        and a.y < b.y + b.height and b.y < a.y + a.height):
                    raise ValueError(f"keys {a.label!r} and {b.label!r} overlap")


def hit_test(layout: KeyLayout, x: float, y: float) -> str | None:
    """The label of the key containing (x, y), or None outside every key."""
    for key in layout.keys:
        if key.contains(x, y):
            return key.label
    return None


def layout_to_dict(layout: KeyLayout) -> dict:
    return {"name": layout.name,
            "keys": [{"label": k.label, "x": k.x, "y": k.y,
                      "width": k.width, "height": k.height} for k in layout.keys]}


def layout_from_dict(obj: dict) -> KeyLayout:
    keys = tuple(Key(label=k["label"], x=k["x"], y=k["y"],
                     width=k["width"], height=k["height"]) for k in obj["keys"])
    return KeyLayout(name=obj["name"], keys=keys)


def qwerty_layout() -> KeyLayout:
    """The bundled QWERTY layout sized for the default 105x185 sensor grid."""
    text = resources.files("pressense").joinpath("data/qwerty.json").read_text("utf-8")
    return layout_from_dict(json.loads(text))


def width_map(pressure: float, min_width: float = 1.0, max_width: float = 12.0,
              p_low: float = CONTACT_THRESHOLD_KPA,
              p_high: float = DEFAULT_P_HIGH_KPA) -> float:
    """Stroke width linear in pressure over [p_low, p_high], clamped at the ends."""
    if not (min_width <= max_width) or not (p_low < p_high):
        raise ValueError("bad width map range")
    t = (pressure - p_low) / (p_high - p_low)
    return min_width + (max_width - min_width) * float(np.clip(t, 0.0, 1.0))


@dataclass(frozen=True)
class TouchEvent:
    """A debounced contact transition."""

    kind: str          # "down" or "up"
    track_id: int
    frame: int
    x: float
    y: float
    pressure: float


@dataclass(frozen=True)
class KeyEvent:
    """A key transition derived from a touch event landing on a key."""

    kind: str          # "down" or "up"
    key: str
    frame: int
    x: float
    y: float


@dataclass(frozen=True)
class StrokeSample:
    """One point of an active stroke, width mapped from pressure."""

    track_id: int
    frame: int
    x: float
    y: float
    pressure: float
    width: float


# track lifecycle states
_PENDING_DOWN = "pending_down"
_DOWN = "down"
_PENDING_UP = "pending_up"


@dataclass
class _Track:
    track_id: int
    state: str
    x: float
    y: float
    pressure: float
    count: int = 1     # consecutive hits (pending_down) or misses (pending_up)
    key: str | None = None


class TouchEngine:
    """Streaming debounced touch tracker over successive pressure frames.

    A new contact must persist for ``debounce_frames`` consecutive frames
    before its key-down fires; a release must persist equally long before the
    key-up fires, so single-frame gaps never split a press.  Peaks are
    associated to existing tracks by nearest neighbor within
    ``association_radius`` pixels.
    """

    def __init__(self, layout: KeyLayout | None = None, debounce_frames: int = 2,
                 threshold: float = CONTACT_THRESHOLD_KPA, min_distance: float = 4.0,
                 association_radius: float = 15.0,
                 min_stroke_width: float = 1.0, max_stroke_width: float = 12.0,
                 width_p_high: float = DEFAULT_P_HIGH_KPA):
        if debounce_frames < 1:
            raise ValueError("debounce_frames must be at least 1")
        if not (threshold > 0):
            raise ValueError("threshold must be positive")
        if not (association_radius > 0):
            raise ValueError("association_radius must be positive")
        self.layout = layout
        self.debounce_frames = debounce_frames
        self.threshold = threshold
        self.min_distance = min_distance
        self.association_radius = association_radius
        self.min_stroke_width = min_stroke_width
        self.max_stroke_width = max_stroke_width
        self.width_p_high = width_p_high
        self.frame_count = 0
        self._dims: tuple[int, int] | None = None
        self._tracks: dict[int, _Track] = {}
        self._next_track = 0

    def _width(self, pressure: float) -> float:
        return width_map(pressure, self.min_stroke_width, self.max_stroke_width,
                         self.threshold, self.width_p_high)

    def step_frame(self, frame: PressureImage
                   ) -> tuple[list[TouchEvent], list[KeyEvent], list[StrokeSample]]:
        """Consume one frame; returns (touch events, key events, stroke samples).

        Frames must keep the dimensions of the first frame seen.
        """
        if self._dims is None:
            self._dims = (frame.height, frame.width)
        elif self._dims != (frame.height, frame.width):
            raise SessionError(f"frame dimensions changed from {self._dims} "
                               f"to {(frame.height, frame.width)}")
        n = self.frame_count
        peaks = find_peaks(frame, self.threshold, self.min_distance)

        # greedy nearest-neighbor association of peaks to live tracks
        pairs = []
        for tid, tr in self._tracks.items():
            for pi, pk in enumerate(peaks):
                d = ((tr.x - pk.x) ** 2 + (tr.y - pk.y) ** 2) ** 0.5
                if d <= self.association_radius:
                    pairs.append((d, tid, pi))
        pairs.sort()
        assigned_tracks: dict[int, int] = {}
        used_peaks: set[int] = set()
        for d, tid, pi in pairs:
            if tid in assigned_tracks or pi in used_peaks:
                continue
            assigned_tracks[tid] = pi
            used_peaks.add(pi)

        touch_events: list[TouchEvent] = []
        key_events: list[KeyEvent] = []
        strokes: list[StrokeSample] = []

        def emit_down(tr: _Track):
            touch_events.append(TouchEvent("down", tr.track_id, n, tr.x, tr.y, tr.pressure))
            if self.layout is not None:
                # key assignment is fixed at the down position
                tr.key = hit_test(self.layout, tr.x, tr.y)
                if tr.key is not None:
                    key_events.append(KeyEvent("down", tr.key, n, tr.x, tr.y))
            strokes.append(StrokeSample(tr.track_id, n, tr.x, tr.y, tr.pressure,
                                        self._width(tr.pressure)))

        for tid in list(self._tracks):
            tr = self._tracks[tid]
            pi = assigned_tracks.get(tid)
            if pi is not None:
                pk = peaks[pi]
                tr.x, tr.y, tr.pressure = pk.x, pk.y, pk.peak_pressure
                if tr.state == _PENDING_DOWN:
                    tr.count += 1
                    if tr.count >= self.debounce_frames:
                        tr.state = _DOWN
                        emit_down(tr)
                elif tr.state == _PENDING_UP:
                    # the gap healed; the press never ended
                    tr.state = _DOWN
                    tr.count = 0
                    strokes.append(StrokeSample(tid, n, tr.x, tr.y, tr.pressure,
                                                self._width(tr.pressure)))
                else:
                    strokes.append(StrokeSample(tid, n, tr.x, tr.y, tr.pressure,
                                                self._width(tr.pressure)))
            else:
                if tr.state == _PENDING_DOWN:
                    del self._tracks[tid]  # never stabilized; no events
                elif tr.state == _DOWN:
                    tr.state = _PENDING_UP
                    tr.count = 1
                    if self.debounce_frames == 1:
                        self._finish(tr, n, touch_events, key_events)
                else:
                    tr.count += 1
                    if tr.count >= self.debounce_frames:
                        self._finish(tr, n, touch_events, key_events)

        for pi, pk in enumerate(peaks):
            if pi in used_peaks:
                continue
            tr = _Track(track_id=self._next_track, state=_PENDING_DOWN,
                        x=pk.x, y=pk.y, pressure=pk.peak_pressure)
            self._next_track += 1
            self._tracks[tr.track_id] = tr
            if tr.count >= self.debounce_frames:
                tr.state = _DOWN
                emit_down(tr)

        self.frame_count += 1
        return touch_events, key_events, strokes

    def _finish(self, tr: _Track, n: int, touch_events: list[TouchEvent],
                key_events: list[KeyEvent]) -> None:
        touch_events.append(TouchEvent("up", tr.track_id, n, tr.x, tr.y, tr.pressure))
        if tr.key is not None:
            key_events.append(KeyEvent("up", tr.key, n, tr.x, tr.y))
        del self._tracks[tr.track_id]


def typed_text(key_events: list[KeyEvent]) -> str:
    """Fold key-down events into text: Space and Backspace act, Enter stops,
    other multi-character labels are ignored."""
    out: list[str] = []
    for ev in key_events:
        if ev.kind != "down":
            continue
        if ev.key == "Enter":
            break
        if ev.key == "Space":
            out.append(" ")
        elif ev.key == "Backspace":
            if out:
                out.pop()
        elif len(ev.key) == 1:
            out.append(ev.key)
    return "".join(out)


def score_typing(key_events: list[KeyEvent], reference: str,
                 frame_rate: float) -> tuple[TypingTranscript, WpmScore]:
    """Score a keyboard session against its reference sentence.

    Time runs from the first key-down to the Enter key-down; a session with
    no Enter press raises IncompleteSessionError.
    """
    if not (frame_rate > 0):
        raise ValueError("frame_rate must be positive")
    downs = [ev for ev in key_events if ev.kind == "down"]
    enter = next((ev for ev in downs if ev.key == "Enter"), None)
    if enter is None:
        raise IncompleteSessionError("typing session has no Enter press")
    first = downs[0]
    elapsed = (enter.frame - first.frame) / frame_rate
    if elapsed <= 0:
        elapsed = 1.0 / frame_rate  # single-frame session: charge one frame
    transcript = TypingTranscript(reference=reference, typed=typed_text(key_events),
                                  elapsed_s=elapsed)
    return transcript, net_wpm(transcript)
