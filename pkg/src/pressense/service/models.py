"""Wire message models for the streaming session protocol.

Every message is a JSON object with a ``type`` field ("frame", "events",
"transcript", "error", "config", "ack") and a ``session`` id.  Clients send
config first, then frames; the service answers every frame with exactly one
events message, in order.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, field_validator, model_validator

MESSAGE_TYPES = ("frame", "events", "transcript", "error", "config", "ack")

MODES = ("keyboard", "drawing", "raw-events")


class PressureGridMsg(BaseModel):
    """Dense row-major pressure payload."""

    width: int = Field(ge=1)
    height: int = Field(ge=1)
    data: list[float]

    @model_validator(mode="after")
    def _check_len(self):
        if len(self.data) != self.width * self.height:
            raise ValueError("data length must equal width * height")
        return self


class TouchSpotMsg(BaseModel):
    """Sparse alternative to a dense grid: one blob center with peak pressure."""

    x: float
    y: float
    pressure: float = Field(ge=0)


class ConfigMsg(BaseModel):
    """First client message: session setup."""

    type: Literal["config"]
    session: str
    mode: Literal["keyboard", "drawing", "raw-events"] = "keyboard"
    frame_rate: float = Field(default=15.0, gt=0)
    layout: str | None = "qwerty"
    reference: str | None = None
    debounce_frames: int = Field(default=2, ge=1)
    threshold: float = Field(default=1.0, gt=0)
    min_distance: float = Field(default=4.0, ge=1)
    association_radius: float = Field(default=15.0, gt=0)
    grid_width: int = Field(default=105, ge=4)
    grid_height: int = Field(default=185, ge=4)
    blob_sigma: float = Field(default=2.5, gt=0)


class FrameMsg(BaseModel):
    """One pressure frame, dense or sparse (exactly one payload present)."""

    type: Literal["frame"]
    session: str
    frame_index: int | None = None
    timestamp: float | None = None
    pressure: PressureGridMsg | None = None
    touches: list[TouchSpotMsg] | None = None

    @model_validator(mode="after")
    def _check_payload(self):
        if (self.pressure is None) == (self.touches is None):
            raise ValueError("frame needs exactly one of 'pressure' or 'touches'")
        return self


class AckMsg(BaseModel):
    """Server reply to config: the effective session settings."""

    type: Literal["ack"] = "ack"
    session: str
    mode: str
    frame_rate: float
    layout: str | None
    debounce_frames: int
    threshold: float
    grid_width: int
    grid_height: int


class EventsMsg(BaseModel):
    """Server reply to one frame: everything the pipeline emitted for it."""

    type: Literal["events"] = "events"
    session: str
    frame_index: int
    touch_events: list[dict] = Field(default_factory=list)
    key_events: list[dict] = Field(default_factory=list)
    strokes: list[dict] = Field(default_factory=list)


class TranscriptMsg(BaseModel):
    """Sent after an Enter press in keyboard mode: the scored sentence."""

    type: Literal["transcript"] = "transcript"
    session: str
    typed: str
    reference: str | None
    elapsed_s: float
    wpm: float
    net_wpm: float | None
    errors: int | None


class ErrorMsg(BaseModel):
    """Server-side rejection; ``code`` is machine-readable."""

    type: Literal["error"] = "error"
    session: str
    code: str
    message: str
