"""Synthetic data: prompted pressure sessions in two recording domains.

The fully-labeled domain renders press/release cycles with ground-truth
pressure images.  The weakly-labeled domain holds contact steady, carries no
pressure, and its feature maps are shifted (per-channel bias, different
appearance level, texture noise) so models fit on the full domain degrade
on it unless trained to be domain-invariant.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .contact import FINGER_NAMES, FORCE_HIGH, FORCE_LOW, FORCE_UNSPECIFIED, ContactLabel
from .errors import RecordParseError, RecordVersionError
from .pressure import CONTACT_THRESHOLD_KPA, PressureImage

FORCE_LEVELS = ("low", "high", "slide", "no_contact")

# the eight prompted fingertip combinations
FINGER_COMBOS: tuple[tuple[str, ...], ...] = (
    ("index",),
    ("thumb",),
    ("thumb", "index"),
    ("index", "middle"),
    ("middle",),
    ("ring",),
    ("pinky",),
    ("thumb", "index", "middle", "ring", "pinky"),
)

# canonical fingertip positions as (x, y) fractions of the grid
_CANONICAL_XY = {
    "thumb": (0.22, 0.62),
    "index": (0.36, 0.38),
    "middle": (0.52, 0.32),
    "ring": (0.68, 0.38),
    "pinky": (0.82, 0.50),
}

N_FEATURE_CHANNELS = 3


@dataclass(frozen=True)
class ActionPrompt:
    """One prompted action: which fingertips press and at what force level."""

    fingers: tuple[str, ...]
    force_level: str

    def __post_init__(self):
        if self.force_level not in FORCE_LEVELS:
            raise ValueError(f"unknown force level {self.force_level!r}")
        if len(self.fingers) == 0 or any(f not in FINGER_NAMES for f in self.fingers):
            raise ValueError("fingers must name at least one known fingertip")
        if len(set(self.fingers)) != len(self.fingers):
            raise ValueError("fingers must be unique")

    @property
    def label_force(self) -> int:
        if self.force_level == "low":
            return FORCE_LOW
        if self.force_level == "high":
            return FORCE_HIGH
        return FORCE_UNSPECIFIED

    @property
    def text(self) -> str:
        names = " and ".join(self.fingers)
        if self.force_level == "no_contact":
            return f"hover the {names} without touching"
        if self.force_level == "slide":
            return f"slide the {names} across the pad"
        return f"press the {names} at a {self.force_level} force"


def all_prompts() -> tuple[ActionPrompt, ...]:
    """The full prompt table: every finger combination at every force level."""
    return tuple(ActionPrompt(fingers=c, force_level=lv)
                 for c in FINGER_COMBOS for lv in FORCE_LEVELS)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic renderer and dataset generator."""

    width: int = 105
    height: int = 185
    frame_rate: float = 15.0
    seed: int = 0
    # blob shape, in pixels of the configured grid
    blob_sigma: float = 3.0
    blob_aspect: float = 1.4
    position_jitter: float = 0.03      # hand placement, fraction of grid size
    tremor_px: float = 0.3             # per-frame wobble
    slide_span: float = 0.25           # slide travel, fraction of grid width
    # force model
    force_low_n: float = 3.6
    force_high_n: float = 19.6
    force_spread: float = 0.2          # relative std of the total force
    share_jitter: float = 0.2          # per-finger share wobble
    force_to_pressure: float = 120.0   # peak kPa per (N / blob area px^2)
    # session structure
    prompts_per_session: int = 8
    cycles_per_prompt: int = 2
    frames_per_cycle: int = 12
    weak_frames_per_prompt: int = 12
    # feature map rendering
    pressure_scale: float = 30.0
    feature_noise: float = 0.02
    appearance_full: float = 0.2
    appearance_weak: float = 0.8
    weak_bias: float = 0.35
    weak_texture: float = 0.15

    def __post_init__(self):
        if self.width < 4 or self.height < 4:
            raise ValueError("grid must be at least 4x4")
        if not (self.frame_rate > 0):
            raise ValueError("frame_rate must be positive")
        if not (0 < self.force_low_n < self.force_high_n):
            raise ValueError("need 0 < force_low_n < force_high_n")


@dataclass(frozen=True)
class SessionRecord:
    """One recorded frame: identity, timing, domain, label, and payloads.

    ``pressure`` is present exactly for the fully-labeled domain.
    ``features`` is the model input rendered for the frame, shape
    (height, width, channels).
    """

    session_id: str
    participant_id: int
    frame_index: int
    timestamp: float
    domain: str
    label: ContactLabel
    prompt: str
    pressure: PressureImage | None = None
    features: np.ndarray | None = None

    def __post_init__(self):
        if self.domain not in ("full", "weak"):
            raise ValueError("domain must be 'full' or 'weak'")
        if (self.domain == "full") != (self.pressure is not None):
            raise ValueError("pressure must be present exactly for the full domain")
        if self.frame_index < 0 or not np.isfinite(self.timestamp):
            raise ValueError("bad frame index or timestamp")
        if self.features is not None:
            f = np.asarray(self.features, dtype=np.float64)
            if f.ndim != 3:
                raise ValueError("features must have shape (height, width, channels)")
            f = f.copy()
            f.flags.writeable = False
            object.__setattr__(self, "features", f)


@dataclass(frozen=True)
class SplitPlan:
    """Which participant ids record which split; train and test must not overlap."""

    full_train: tuple[int, ...]
    weak_train: tuple[int, ...]
    full_test: tuple[int, ...]
    weak_test: tuple[int, ...]

    def __post_init__(self):
        train = set(self.full_train) | set(self.weak_train)
        test = set(self.full_test) | set(self.weak_test)
        overlap = train & test
        if overlap:
            raise ValueError(f"participants in both train and test: {sorted(overlap)}")


@dataclass(frozen=True)
class DatasetSplits:
    """Generated record streams, one list per split."""

    full_train: list[SessionRecord]
    weak_train: list[SessionRecord]
    full_test: list[SessionRecord]
    weak_test: list[SessionRecord]


@dataclass
class _HandPose:
    """Per-segment draw of blob geometry shared across a prompt's frames."""

    centers: dict[str, tuple[float, float]]
    sigmas: dict[str, tuple[float, float]]
    shares: dict[str, float]
    total_force: float
    drift: tuple[float, float]


def _envelope(phase: float) -> float:
    """Raised-cosine press/hold/release profile on [0, 1): 0 at the ends, 1 mid-hold."""
    if phase < 0.25:
        return 0.5 * (1.0 - math.cos(math.pi * phase / 0.25))
    if phase < 0.75:
        return 1.0
    return 0.5 * (1.0 + math.cos(math.pi * (phase - 0.75) / 0.25))


def _draw_pose(prompt: ActionPrompt, config: SynthConfig, rng: np.random.Generator) -> _HandPose:
    centers = {}
    sigmas = {}
    shares = {}
    for name in prompt.fingers:
        fx, fy = _CANONICAL_XY[name]
        cx = fx * config.width + rng.normal(0.0, config.position_jitter * config.width)
        cy = fy * config.height + rng.normal(0.0, config.position_jitter * config.height)
        centers[name] = (cx, cy)
        sx = config.blob_sigma * rng.uniform(0.85, 1.15)
        sy = config.blob_sigma * config.blob_aspect * rng.uniform(0.85, 1.15)
        sigmas[name] = (sx, sy)
        shares[name] = rng.uniform(1.0 - config.share_jitter, 1.0 + config.share_jitter)

    total = sum(shares.values())
    shares = {k: v / total for k, v in shares.items()}

    if prompt.force_level == "high":
        mean = config.force_high_n
    elif prompt.force_level == "low":
        mean = config.force_low_n
    else:  # slide force is unspecified; draw between the two prompted levels
        mean = math.sqrt(config.force_low_n * config.force_high_n)
    total_force = max(0.2, rng.normal(mean, config.force_spread * mean))

    if prompt.force_level == "slide":
        angle = rng.uniform(0.0, 2.0 * math.pi)
        span = config.slide_span * config.width
        drift = (span * math.cos(angle), span * math.sin(angle))
    else:
        drift = (0.0, 0.0)
    return _HandPose(centers=centers, sigmas=sigmas, shares=shares,
                     total_force=total_force, drift=drift)


def _render_pose(pose: _HandPose, prompt: ActionPrompt, envelope: float, progress: float,
                 config: SynthConfig, rng: np.random.Generator) -> tuple[PressureImage, ContactLabel]:
    h, w = config.height, config.width
    grid = np.zeros((h, w))
    ys = np.arange(h, dtype=np.float64)[:, None]
    xs = np.arange(w, dtype=np.float64)[None, :]

    flags = [0, 0, 0, 0, 0]
    if prompt.force_level != "no_contact" and envelope > 0.0:
        for name in prompt.fingers:
            cx, cy = pose.centers[name]
            cx += pose.drift[0] * (progress - 0.5) + rng.normal(0.0, config.tremor_px)
            cy += pose.drift[1] * (progress - 0.5) + rng.normal(0.0, config.tremor_px)
            sx, sy = pose.sigmas[name]
            force = pose.total_force * pose.shares[name] * envelope
            peak = force * config.force_to_pressure / (2.0 * math.pi * sx * sy)
            grid += peak * np.exp(-(((xs - cx) ** 2) / (2 * sx * sx)
                                    + ((ys - cy) ** 2) / (2 * sy * sy)))
            # a fingertip counts as contacting when its own blob peaks past threshold
            if peak >= CONTACT_THRESHOLD_KPA:
                flags[FINGER_NAMES.index(name)] = 1

    force = prompt.label_force if any(flags) else FORCE_UNSPECIFIED
    return PressureImage(grid), ContactLabel(tuple(flags), force)


def render_frame(prompt: ActionPrompt, phase: float, config: SynthConfig,
                 rng: np.random.Generator) -> tuple[PressureImage, ContactLabel]:
    """Render one frame of a prompt at a phase in [0, 1) of its press cycle.

    The label's finger flags reflect what was actually rendered: a flag is set
    only when that fingertip's blob peak reaches the contact threshold, so
    press onset and release frames can be labeled no-contact.
    """
    if not (0.0 <= phase < 1.0 + 1e-9):
        raise ValueError("phase must lie in [0, 1)")
    pose = _draw_pose(prompt, config, rng)
    return _render_pose(pose, prompt, _envelope(phase), phase, config, rng)


def make_features(pressure: PressureImage, domain: str, config: SynthConfig,
                  rng: np.random.Generator) -> np.ndarray:
    """Render the 3-channel model input for a frame.

    Channels: scaled pressure, log-scaled pressure, appearance.  Weak-domain
    frames get a different appearance level plus a bias and texture noise on
    every channel: the domain shift the training losses must overcome.
    """
    if domain not in ("full", "weak"):
        raise ValueError("domain must be 'full' or 'weak'")
    p = pressure.data
    f0 = p / config.pressure_scale
    f1 = np.log1p(p) / math.log1p(config.pressure_scale)
    base = config.appearance_weak if domain == "weak" else config.appearance_full
    f2 = np.full_like(p, base)
    feats = np.stack([f0, f1, f2], axis=2)
    feats += rng.normal(0.0, config.feature_noise, feats.shape)
    if domain == "weak":
        feats += config.weak_bias
        feats += rng.normal(0.0, config.weak_texture, feats.shape)
    return feats


def _session_records(session_id: str, participant: int, domain: str,
                     config: SynthConfig, rng: np.random.Generator) -> list[SessionRecord]:
    prompts = all_prompts()
    n = min(config.prompts_per_session, len(prompts))
    chosen = [prompts[i] for i in rng.choice(len(prompts), size=n, replace=False)]

    records: list[SessionRecord] = []
    frame_index = 0
    for prompt in chosen:
        pose = _draw_pose(prompt, config, rng)
        if domain == "full":
            # full-domain participants press and release repeatedly
            total = config.cycles_per_prompt * config.frames_per_cycle
            for i in range(total):
                phase = (i % config.frames_per_cycle) / config.frames_per_cycle
                progress = i / max(total - 1, 1)
                img, label = _render_pose(pose, prompt, _envelope(phase), progress, config, rng)
                feats = make_features(img, domain, config, rng)
                records.append(SessionRecord(
                    session_id=session_id, participant_id=participant,
                    frame_index=frame_index, timestamp=frame_index / config.frame_rate,
                    domain=domain, label=label, prompt=prompt.text,
                    pressure=img, features=feats))
                frame_index += 1
        else:
            # weak-domain participants hold contact steady for the whole prompt
            total = config.weak_frames_per_prompt
            for i in range(total):
                progress = i / max(total - 1, 1)
                img, label = _render_pose(pose, prompt, 1.0, progress, config, rng)
                feats = make_features(img, domain, config, rng)
                records.append(SessionRecord(
                    session_id=session_id, participant_id=participant,
                    frame_index=frame_index, timestamp=frame_index / config.frame_rate,
                    domain=domain, label=label, prompt=prompt.text,
                    pressure=None, features=feats))
                frame_index += 1
    return records


def generate_dataset(config: SynthConfig, plan: SplitPlan,
                     sessions_per_participant: int = 1) -> DatasetSplits:
    """Generate all four record streams deterministically from config.seed."""
    if sessions_per_participant < 1:
        raise ValueError("sessions_per_participant must be at least 1")
    root = np.random.SeedSequence(config.seed)
    splits: dict[str, list[SessionRecord]] = {}
    members = (("full_train", "full", plan.full_train),
               ("weak_train", "weak", plan.weak_train),
               ("full_test", "full", plan.full_test),
               ("weak_test", "weak", plan.weak_test))
    # one child seed per session, spawned in a fixed order
    n_sessions = sum(len(p) for _, _, p in members) * sessions_per_participant
    children = iter(root.spawn(n_sessions))
    for split_name, domain, participants in members:
        records: list[SessionRecord] = []
        for pid in participants:
            for s in range(sessions_per_participant):
                rng = np.random.default_rng(next(children))
                sid = f"{split_name}-p{pid:02d}-s{s}"
                records.extend(_session_records(sid, pid, domain, config, rng))
        splits[split_name] = records
    return DatasetSplits(**splits)


# ---------------------------------------------------------------------------
# line-delimited JSON record files

RECORD_SCHEMA = 1
_KNOWN_FIELDS = {"schema", "session_id", "participant_id", "frame_index", "timestamp",
                 "domain", "label", "prompt", "pressure", "features"}


def _record_to_obj(rec: SessionRecord) -> dict:
    obj: dict = {
        "schema": RECORD_SCHEMA,
        "session_id": rec.session_id,
        "participant_id": rec.participant_id,
        "frame_index": rec.frame_index,
        "timestamp": rec.timestamp,
        "domain": rec.domain,
        "label": {"fingers": list(rec.label.fingers), "force": rec.label.force},
        "prompt": rec.prompt,
        "pressure": None,
        "features": None,
    }
    if rec.pressure is not None:
        obj["pressure"] = {"width": rec.pressure.width, "height": rec.pressure.height,
                           "data": rec.pressure.data.ravel().tolist()}
    if rec.features is not None:
        h, w, c = rec.features.shape
        obj["features"] = {"width": w, "height": h, "channels": c,
                           "data": rec.features.ravel().tolist()}
    return obj


def write_records(records: list[SessionRecord], path: str) -> None:
    """Write records as line-delimited JSON, one record per line.

    Key order and float formatting are fixed, so identical records produce
    byte-identical files.
    """
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(_record_to_obj(rec), sort_keys=True, separators=(",", ":")))
            f.write("\n")


def _parse_record(obj: dict, path: str, line_no: int) -> SessionRecord:
    schema = obj.get("schema")
    if schema != RECORD_SCHEMA:
        raise RecordVersionError(path, line_no, f"unsupported record schema {schema!r}")
    unknown = set(obj) - _KNOWN_FIELDS
    if unknown:
        warnings.warn(f"{path}:{line_no}: ignoring unknown record fields {sorted(unknown)}")
    try:
        label = ContactLabel(tuple(obj["label"]["fingers"]), obj["label"]["force"])
        pressure = None
        if obj.get("pressure") is not None:
            p = obj["pressure"]
            data = np.asarray(p["data"], dtype=np.float64).reshape(p["height"], p["width"])
            pressure = PressureImage(data)
        features = None
        if obj.get("features") is not None:
            ft = obj["features"]
            features = np.asarray(ft["data"], dtype=np.float64).reshape(
                ft["height"], ft["width"], ft["channels"])
        return SessionRecord(
            session_id=obj["session_id"], participant_id=obj["participant_id"],
            frame_index=obj["frame_index"], timestamp=obj["timestamp"],
            domain=obj["domain"], label=label, prompt=obj.get("prompt", ""),
            pressure=pressure, features=features)
    except RecordParseError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordParseError(path, line_no, f"bad record: {exc}") from exc


def read_records(path: str) -> list[SessionRecord]:
    """Read a line-delimited JSON record file written by write_records.

    Unknown fields are ignored with a warning; malformed lines raise
    RecordParseError naming the line number.
    """
    records: list[SessionRecord] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordParseError(path, line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise RecordParseError(path, line_no, "record line must be a JSON object")
            records.append(_parse_record(obj, path, line_no))
    return records
