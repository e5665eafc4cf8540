"""Evaluation metrics: contact accuracy, IoU variants, label accuracy, and typing scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .contact import FINGER_NAMES, ContactLabel
from .pressure import CONTACT_THRESHOLD_KPA, ContactImage, PressureImage, contact_image


@dataclass(frozen=True)
class FrameEvaluation:
    """One frame's ground truth and estimate, ready for scoring.

    ``gt_pressure`` is present only for fully-labeled frames; ``est_label`` is
    present only when a model produced label logits for the frame.
    """

    frame_id: str
    gt_label: ContactLabel
    est_pressure: PressureImage
    gt_pressure: PressureImage | None = None
    est_label: ContactLabel | None = None


def contact_accuracy(frames: Sequence[FrameEvaluation],
                     threshold: float = CONTACT_THRESHOLD_KPA) -> float:
    """Fraction of frames whose any-contact state matches the label.

    A frame's estimated state is "contact" when any estimated pixel reaches
    the threshold; the reference state comes from the label's finger flags.
    """
    if len(frames) == 0:
        raise ValueError("contact accuracy needs at least one frame")
    hits = 0
    for f in frames:
        est_contact = bool(np.any(f.est_pressure.data >= threshold))
        hits += est_contact == f.gt_label.any_contact
    return hits / len(frames)


def contact_iou(gt: ContactImage, est: ContactImage) -> float | None:
    """Intersection over union of two binary contact images.

    Returns None when both images are empty (undefined; callers exclude such
    frames from averages).
    """
    if gt.data.shape != est.data.shape:
        raise ValueError("contact images must share dimensions")
    a = gt.data.astype(bool)
    b = est.data.astype(bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return None
    return float(np.logical_and(a, b).sum() / union)


def volumetric_iou(gt: PressureImage, est: PressureImage) -> float | None:
    """Pixelwise sum(min) / sum(max) of two pressure images.

    Returns None when both images are identically zero (undefined).
    """
    if gt.data.shape != est.data.shape:
        raise ValueError("pressure images must share dimensions")
    denom = np.maximum(gt.data, est.data).sum()
    if denom == 0.0:
        return None
    return float(np.minimum(gt.data, est.data).sum() / denom)


@dataclass(frozen=True)
class LabelMetrics:
    """Per-finger flag accuracy and force accuracy over labeled pairs."""

    per_finger: tuple[float, float, float, float, float]
    force: float | None
    n_frames: int
    n_force_frames: int


def label_metrics(pairs: Sequence[tuple[ContactLabel, ContactLabel]]) -> LabelMetrics:
    """Score (estimated, reference) contact-label pairs.

    Per-finger accuracy covers every pair; force accuracy covers only pairs
    whose reference force is specified (not -1) and is None when there are no
    such pairs.
    """
    if len(pairs) == 0:
        raise ValueError("label metrics need at least one pair")
    finger_hits = np.zeros(5)
    force_hits = 0
    force_total = 0
    for est, ref in pairs:
        for i in range(5):
            finger_hits[i] += est.fingers[i] == ref.fingers[i]
        if ref.force != -1:
            force_total += 1
            force_hits += est.force == ref.force
    per_finger = tuple(float(h / len(pairs)) for h in finger_hits)
    force = force_hits / force_total if force_total else None
    return LabelMetrics(per_finger=per_finger, force=force,
                        n_frames=len(pairs), n_force_frames=force_total)


def char_errors(reference: str, typed: str) -> int:
    """Levenshtein distance (insertions, deletions, substitutions) between strings."""
    if len(reference) < len(typed):
        reference, typed = typed, reference
    prev = list(range(len(typed) + 1))
    for i, rc in enumerate(reference, start=1):
        cur = [i]
        for j, tc in enumerate(typed, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (rc != tc)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class TypingTranscript:
    """A completed typing attempt: what was prompted, what was typed, and how long it took."""

    reference: str
    typed: str
    elapsed_s: float

    def __post_init__(self):
        if not (self.elapsed_s > 0.0) or not np.isfinite(self.elapsed_s):
            raise ValueError("elapsed_s must be positive and finite")


@dataclass(frozen=True)
class WpmScore:
    """Words-per-minute scores: raw and error-penalized."""

    wpm: float
    net_wpm: float
    chars: int
    errors: int


def net_wpm(transcript: TypingTranscript) -> WpmScore:
    """Score a transcript: wpm = (c/5) / (t/60), net subtracts errors per minute.

    c counts every typed character, and errors is the Levenshtein distance to
    the reference.  Net WPM may be negative for error-heavy input.
    """
    c = len(transcript.typed)
    e = char_errors(transcript.reference, transcript.typed)
    minutes = transcript.elapsed_s / 60.0
    wpm = (c / 5.0) / minutes
    net = (c / 5.0 - e) / minutes
    return WpmScore(wpm=wpm, net_wpm=net, chars=c, errors=e)


@dataclass(frozen=True)
class EvaluationReport:
    """Aggregate metrics over a frame collection.

    IoU fields are None when no frame had ground-truth pressure; label fields
    are None when no frame had an estimated label.
    """

    n_frames: int
    contact_accuracy: float
    contact_iou: float | None
    volumetric_iou: float | None
    label: LabelMetrics | None
    iou_mode: str


def evaluate_frames(frames: Sequence[FrameEvaluation],
                    threshold: float = CONTACT_THRESHOLD_KPA,
                    iou_mode: str = "per_frame") -> EvaluationReport:
    """Score a frame collection.

    ``iou_mode`` is "per_frame" (average per-frame ratios, frames where the
    metric is undefined excluded) or "global" (pool numerators and
    denominators over all frames before dividing).
    """
    if iou_mode not in ("per_frame", "global"):
        raise ValueError("iou_mode must be 'per_frame' or 'global'")
    acc = contact_accuracy(frames, threshold)

    with_gt = [f for f in frames if f.gt_pressure is not None]
    c_iou: float | None = None
    v_iou: float | None = None
    if with_gt:
        if iou_mode == "per_frame":
            c_vals = []
            v_vals = []
            for f in with_gt:
                c = contact_iou(contact_image(f.gt_pressure, threshold),
                                contact_image(f.est_pressure, threshold))
                if c is not None:
                    c_vals.append(c)
                v = volumetric_iou(f.gt_pressure, f.est_pressure)
                if v is not None:
                    v_vals.append(v)
            c_iou = float(np.mean(c_vals)) if c_vals else None
            v_iou = float(np.mean(v_vals)) if v_vals else None
        else:
            c_inter = c_union = 0.0
            v_min = v_max = 0.0
            for f in with_gt:
                a = f.gt_pressure.data >= threshold
                b = f.est_pressure.data >= threshold
                c_inter += np.logical_and(a, b).sum()
                c_union += np.logical_or(a, b).sum()
                v_min += np.minimum(f.gt_pressure.data, f.est_pressure.data).sum()
                v_max += np.maximum(f.gt_pressure.data, f.est_pressure.data).sum()
            c_iou = c_inter / c_union if c_union else None
            v_iou = v_min / v_max if v_max else None

    with_label = [(f.est_label, f.gt_label) for f in frames if f.est_label is not None]
    label = label_metrics(with_label) if with_label else None

    return EvaluationReport(n_frames=len(frames), contact_accuracy=acc,
                            contact_iou=c_iou, volumetric_iou=v_iou,
                            label=label, iou_mode=iou_mode)


def report_to_dict(report: EvaluationReport) -> dict:
    """Flatten a report for JSON output; undefined metrics are omitted."""
    out: dict = {
        "n_frames": report.n_frames,
        "contact_accuracy": report.contact_accuracy,
        "iou_mode": report.iou_mode,
    }
    if report.contact_iou is not None:
        out["contact_iou"] = report.contact_iou
    if report.volumetric_iou is not None:
        out["volumetric_iou"] = report.volumetric_iou
    if report.label is not None:
        out["label_accuracy"] = {
            "per_finger": {name: v for name, v in zip(FINGER_NAMES, report.label.per_finger)},
            "n_frames": report.label.n_frames,
            "n_force_frames": report.label.n_force_frames,
        }
        if report.label.force is not None:
            out["label_accuracy"]["force"] = report.label.force
    return out
