"""Planar homography estimation, pressure reprojection, and peak detection."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import SingularConfigurationError
from .pressure import PressureImage

# singular-value ratio below which a correspondence set counts as degenerate
_DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Homography:
    """3x3 projective map between planes, bottom-right entry normalized to 1."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64).copy()
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise ValueError("homography matrix must be a finite 3x3 array")
        if abs(np.linalg.det(m)) <= 1e-12:
            raise SingularConfigurationError("homography matrix is not invertible")
        if m[2, 2] != 0.0:
            m = m / m[2, 2]
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map (n, 2) points through the homography."""
        pts = np.asarray(points, dtype=np.float64)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        if pts.shape[1] != 2:
            raise ValueError("points must have shape (n, 2)")
        h = np.hstack([pts, np.ones((len(pts), 1))]) @ self.matrix.T
        w = h[:, 2]
        if np.any(np.abs(w) < 1e-15):
            raise SingularConfigurationError("point maps to the line at infinity")
        out = h[:, :2] / w[:, None]
        return out[0] if single else out

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hartley normalization: centroid to origin, mean distance sqrt(2).

    Returns (transform, transformed points)."""
    centroid = pts.mean(axis=0)
    d = np.linalg.norm(pts - centroid, axis=1).mean()
    if d < 1e-12:
        raise SingularConfigurationError("correspondences are coincident")
    s = np.sqrt(2.0) / d
    t = np.array([[s, 0.0, -s * centroid[0]],
                  [0.0, s, -s * centroid[1]],
                  [0.0, 0.0, 1.0]])
    normed = (pts - centroid) * s
    return t, normed


def estimate_homography(src: np.ndarray, dst: np.ndarray) -> Homography:
    """Estimate the homography mapping src points onto dst points (DLT).

    Needs at least 4 correspondences; both point sets are Hartley-normalized
    before solving.  Degenerate configurations (e.g. any 3 of 4 points
    collinear) raise SingularConfigurationError.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
        raise ValueError("src and dst must both have shape (n, 2)")
    if len(src) < 4:
        raise ValueError("homography estimation needs at least 4 correspondences")
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
        raise ValueError("correspondences must be finite")

    t_src, s = _normalize_points(src)
    t_dst, d = _normalize_points(dst)

    n = len(src)
    a = np.zeros((2 * n, 9))
    a[0::2, 0:2] = s
    a[0::2, 2] = 1.0
    a[0::2, 6:8] = -d[:, 0:1] * s
    a[0::2, 8] = -d[:, 0]
    a[1::2, 3:5] = s
    a[1::2, 5] = 1.0
    a[1::2, 6:8] = -d[:, 1:2] * s
    a[1::2, 8] = -d[:, 1]

    _, sv, vt = np.linalg.svd(a)
    # a rank below 8 means more than one solution: degenerate geometry
    if sv[7] <= _DEGENERACY_RTOL * sv[0]:
        raise SingularConfigurationError("degenerate correspondences (collinear or repeated points)")
    h_norm = vt[-1].reshape(3, 3)

    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    if abs(np.linalg.det(h)) <= 1e-12:
        raise SingularConfigurationError("estimated homography is singular")
    return Homography(h)


def project_pressure(image: PressureImage, h: Homography,
                     out_width: int, out_height: int) -> PressureImage:
    """Resample a pressure image through a homography onto an output grid.

    ``h`` maps source pixel coordinates (x, y) to output coordinates; each
    output pixel is bilinearly sampled from the source, zero outside it.
    """
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be positive")
    inv = h.inverse().matrix
    xs, ys = np.meshgrid(np.arange(out_width, dtype=np.float64),
                         np.arange(out_height, dtype=np.float64))
    w = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2]
    w = np.where(np.abs(w) < 1e-15, np.nan, w)
    u = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / w
    v = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / w

    src = image.data
    sh, sw = src.shape
    valid = np.isfinite(u) & np.isfinite(v) & (u >= 0) & (u <= sw - 1) & (v >= 0) & (v <= sh - 1)
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)

    u0 = np.clip(np.floor(u).astype(np.int64), 0, sw - 2) if sw > 1 else np.zeros_like(u, dtype=np.int64)
    v0 = np.clip(np.floor(v).astype(np.int64), 0, sh - 2) if sh > 1 else np.zeros_like(v, dtype=np.int64)
    fu = u - u0
    fv = v - v0
    u1 = np.minimum(u0 + 1, sw - 1)
    v1 = np.minimum(v0 + 1, sh - 1)

    out = (src[v0, u0] * (1 - fu) * (1 - fv)
           + src[v0, u1] * fu * (1 - fv)
           + src[v1, u0] * (1 - fu) * fv
           + src[v1, u1] * fu * fv)
    out[~valid] = 0.0
    return PressureImage(out)


@dataclass(frozen=True)
class TouchPoint:
    """A detected pressure peak with sub-pixel position and blob statistics."""

    x: float
    y: float
    peak_pressure: float
    blob_force_proxy: float


def _label_blobs(mask: np.ndarray) -> np.ndarray:
    """8-connected component labels for a boolean mask (0 = background)."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int64)
    next_label = 0
    for sr, sc in zip(*np.nonzero(mask)):
        if labels[sr, sc]:
            continue
        next_label += 1
        stack = [(sr, sc)]
        labels[sr, sc] = next_label
        while stack:
            r, c = stack.pop()
            for rr in range(max(r - 1, 0), min(r + 2, h)):
                for cc in range(max(c - 1, 0), min(c + 2, w)):
                    if mask[rr, cc] and not labels[rr, cc]:
                        labels[rr, cc] = next_label
                        stack.append((rr, cc))
    return labels


def find_peaks(image: PressureImage, threshold: float, min_distance: float) -> list[TouchPoint]:
    """Detect local pressure maxima at or above a threshold.

    A candidate pixel must be >= each of its 8 neighbors; candidates are kept
    greedily in descending pressure order (ties by smallest (row, column)),
    suppressing any later candidate closer than ``min_distance`` (Euclidean)
    to a kept one.  Positions are refined by the center of mass of the 3x3
    neighborhood.  ``blob_force_proxy`` sums the peak's 8-connected
    above-threshold component.
    """
    if not (threshold > 0.0) or not np.isfinite(threshold):
        raise ValueError("threshold must be positive and finite")
    if not (min_distance >= 1.0) or not np.isfinite(min_distance):
        raise ValueError("min_distance must be at least 1")

    arr = image.data
    h, w = arr.shape
    mask = arr >= threshold
    if not mask.any():
        return []

    padded = np.full((h + 2, w + 2), -np.inf)
    padded[1:-1, 1:-1] = arr
    is_max = np.ones((h, w), dtype=bool)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            is_max &= arr >= padded[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]

    rows, cols = np.nonzero(mask & is_max)
    vals = arr[rows, cols]
    order = np.lexsort((cols, rows, -vals))

    labels = _label_blobs(mask)
    blob_sums: dict[int, float] = {}

    kept_rc: list[tuple[int, int]] = []
    points: list[TouchPoint] = []
    min_d2 = min_distance * min_distance
    for i in order:
        r, c = int(rows[i]), int(cols[i])
        if any((r - kr) ** 2 + (c - kc) ** 2 < min_d2 for kr, kc in kept_rc):
            continue
        kept_rc.append((r, c))

        r0, r1 = max(r - 1, 0), min(r + 2, h)
        c0, c1 = max(c - 1, 0), min(c + 2, w)
        win = arr[r0:r1, c0:c1]
        total = win.sum()
        if total > 0:
            wr, wc = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
            y = float((win * wr).sum() / total)
            x = float((win * wc).sum() / total)
        else:
            y, x = float(r), float(c)

        lab = int(labels[r, c])
        if lab not in blob_sums:
            blob_sums[lab] = float(arr[labels == lab].sum())
        points.append(TouchPoint(x=x, y=y, peak_pressure=float(arr[r, c]),
                                 blob_force_proxy=blob_sums[lab]))
    return points


def save_calibration(path: str, h: Homography) -> None:
    """Write a homography to a small JSON calibration file."""
    payload = {"schema": 1, "matrix": [[float(v) for v in row] for row in h.matrix]}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_calibration(path: str) -> Homography:
    """Read a homography from a JSON calibration file."""
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("schema") != 1:
        raise ValueError(f"{path}: unsupported calibration schema")
    return Homography(np.array(payload["matrix"], dtype=np.float64))
