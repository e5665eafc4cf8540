"""Pressure grids, binary contact grids, and logarithmic bin quantization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_N_BINS = 9
DEFAULT_P_LOW_KPA = 1.0
DEFAULT_P_HIGH_KPA = 30.0

# pressures at or above this count as contact everywhere in the package
CONTACT_THRESHOLD_KPA = 1.0


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class PressureImage:
    """Dense grid of non-negative pressures in kPa, row-major, shape (height, width)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("pressure data must be a non-empty 2-d grid")
        if not np.all(np.isfinite(arr)):
            raise ValueError("pressure values must be finite")
        if np.any(arr < 0.0):
            raise ValueError("pressure values must be non-negative")
        object.__setattr__(self, "data", _freeze(arr.copy()))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, width: int, height: int) -> "PressureImage":
        return cls(np.zeros((height, width)))


@dataclass(frozen=True, eq=False)
class ContactImage:
    """Binary contact grid, same layout as PressureImage, values 0/1."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("contact data must be a non-empty 2-d grid")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("contact values must be 0 or 1")
        object.__setattr__(self, "data", _freeze(arr.astype(np.uint8)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class BinIndexImage:
    """Grid of integer bin indices in [0, n_bins)."""

    data: np.ndarray
    n_bins: int

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("bin index data must be a non-empty 2-d grid")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")
        arr = arr.astype(np.int64)
        if arr.min() < 0 or arr.max() >= self.n_bins:
            raise ValueError("bin indices must lie in [0, n_bins)")
        object.__setattr__(self, "data", _freeze(arr))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class BinSpec:
    """Log-spaced pressure binning.

    Bin 0 is the zero bin [0, edges[0]).  Nonzero bin j (1 <= j < n_bins)
    covers [edges[j-1], edges[j]); values at or above the top edge clamp
    into the last bin.  Build via make_bin_spec.
    """

    n_bins: int
    p_low: float
    p_high: float
    edges: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "edges", _freeze(np.asarray(self.edges, dtype=np.float64).copy()))


def make_bin_spec(n_bins: int = DEFAULT_N_BINS,
                  p_low: float = DEFAULT_P_LOW_KPA,
                  p_high: float = DEFAULT_P_HIGH_KPA) -> BinSpec:
    """Build a BinSpec with edges log-spaced from p_low to p_high.

    edge_j = p_low * (p_high / p_low) ** (j / (n_bins - 1)) for j = 0 .. n_bins-1,
    so edges[0] == p_low and edges[-1] == p_high.
    """
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    if not (0.0 < p_low < p_high) or not np.isfinite(p_low) or not np.isfinite(p_high):
        raise ValueError("need 0 < p_low < p_high, both finite")
    j = np.arange(n_bins, dtype=np.float64)
    edges = p_low * (p_high / p_low) ** (j / (n_bins - 1))
    # endpoints exactly, regardless of rounding in the power
    edges[0] = p_low
    edges[-1] = p_high
    return BinSpec(n_bins=n_bins, p_low=float(p_low), p_high=float(p_high), edges=edges)


def quantize(image: PressureImage, spec: BinSpec) -> BinIndexImage:
    """Map each pixel to its bin index; values >= p_high clamp into the top bin."""
    idx = np.searchsorted(spec.edges, image.data, side="right")
    np.clip(idx, 0, spec.n_bins - 1, out=idx)
    return BinIndexImage(data=idx, n_bins=spec.n_bins)


def bin_representatives(spec: BinSpec) -> np.ndarray:
    """Per-bin representative pressures: 0 for the zero bin, geometric mean of
    the bin's edges otherwise."""
    reps = np.zeros(spec.n_bins)
    reps[1:] = np.sqrt(spec.edges[:-1] * spec.edges[1:])
    return reps


def decode_expected(probs: np.ndarray, spec: BinSpec) -> PressureImage:
    """Decode per-pixel bin probabilities (h, w, n_bins) to expected pressure."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 3 or probs.shape[2] != spec.n_bins:
        raise ValueError("probabilities must have shape (height, width, n_bins)")
    if np.any(probs < 0.0):
        raise ValueError("probabilities must be non-negative")
    sums = probs.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        raise ValueError("probabilities must sum to 1 per pixel (tolerance 1e-6)")
    return PressureImage(probs @ bin_representatives(spec))


def decode_argmax(probs: np.ndarray, spec: BinSpec) -> PressureImage:
    """Decode bin probabilities to each pixel's most likely representative pressure."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 3 or probs.shape[2] != spec.n_bins:
        raise ValueError("probabilities must have shape (height, width, n_bins)")
    reps = bin_representatives(spec)
    return PressureImage(reps[np.argmax(probs, axis=2)])


def contact_image(image: PressureImage, threshold: float = CONTACT_THRESHOLD_KPA) -> ContactImage:
    """Threshold a pressure image into a binary contact image (pixel >= threshold)."""
    if not (threshold > 0.0) or not np.isfinite(threshold):
        raise ValueError("threshold must be positive and finite")
    return ContactImage((image.data >= threshold).astype(np.uint8))
