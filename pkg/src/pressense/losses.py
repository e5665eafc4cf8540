"""Training losses with hand-derived gradients.

Three pieces: a distance-weighted bin cross-entropy over pressure logits, a
masked binary cross-entropy over the six contact-label elements, and an
adversarial real/weak domain loss whose encoder-side gradient is the exact
negation of the discriminator-side gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contact import ContactLabel
from .pressure import BinIndexImage

# probabilities are clamped at this floor inside every log
EPS = 1e-12


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along the given axis."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    """Numerically stable logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def structure_aware_ce(logits: np.ndarray,
                       target: BinIndexImage | np.ndarray,
                       reduction: str = "sum") -> tuple[float, np.ndarray]:
    """Distance-weighted cross-entropy over per-pixel bin logits.

    Every bin's log-probability is penalized with weight exp(-|b - k|) where k
    is the pixel's target bin, so probability mass near the target bin costs
    less than mass far from it.  Returns (loss, d loss / d logits).

    ``reduction`` is "sum" (add pixel losses, as defined) or "mean" (divide by
    the pixel count; useful to keep step sizes grid-independent).
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 3:
        raise ValueError("logits must have shape (height, width, n_bins)")
    k = target.data if isinstance(target, BinIndexImage) else np.asarray(target)
    if k.shape != z.shape[:2]:
        raise ValueError("target shape must match the logit grid")
    if reduction not in ("sum", "mean"):
        raise ValueError("reduction must be 'sum' or 'mean'")
    n_bins = z.shape[2]
    if isinstance(target, BinIndexImage) and target.n_bins != n_bins:
        raise ValueError("target n_bins must match the logit depth")

    b = np.arange(n_bins, dtype=np.float64)
    w = np.exp(-np.abs(b - k[..., None]))  # (h, w, n_bins)
    probs = softmax(z)
    clamped = np.maximum(probs, EPS)
    loss = float(-(w * np.log(clamped)).sum())

    # d/dz_j of -sum_b w_b log(max(p_b, eps)) with p = softmax(z):
    #   grad_j = p_j * sum_b(w_b m_b) - w_j m_j,  m_b = [p_b > eps]
    m = (probs > EPS).astype(np.float64)
    wm = w * m
    grad = probs * wm.sum(axis=2, keepdims=True) - wm

    if reduction == "mean":
        n_px = z.shape[0] * z.shape[1]
        loss /= n_px
        grad = grad / n_px
    return loss, grad


def structure_target_distribution(k: int, n_bins: int) -> np.ndarray:
    """The probability vector minimizing the distance-weighted cross-entropy
    for target bin k: p*(b) = exp(-|b - k|) / Z."""
    if not 0 <= k < n_bins:
        raise ValueError("target bin out of range")
    w = np.exp(-np.abs(np.arange(n_bins, dtype=np.float64) - k))
    return w / w.sum()


def contact_label_loss(logits: np.ndarray, label: ContactLabel) -> tuple[float, np.ndarray]:
    """Masked sigmoid BCE over the six contact-label elements.

    The force element is excluded from loss and gradient when the label's
    force is -1.  Loss is the mean over unmasked elements.  Returns
    (loss, d loss / d logits).
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.shape != (6,):
        raise ValueError("contact logits must have shape (6,)")
    t = np.array([*label.fingers, max(label.force, 0)], dtype=np.float64)
    mask = np.ones(6)
    if label.force == -1:
        mask[5] = 0.0
    n = mask.sum()

    s = sigmoid(z)
    bce = -(t * np.log(np.maximum(s, EPS)) + (1.0 - t) * np.log(np.maximum(1.0 - s, EPS)))
    loss = float((bce * mask).sum() / n)

    # clamp-aware derivative; reduces to (s - t) / n where no clamp is active
    grad = (-t * (1.0 - s) * (s > EPS) + (1.0 - t) * s * ((1.0 - s) > EPS)) * mask / n
    return loss, grad


@dataclass(frozen=True)
class DomainLossResult:
    """Domain loss value plus its two gradient flavors.

    ``disc_grad_*`` is d loss / d probability for the discriminator update;
    ``enc_grad_*`` is the sign-flipped copy routed toward the encoder so that
    the encoder ascends what the discriminator descends.
    """

    loss: float
    disc_grad_full: float
    disc_grad_weak: float
    enc_grad_full: float
    enc_grad_weak: float


def domain_loss(d_full: float, d_weak: float) -> DomainLossResult:
    """Adversarial domain loss -log d_full - log(1 - d_weak) on discriminator
    probabilities for one fully-labeled and one weakly-labeled sample."""
    for d in (d_full, d_weak):
        if not np.isfinite(d) or not (0.0 <= d <= 1.0):
            raise ValueError("domain probabilities must lie in [0, 1]")
    lf = max(d_full, EPS)
    lw = max(1.0 - d_weak, EPS)
    loss = float(-np.log(lf) - np.log(lw))
    gf = -1.0 / lf if d_full > EPS else 0.0
    gw = 1.0 / lw if (1.0 - d_weak) > EPS else 0.0
    return DomainLossResult(loss=loss, disc_grad_full=gf, disc_grad_weak=gw,
                            enc_grad_full=-gf, enc_grad_weak=-gw)


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term loss values and the weighted total."""

    l_p: float
    l_w: float
    l_d: float
    lambda1: float
    lambda2: float
    total: float


def combined_loss(l_p: float, l_w: float, l_d: float,
                  lambda1: float = 0.01, lambda2: float = 0.001,
                  has_pressure: bool = True) -> LossBreakdown:
    """Combine the loss terms: total = l_p + lambda1*l_w + lambda2*l_d.

    ``has_pressure=False`` marks a batch with no pressure supervision; its
    pressure term is treated as zero.
    """
    vals = (l_p, l_w, l_d, lambda1, lambda2)
    if not all(np.isfinite(v) for v in vals):
        raise ValueError("loss terms and weights must be finite")
    l_p_eff = float(l_p) if has_pressure else 0.0
    total = l_p_eff + lambda1 * l_w + lambda2 * l_d
    return LossBreakdown(l_p=l_p_eff, l_w=float(l_w), l_d=float(l_d),
                         lambda1=float(lambda1), lambda2=float(lambda2),
                         total=float(total))
