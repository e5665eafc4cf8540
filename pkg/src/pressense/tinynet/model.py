"""A tiny pressure model: strided-conv encoder, shared bottleneck, three heads.

The encoder downsamples the input feature map 4x with two stride-2 tanh conv
layers.  From the bottleneck, a per-pixel linear head predicts pressure bin
logits on an upsampled grid, and two small MLPs on the spatially pooled
bottleneck predict the 6-element contact label and the domain logit.  All
gradients are written by hand; the domain head's contribution to the encoder
can be sign-flipped so the encoder ascends what the discriminator descends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..contact import ContactLabel
from ..errors import TrainingDivergedError
from ..losses import (EPS, LossBreakdown, combined_loss, contact_label_loss, sigmoid,
                      softmax, structure_aware_ce)
from ..pressure import BinSpec, quantize
from .adam import AdamState, adam_step


@dataclass(frozen=True)
class ModelConfig:
    """Model dimensions; width and height must be divisible by 4."""

    width: int
    height: int
    channels: int
    hidden_channels: int = 8
    mlp_hidden: int = 8
    n_bins: int = 9
    seed: int = 0

    def __post_init__(self):
        if self.width < 4 or self.height < 4 or self.width % 4 or self.height % 4:
            raise ValueError("width and height must be multiples of 4, at least 4")
        if self.channels < 1 or self.hidden_channels < 1 or self.mlp_hidden < 1:
            raise ValueError("channel counts must be positive")
        if self.n_bins < 2:
            raise ValueError("n_bins must be at least 2")


@dataclass(frozen=True)
class LossConfig:
    """Loss weights and ablation switches for training steps."""

    lambda1: float = 0.01
    lambda2: float = 0.001
    enable_contact: bool = True
    enable_domain: bool = True
    pressure_reduction: str = "sum"

    def __post_init__(self):
        if self.pressure_reduction not in ("sum", "mean"):
            raise ValueError("pressure_reduction must be 'sum' or 'mean'")


@dataclass(frozen=True)
class ForwardResult:
    """Single-sample forward outputs."""

    pressure_logits: np.ndarray   # (height, width, n_bins)
    pooled_features: np.ndarray   # (hidden_channels,)
    contact_logits: np.ndarray    # (6,)
    domain_logit: float


@dataclass(frozen=True)
class Batch:
    """A training batch: inputs, domain flags, bin targets, contact labels.

    ``bin_targets[i]`` is meaningful only where ``is_full[i]`` is set; weak
    rows carry zeros there.
    """

    features: np.ndarray          # (n, height, width, channels)
    is_full: np.ndarray           # (n,) bool
    bin_targets: np.ndarray       # (n, height, width) int
    labels: tuple[ContactLabel, ...]

    def __post_init__(self):
        n = self.features.shape[0]
        if n == 0:
            raise ValueError("batch must contain at least one sample")
        if self.features.ndim != 4:
            raise ValueError("features must have shape (n, height, width, channels)")
        if self.is_full.shape != (n,) or len(self.labels) != n:
            raise ValueError("batch field lengths disagree")
        if self.bin_targets.shape != self.features.shape[:3]:
            raise ValueError("bin_targets must match the feature grid")


def make_batch(records, spec: BinSpec) -> Batch:
    """Stack SessionRecords (which must carry features) into a Batch."""
    feats = []
    is_full = []
    targets = []
    labels = []
    for rec in records:
        if rec.features is None:
            raise ValueError(f"record {rec.session_id}#{rec.frame_index} has no features")
        feats.append(rec.features)
        full = rec.domain == "full"
        is_full.append(full)
        if full:
            targets.append(quantize(rec.pressure, spec).data)
        else:
            targets.append(np.zeros(rec.features.shape[:2], dtype=np.int64))
        labels.append(rec.label)
    return Batch(features=np.stack(feats), is_full=np.array(is_full, dtype=bool),
                 bin_targets=np.stack(targets), labels=tuple(labels))


# parameter names in their fixed flattening order
PARAM_NAMES = ("enc1_w", "enc1_b", "enc2_w", "enc2_b", "press_w", "press_b",
               "contact1_w", "contact1_b", "contact2_w", "contact2_b",
               "domain1_w", "domain1_b", "domain2_w", "domain2_b")


def init_model(config: ModelConfig) -> dict[str, np.ndarray]:
    """Initialize parameters: uniform(+-1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(config.seed)
    k = config.hidden_channels
    m = config.mlp_hidden

    def uniform(fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
        s = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-s, s, shape)

    return {
        "enc1_w": uniform(4 * config.channels, (4 * config.channels, k)),
        "enc1_b": np.zeros(k),
        "enc2_w": uniform(4 * k, (4 * k, k)),
        "enc2_b": np.zeros(k),
        "press_w": uniform(k, (k, config.n_bins)),
        "press_b": np.zeros(config.n_bins),
        "contact1_w": uniform(k, (k, m)),
        "contact1_b": np.zeros(m),
        "contact2_w": uniform(m, (m, 6)),
        "contact2_b": np.zeros(6),
        "domain1_w": uniform(k, (k, m)),
        "domain1_b": np.zeros(m),
        "domain2_w": uniform(m, (m, 1)),
        "domain2_b": np.zeros(1),
    }


def param_count(params: dict[str, np.ndarray]) -> int:
    return int(sum(p.size for p in params.values()))


def _patches(x: np.ndarray) -> np.ndarray:
    """Gather 2x2 blocks into channels: (n, h, w, c) -> (n, h/2, w/2, 4c)."""
    return np.concatenate([x[:, 0::2, 0::2], x[:, 0::2, 1::2],
                           x[:, 1::2, 0::2], x[:, 1::2, 1::2]], axis=3)


def _unpatch(dp: np.ndarray, c: int) -> np.ndarray:
    """Adjoint of _patches: scatter (n, h, w, 4c) back to (n, 2h, 2w, c)."""
    n, h, w, _ = dp.shape
    dx = np.zeros((n, 2 * h, 2 * w, c))
    dx[:, 0::2, 0::2] = dp[:, :, :, 0 * c:1 * c]
    dx[:, 0::2, 1::2] = dp[:, :, :, 1 * c:2 * c]
    dx[:, 1::2, 0::2] = dp[:, :, :, 2 * c:3 * c]
    dx[:, 1::2, 1::2] = dp[:, :, :, 3 * c:4 * c]
    return dx


def _forward_batch(params: dict[str, np.ndarray], x: np.ndarray) -> dict[str, np.ndarray]:
    """Run the model on a batch (n, h, w, c); returns every intermediate."""
    p1 = _patches(x)
    a1 = np.tanh(p1 @ params["enc1_w"] + params["enc1_b"])
    p2 = _patches(a1)
    a2 = np.tanh(p2 @ params["enc2_w"] + params["enc2_b"])
    pooled = a2.mean(axis=(1, 2))
    up = a2.repeat(4, axis=1).repeat(4, axis=2)
    zp = up @ params["press_w"] + params["press_b"]
    hc = np.tanh(pooled @ params["contact1_w"] + params["contact1_b"])
    zc = hc @ params["contact2_w"] + params["contact2_b"]
    hd = np.tanh(pooled @ params["domain1_w"] + params["domain1_b"])
    zd = (hd @ params["domain2_w"] + params["domain2_b"])[:, 0]
    return {"x": x, "p1": p1, "a1": a1, "p2": p2, "a2": a2, "pooled": pooled,
            "up": up, "zp": zp, "hc": hc, "zc": zc, "hd": hd, "zd": zd}


def forward(params: dict[str, np.ndarray], x: np.ndarray) -> ForwardResult:
    """Run the model on one feature map (height, width, channels)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError("input must have shape (height, width, channels)")
    cache = _forward_batch(params, x[None])
    return ForwardResult(pressure_logits=cache["zp"][0],
                         pooled_features=cache["pooled"][0],
                         contact_logits=cache["zc"][0],
                         domain_logit=float(cache["zd"][0]))


def predict_batch(params: dict[str, np.ndarray], x: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Probabilities for a feature batch: (pressure bin probs, contact, domain)."""
    cache = _forward_batch(params, np.asarray(x, dtype=np.float64))
    return softmax(cache["zp"]), sigmoid(cache["zc"]), sigmoid(cache["zd"])


def _backward_batch(params: dict[str, np.ndarray], cache: dict[str, np.ndarray],
                    d_zp: np.ndarray, d_zc: np.ndarray, d_zd: np.ndarray,
                    domain_sign: float) -> dict[str, np.ndarray]:
    """Parameter gradients given upstream gradients at the three head outputs.

    ``domain_sign`` scales only the domain head's flow into the shared
    encoder; discriminator (head) parameters always receive true gradients.
    """
    x, p1, a1, p2, a2 = cache["x"], cache["p1"], cache["a1"], cache["p2"], cache["a2"]
    pooled, up, hc, hd = cache["pooled"], cache["up"], cache["hc"], cache["hd"]
    n, h4, w4, k = a2.shape
    grads: dict[str, np.ndarray] = {}

    # pressure head
    grads["press_w"] = up.reshape(-1, k).T @ d_zp.reshape(-1, d_zp.shape[-1])
    grads["press_b"] = d_zp.sum(axis=(0, 1, 2))
    d_up = d_zp @ params["press_w"].T
    d_a2 = d_up.reshape(n, h4, 4, w4, 4, k).sum(axis=(2, 4))

    # contact head
    grads["contact2_w"] = hc.T @ d_zc
    grads["contact2_b"] = d_zc.sum(axis=0)
    d_hc = (d_zc @ params["contact2_w"].T) * (1.0 - hc * hc)
    grads["contact1_w"] = pooled.T @ d_hc
    grads["contact1_b"] = d_hc.sum(axis=0)
    d_pooled = d_hc @ params["contact1_w"].T

    # domain head; its encoder-bound flow picks up domain_sign
    d_zd2 = d_zd[:, None]
    grads["domain2_w"] = hd.T @ d_zd2
    grads["domain2_b"] = d_zd2.sum(axis=0)
    d_hd = (d_zd2 @ params["domain2_w"].T) * (1.0 - hd * hd)
    grads["domain1_w"] = pooled.T @ d_hd
    grads["domain1_b"] = d_hd.sum(axis=0)
    d_pooled = d_pooled + domain_sign * (d_hd @ params["domain1_w"].T)

    # mean pool spreads the pooled gradient evenly over bottleneck pixels
    d_a2 = d_a2 + d_pooled[:, None, None, :] / (h4 * w4)

    d_z2 = d_a2 * (1.0 - a2 * a2)
    grads["enc2_w"] = p2.reshape(-1, p2.shape[-1]).T @ d_z2.reshape(-1, k)
    grads["enc2_b"] = d_z2.sum(axis=(0, 1, 2))
    d_a1 = _unpatch(d_z2 @ params["enc2_w"].T, k)

    d_z1 = d_a1 * (1.0 - a1 * a1)
    grads["enc1_w"] = p1.reshape(-1, p1.shape[-1]).T @ d_z1.reshape(-1, k)
    grads["enc1_b"] = d_z1.sum(axis=(0, 1, 2))
    return grads


def _forward_losses(params: dict[str, np.ndarray], batch: Batch, loss_cfg: LossConfig
                    ) -> tuple[LossBreakdown, np.ndarray, np.ndarray, np.ndarray, dict]:
    """Forward pass plus all loss terms and their upstream (head-level) gradients."""
    cache = _forward_batch(params, batch.features)
    n = batch.features.shape[0]
    full_idx = np.nonzero(batch.is_full)[0]
    weak_idx = np.nonzero(~batch.is_full)[0]

    # pressure term: mean over fully-labeled samples, zero without any
    d_zp = np.zeros_like(cache["zp"])
    l_p = 0.0
    if len(full_idx):
        for i in full_idx:
            li, gi = structure_aware_ce(cache["zp"][i], batch.bin_targets[i],
                                        reduction=loss_cfg.pressure_reduction)
            l_p += li
            d_zp[i] = gi / len(full_idx)
        l_p /= len(full_idx)

    # contact-label term: mean over every sample
    d_zc = np.zeros_like(cache["zc"])
    l_w = 0.0
    if loss_cfg.enable_contact:
        for i in range(n):
            li, gi = contact_label_loss(cache["zc"][i], batch.labels[i])
            l_w += li
            d_zc[i] = loss_cfg.lambda1 * gi / n
        l_w /= n

    # domain term: per-group means of -log D (full) and -log(1 - D) (weak)
    d_zd = np.zeros_like(cache["zd"])
    l_d = 0.0
    if loss_cfg.enable_domain:
        d = sigmoid(cache["zd"])
        if len(full_idx):
            df = d[full_idx]
            l_d += float(-np.log(np.maximum(df, EPS)).mean())
            d_zd[full_idx] = loss_cfg.lambda2 * (-(1.0 - df) * (df > EPS)) / len(full_idx)
        if len(weak_idx):
            dw = d[weak_idx]
            l_d += float(-np.log(np.maximum(1.0 - dw, EPS)).mean())
            d_zd[weak_idx] = loss_cfg.lambda2 * (dw * ((1.0 - dw) > EPS)) / len(weak_idx)

    if not (np.isfinite(l_p) and np.isfinite(l_w) and np.isfinite(l_d)):
        raise TrainingDivergedError(
            f"non-finite loss terms: l_p={l_p}, l_w={l_w}, l_d={l_d}")
    breakdown = combined_loss(l_p, l_w, l_d, lambda1=loss_cfg.lambda1,
                              lambda2=loss_cfg.lambda2, has_pressure=bool(len(full_idx)))
    return breakdown, d_zp, d_zc, d_zd, cache


def total_loss(params: dict[str, np.ndarray], batch: Batch, loss_cfg: LossConfig) -> float:
    """Combined loss value only (used by finite-difference checks)."""
    return _forward_losses(params, batch, loss_cfg)[0].total


def loss_and_grads(params: dict[str, np.ndarray], batch: Batch, loss_cfg: LossConfig,
                   reverse_domain: bool = True
                   ) -> tuple[LossBreakdown, dict[str, np.ndarray]]:
    """Combined loss and parameter gradients for a batch.

    With ``reverse_domain`` the encoder receives the exact negation of the
    domain term's gradient (adversarial training); without it the gradients
    are the true derivatives of the combined loss, which is what a
    finite-difference check must compare against.
    """
    breakdown, d_zp, d_zc, d_zd, cache = _forward_losses(params, batch, loss_cfg)
    sign = -1.0 if reverse_domain else 1.0
    grads = _backward_batch(params, cache, d_zp, d_zc, d_zd, domain_sign=sign)
    return breakdown, grads


def domain_loss_grads(params: dict[str, np.ndarray], batch: Batch,
                      lambda2: float = 1.0, reverse_domain: bool = True
                      ) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and parameter gradients of the domain term alone.

    With ``reverse_domain`` every encoder-side gradient is the exact unary
    negation of its non-reversed value; discriminator-head gradients are
    identical either way.
    """
    cfg = LossConfig(lambda1=0.0, lambda2=lambda2, enable_contact=False,
                     enable_domain=True)
    breakdown, d_zp, _, d_zd, cache = _forward_losses(params, batch, cfg)
    d_zp = np.zeros_like(d_zp)  # drop the pressure term; only the domain loss flows
    d_zc = np.zeros((batch.features.shape[0], 6))
    sign = -1.0 if reverse_domain else 1.0
    grads = _backward_batch(params, cache, d_zp, d_zc, d_zd, domain_sign=sign)
    return breakdown.l_d, grads


def backward_and_step(params: dict[str, np.ndarray], state: AdamState, batch: Batch,
                      loss_cfg: LossConfig) -> LossBreakdown:
    """One adversarial training step; updates params in place.

    Raises TrainingDivergedError on a non-finite loss.
    """
    breakdown, grads = loss_and_grads(params, batch, loss_cfg, reverse_domain=True)
    if not np.isfinite(breakdown.total):
        raise TrainingDivergedError(f"non-finite loss: {breakdown}")
    adam_step(state, params, grads)
    return breakdown


def gradient_check(params: dict[str, np.ndarray], batch: Batch, loss_cfg: LossConfig,
                   step: float = 1e-4) -> float:
    """Max relative error between analytic gradients and central differences.

    Compares the true (un-reversed) gradient of the combined loss over every
    parameter element.  The relative error guards against tiny denominators
    with a 1e-6 floor.
    """
    _, grads = loss_and_grads(params, batch, loss_cfg, reverse_domain=False)
    worst = 0.0
    for name in PARAM_NAMES:
        p = params[name]
        flat = p.ravel()
        g = grads[name].ravel()
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            hi = total_loss(params, batch, loss_cfg)
            flat[j] = orig - step
            lo = total_loss(params, batch, loss_cfg)
            flat[j] = orig
            fd = (hi - lo) / (2.0 * step)
            rel = abs(g[j] - fd) / max(abs(g[j]), abs(fd), 1e-6)
            worst = max(worst, rel)
    return worst
