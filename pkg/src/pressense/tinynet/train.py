"""Desk-scale training loop over synthetic record streams, plus checkpoint files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import RecordParseError
from ..pressure import BinSpec, bin_representatives, make_bin_spec, quantize
from .adam import init_adam
from .model import (Batch, LossConfig, ModelConfig, backward_and_step, init_model,
                    predict_batch)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for train_toy."""

    epochs: int = 30
    batch_size: int = 8
    lr: float = 1e-3
    lr_decay_factor: float = 0.1
    lr_decay_at: float = 1.0 / 3.0   # fraction of epochs after which lr drops
    lambda1: float = 0.01
    lambda2: float = 0.001
    enable_contact: bool = True
    enable_domain: bool = True
    pressure_reduction: str = "mean"  # keeps step sizes grid-independent
    n_bins: int = 9
    p_low: float = 1.0
    p_high: float = 30.0
    hidden_channels: int = 8
    mlp_hidden: int = 8
    seed: int = 0
    eval_threshold: float = 1.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 2:
            raise ValueError("need epochs >= 1 and batch_size >= 2")


@dataclass(frozen=True)
class EpochMetrics:
    """Loss means over an epoch plus held-out metrics."""

    epoch: int
    l_p: float
    l_w: float
    l_d: float
    total: float
    weak_contact_accuracy: float
    full_volumetric_iou: float


@dataclass
class TrainResult:
    """Trained parameters with their model config and the per-epoch history."""

    params: dict[str, np.ndarray]
    model_config: ModelConfig
    history: list[EpochMetrics] = field(default_factory=list)


def _stack_features(records) -> np.ndarray:
    feats = []
    for rec in records:
        if rec.features is None:
            raise ValueError(f"record {rec.session_id}#{rec.frame_index} has no features")
        feats.append(rec.features)
    return np.stack(feats)


def _weak_contact_accuracy(params, x, labels, reps, threshold) -> float:
    probs, _, _ = predict_batch(params, x)
    est = probs @ reps
    est_contact = (est >= threshold).any(axis=(1, 2))
    gt = np.array([lab.any_contact for lab in labels])
    return float((est_contact == gt).mean())


def _full_volumetric_iou(params, x, pressures, reps) -> float:
    probs, _, _ = predict_batch(params, x)
    est = probs @ reps
    gt = np.stack([p.data for p in pressures])
    mins = np.minimum(est, gt).sum(axis=(1, 2))
    maxs = np.maximum(est, gt).sum(axis=(1, 2))
    defined = maxs > 0
    if not defined.any():
        return float("nan")
    return float((mins[defined] / maxs[defined]).mean())


def train_toy(dataset, cfg: TrainConfig) -> TrainResult:
    """Train the small model on a DatasetSplits bundle.

    Baseline runs (both extra losses disabled) consume only the fully-labeled
    stream; otherwise batches mix both domains half and half.  Records the
    weak-domain contact accuracy and full-domain volumetric IoU per epoch.
    """
    if not dataset.full_train:
        raise ValueError("training needs fully-labeled records")
    spec = make_bin_spec(cfg.n_bins, cfg.p_low, cfg.p_high)
    reps = bin_representatives(spec)

    full_x = _stack_features(dataset.full_train)
    full_targets = np.stack([quantize(r.pressure, spec).data for r in dataset.full_train])
    full_labels = [r.label for r in dataset.full_train]
    weak_x = _stack_features(dataset.weak_train) if dataset.weak_train else None
    weak_labels = [r.label for r in dataset.weak_train]

    test_weak_x = _stack_features(dataset.weak_test) if dataset.weak_test else None
    test_weak_labels = [r.label for r in dataset.weak_test]
    test_full_x = _stack_features(dataset.full_test) if dataset.full_test else None
    test_full_pressures = [r.pressure for r in dataset.full_test]

    h, w, c = full_x.shape[1:]
    model_cfg = ModelConfig(width=w, height=h, channels=c,
                            hidden_channels=cfg.hidden_channels,
                            mlp_hidden=cfg.mlp_hidden, n_bins=cfg.n_bins, seed=cfg.seed)
    params = init_model(model_cfg)
    state = init_adam(params, lr=cfg.lr)
    loss_cfg = LossConfig(lambda1=cfg.lambda1, lambda2=cfg.lambda2,
                          enable_contact=cfg.enable_contact,
                          enable_domain=cfg.enable_domain,
                          pressure_reduction=cfg.pressure_reduction)

    mixed = cfg.enable_contact or cfg.enable_domain
    if mixed and weak_x is None:
        raise ValueError("contact/domain losses need weakly-labeled records")

    rng = np.random.default_rng(cfg.seed)
    decay_epoch = max(1, math.ceil(cfg.epochs * cfg.lr_decay_at))
    zeros_t = None
    result = TrainResult(params=params, model_config=model_cfg)

    for epoch in range(cfg.epochs):
        if epoch == decay_epoch:
            state.lr *= cfg.lr_decay_factor
        sums = np.zeros(4)
        n_steps = 0
        if mixed:
            half = cfg.batch_size // 2
            fi = rng.permutation(len(full_x))
            wi = rng.permutation(len(weak_x))
            n_batches = min(len(fi) // half, len(wi) // half)
            for b in range(n_batches):
                fsel = fi[b * half:(b + 1) * half]
                wsel = wi[b * half:(b + 1) * half]
                if zeros_t is None:
                    zeros_t = np.zeros((len(wsel), h, w), dtype=np.int64)
                batch = Batch(
                    features=np.concatenate([full_x[fsel], weak_x[wsel]]),
                    is_full=np.array([True] * len(fsel) + [False] * len(wsel)),
                    bin_targets=np.concatenate([full_targets[fsel], zeros_t[:len(wsel)]]),
                    labels=tuple([full_labels[i] for i in fsel]
                                 + [weak_labels[i] for i in wsel]))
                bd = backward_and_step(params, state, batch, loss_cfg)
                sums += (bd.l_p, bd.l_w, bd.l_d, bd.total)
                n_steps += 1
        else:
            fi = rng.permutation(len(full_x))
            n_batches = len(fi) // cfg.batch_size
            for b in range(n_batches):
                sel = fi[b * cfg.batch_size:(b + 1) * cfg.batch_size]
                batch = Batch(features=full_x[sel],
                              is_full=np.ones(len(sel), dtype=bool),
                              bin_targets=full_targets[sel],
                              labels=tuple(full_labels[i] for i in sel))
                bd = backward_and_step(params, state, batch, loss_cfg)
                sums += (bd.l_p, bd.l_w, bd.l_d, bd.total)
                n_steps += 1
        if n_steps == 0:
            raise ValueError("dataset too small for the configured batch size")

        weak_acc = (_weak_contact_accuracy(params, test_weak_x, test_weak_labels,
                                           reps, cfg.eval_threshold)
                    if test_weak_x is not None else float("nan"))
        full_iou = (_full_volumetric_iou(params, test_full_x, test_full_pressures, reps)
                    if test_full_x is not None else float("nan"))
        means = sums / n_steps
        result.history.append(EpochMetrics(
            epoch=epoch, l_p=means[0], l_w=means[1], l_d=means[2], total=means[3],
            weak_contact_accuracy=weak_acc, full_volumetric_iou=full_iou))
    return result


CHECKPOINT_SCHEMA = 1


def save_checkpoint(path: str, params: dict[str, np.ndarray], model_config: ModelConfig,
                    bins: BinSpec | None = None) -> None:
    """Write parameters, model config, and the bin spec to a JSON checkpoint."""
    if bins is None:
        bins = make_bin_spec(model_config.n_bins)
    payload = {
        "schema": CHECKPOINT_SCHEMA,
        "model": asdict(model_config),
        "bins": {"n_bins": bins.n_bins, "p_low": bins.p_low, "p_high": bins.p_high},
        "params": {name: {"shape": list(p.shape), "data": p.ravel().tolist()}
                   for name, p in params.items()},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True)
        f.write("\n")


def load_checkpoint(path: str) -> tuple[ModelConfig, dict[str, np.ndarray], BinSpec]:
    """Read a checkpoint written by save_checkpoint."""
    with open(path, "r", encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as exc:
            raise RecordParseError(path, exc.lineno, f"invalid JSON: {exc}") from exc
    if payload.get("schema") != CHECKPOINT_SCHEMA:
        raise RecordParseError(path, 1, f"unsupported checkpoint schema {payload.get('schema')!r}")
    try:
        model_cfg = ModelConfig(**payload["model"])
        b = payload["bins"]
        bins = make_bin_spec(b["n_bins"], b["p_low"], b["p_high"])
        params = {name: np.asarray(spec["data"], dtype=np.float64).reshape(spec["shape"])
                  for name, spec in payload["params"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise RecordParseError(path, 1, f"bad checkpoint: {exc}") from exc
    return model_cfg, params, bins
