"""A deliberately small trainable model with hand-written gradients."""

from .adam import AdamState, adam_step, init_adam
from .model import (Batch, ForwardResult, LossConfig, ModelConfig, backward_and_step,
                    domain_loss_grads, forward, gradient_check, init_model,
                    loss_and_grads, make_batch, param_count, predict_batch, total_loss)
from .train import (EpochMetrics, TrainConfig, TrainResult, load_checkpoint,
                    save_checkpoint, train_toy)

__all__ = [
    "AdamState", "adam_step", "init_adam",
    "Batch", "ForwardResult", "LossConfig", "ModelConfig", "backward_and_step",
    "domain_loss_grads", "forward", "gradient_check", "init_model",
    "loss_and_grads", "make_batch", "param_count", "predict_batch", "total_loss",
    "EpochMetrics", "TrainConfig", "TrainResult", "load_checkpoint",
    "save_checkpoint", "train_toy",
]
