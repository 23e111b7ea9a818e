"""
Optimization pieces of the head training recipe: linear warm-up/decay schedule, global-norm
gradient clipping and AdamW with decoupled weight decay.
"""

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import DimensionMismatchError, NonFiniteGradientError

if TYPE_CHECKING:
    from .training import TrainConfig


def lr_at_step(cfg: "TrainConfig", step: int, total_steps: int, warmup_steps: Optional[int] = None) -> float:
    """
    Learning rate at ``step``.

    Rises linearly from 0 to ``cfg.peak_lr`` over the warm-up steps, then decays linearly to 0
    at ``total_steps``.

    Args:
        cfg: Training configuration (``peak_lr``, ``warmup_steps``, ``epochs``)
        step: Current step, 0 <= step <= total_steps
        total_steps: Number of optimizer steps of the whole run
        warmup_steps: Overrides ``cfg.warmup_steps``; when both are None, one epoch of steps
    """
    warmup = cfg.warmup_steps if warmup_steps is None else warmup_steps
    if warmup is None:
        warmup = math.ceil(total_steps / cfg.epochs)
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if warmup > total_steps:
        raise ValueError(f"warmup_steps {warmup} exceeds total_steps {total_steps}")
    if step < warmup:
        return cfg.peak_lr * (step / warmup)
    if total_steps == warmup:
        return cfg.peak_lr
    return cfg.peak_lr * ((total_steps - step) / (total_steps - warmup))


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values()))


def clip_gradients(grads: Mapping[str, np.ndarray], clip_norm: float = 5.0) -> Tuple[Dict[str, np.ndarray], float]:
    """
    Scale all gradients by ``clip_norm / g`` when their global L2 norm ``g`` exceeds ``clip_norm``.

    Returns:
        The (possibly scaled) gradients and the norm before clipping
    """
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"gradient {name!r} is not finite")
    norm = global_norm(grads)
    if norm > clip_norm:
        scale = clip_norm / norm
        return {name: g * scale for name, g in grads.items()}, norm
    return dict(grads), norm


@dataclass
class AdamWState:
    """Step counter and moment estimates, one buffer per parameter."""
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    state: AdamWState,
    params: Dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    lr: float,
    cfg: "TrainConfig",
) -> Tuple[Dict[str, np.ndarray], AdamWState]:
    """
    One AdamW update, in place on ``params``.

    m = b1 m + (1 - b1) g, v = b2 v + (1 - b2) g^2, bias-corrected, then
    theta -= lr * m_hat / (sqrt(v_hat) + eps) followed by theta -= lr * wd * theta.
    """
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    beta1, beta2, eps, wd = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.weight_decay
    state.step += 1
    t = state.step
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise DimensionMismatchError(f"gradient {name!r} {g.shape} vs parameter {theta.shape}")
        m = state.m.setdefault(name, np.zeros_like(theta))
        v = state.v.setdefault(name, np.zeros_like(theta))
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        theta -= lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
        if wd:
            theta -= lr * wd * theta
    return params, state
