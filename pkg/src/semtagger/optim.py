"""Parameter update rules (SGD, Adam) and the step-decay learning-rate schedule.

Optimizers operate on flat dicts of named float64 arrays so the same code
updates encoder tensors and the CRF transition matrix. Steps are functional:
they return fresh arrays / state and never mutate their inputs.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError

DEFAULT_ADAM_LR = 1e-3
DEFAULT_SGD_LR = 1e-2


@dataclass
class LrSchedule:
    """lr(epoch) = base_lr * decay_factor ** floor(epoch / decay_every), 0-indexed."""

    base_lr: float
    decay_factor: float = 0.1
    decay_every: int = 10

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ConfigError(f"base_lr must be positive, got {self.base_lr}")
        if self.decay_every < 1:
            raise ConfigError(f"decay_every must be >= 1, got {self.decay_every}")


def lr_at(schedule: LrSchedule, epoch: int) -> float:
    """Learning rate in effect for the given 0-indexed epoch."""
    if epoch < 0:
        raise ConfigError(f"epoch must be >= 0, got {epoch}")
    return schedule.base_lr * schedule.decay_factor ** (epoch // schedule.decay_every)


@dataclass
class OptimState:
    """Optimizer bookkeeping. Moment dicts exist only for Adam."""

    kind: str                      # "sgd" | "adam"
    step_count: int = 0
    m: dict[str, np.ndarray] | None = None  # first moments
    v: dict[str, np.ndarray] | None = None  # second moments
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optim_state(kind: str, params: dict[str, np.ndarray]) -> OptimState:
    kind = kind.lower()
    if kind == "sgd":
        return OptimState(kind="sgd")
    if kind == "adam":
        m = {name: np.zeros_like(p) for name, p in params.items()}
        v = {name: np.zeros_like(p) for name, p in params.items()}
        return OptimState(kind="adam", m=m, v=v)
    raise ConfigError(f"unknown optimizer {kind!r} (expected 'sgd' or 'adam')")


def _check_shapes(params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
    if params.keys() != grads.keys():
        raise DimensionError(
            f"parameter/gradient name mismatch: {sorted(params)} vs {sorted(grads)}"
        )
    for name in params:
        if params[name].shape != grads[name].shape:
            raise DimensionError(
                f"shape mismatch for {name!r}: "
                f"{params[name].shape} vs {grads[name].shape}"
            )


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             lr: float) -> dict[str, np.ndarray]:
    """Plain gradient descent: p' = p - lr * g."""
    if lr <= 0:
        raise ConfigError(f"lr must be positive, got {lr}")
    _check_shapes(params, grads)
    return {name: params[name] - lr * grads[name] for name in params}


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: OptimState, lr: float) -> tuple[dict[str, np.ndarray], OptimState]:
    """One Adam update with bias correction; returns (new params, new state)."""
    if lr <= 0:
        raise ConfigError(f"lr must be positive, got {lr}")
    if state.kind != "adam" or state.m is None or state.v is None:
        raise ConfigError("adam_step requires an Adam OptimState with moment tensors")
    _check_shapes(params, grads)
    _check_shapes(params, state.m)

    t = state.step_count + 1
    b1, b2 = state.beta1, state.beta2
    bias1 = 1.0 - b1 ** t
    bias2 = 1.0 - b2 ** t
    new_params, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m = b1 * state.m[name] + (1.0 - b1) * g
        v = b2 * state.v[name] + (1.0 - b2) * g * g
        new_m[name] = m
        new_v[name] = v
        new_params[name] = p - lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    new_state = OptimState(kind="adam", step_count=t, m=new_m, v=new_v,
                           beta1=b1, beta2=b2, eps=state.eps)
    return new_params, new_state


def clip_grads(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    if max_norm <= 0:
        raise ConfigError(f"max_norm must be positive, got {max_norm}")
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= max_norm:
        return grads
    scale = max_norm / total
    return {name: g * scale for name, g in grads.items()}
