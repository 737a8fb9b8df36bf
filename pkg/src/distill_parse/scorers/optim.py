"""Adam with a per-epoch learning-rate decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class TrainingError(RuntimeError):
    pass


@dataclass
class OptimizerState:
    """Adam moments plus the schedule.

    ``decay_mode="inverse"`` gives ``rate(e) = lr / (1 + decay * e)``;
    ``"exponential"`` gives ``lr * (1 - decay) ** e``.
    """

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    epoch: int = 0
    learning_rate: float = 1e-3
    decay: float = 0.05
    decay_mode: str = "inverse"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, size: int, **kwargs) -> "OptimizerState":
        return cls(np.zeros(size), np.zeros(size), **kwargs)

    def rate(self, epoch=None) -> float:
        e = self.epoch if epoch is None else epoch
        if self.decay_mode == "inverse":
            return self.learning_rate / (1.0 + self.decay * e)
        if self.decay_mode == "exponential":
            return self.learning_rate * (1.0 - self.decay) ** e
        raise ValueError(f"unknown decay mode {self.decay_mode!r}")


def adam_step(state: OptimizerState, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """One bias-corrected Adam update of ``params`` in place; returns ``params``."""
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != params.shape or state.m.shape != params.shape:
        raise ValueError(f"gradient {grad.shape}, parameters {params.shape}, moments {state.m.shape}")
    if not np.isfinite(grad).all():
        bad = np.flatnonzero(~np.isfinite(grad))
        raise TrainingError(
            f"non-finite gradient at step {state.step + 1}: {len(bad)} entries, first index {bad[0]}"
        )
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grad
    state.v *= b2
    grad = grad * grad
    grad *= 1.0 - b2
    state.v += grad
    # params -= lr * m_hat / (sqrt(v_hat) + eps), with the bias corrections folded in
    denom = np.sqrt(state.v / (1.0 - b2 ** state.step), out=grad)
    denom += state.eps
    step = np.divide(state.m, denom, out=denom)
    step *= state.rate() / (1.0 - b1 ** state.step)
    params -= step
    return params
